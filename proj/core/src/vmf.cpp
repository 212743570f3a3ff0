// von Mises-Fisher densities and samplers. The only nontrivial numerics is
// log I_nu; everything else is bookkeeping around it.

#include "easde/vmf.hpp"
#include "easde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace easde {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Power series sum(t) (kappa/2)^{nu+2t} / (t! Gamma(nu+t+1)) accumulated as a
// streaming log-sum-exp; all terms are positive, so no cancellation.
double log_bessel_series(double nu, double kappa)
{
    const double lx = std::log(0.5 * kappa);
    double l = nu * lx - std::lgamma(nu + 1.0);
    double peak = l;
    double sum = 1.0;
    double prev = l;
    for (long t = 1; t < 1000000; ++t) {
        double td = static_cast<double>(t);
        l = (nu + 2.0 * td) * lx - std::lgamma(td + 1.0) - std::lgamma(nu + td + 1.0);
        if (l > peak) {
            sum = sum * std::exp(peak - l) + 1.0;
            peak = l;
        } else {
            sum += std::exp(l - peak);
        }
        if (l < peak - 50.0 && l < prev)
            break;
        prev = l;
    }
    return peak + std::log(sum);
}

// Large-argument expansion, adequate for small orders.
double log_bessel_hankel(double nu, double kappa)
{
    const double mu4 = 4.0 * nu * nu;
    double term = 1.0, sum = 1.0;
    for (int t = 0; t < 60; ++t) {
        double odd = 2.0 * t + 1.0;
        double next = -term * (mu4 - odd * odd) / (8.0 * kappa * (t + 1.0));
        if (std::fabs(next) >= std::fabs(term))
            break; // asymptotic tail turned; truncate at the smallest term
        sum += next;
        term = next;
        if (std::fabs(next) < 1e-18 * std::fabs(sum))
            break;
    }
    return kappa - 0.5 * std::log(2.0 * kPi * kappa) + std::log(sum);
}

// Debye polynomials u_k for the large-order uniform expansion, generated by
// u_{k+1} = t^2(1-t^2)/2 u_k' + 1/8 int_0^t (1-5 s^2) u_k(s) ds.
const std::vector<std::vector<double>>& debye_polynomials()
{
    static const std::vector<std::vector<double>> polys = [] {
        std::vector<std::vector<double>> out;
        out.push_back({1.0});
        for (int k = 0; k < 10; ++k) {
            const std::vector<double>& u = out.back();
            std::vector<double> next(u.size() + 3, 0.0);
            // t^2(1-t^2)/2 * u'
            for (std::size_t p = 1; p < u.size(); ++p) {
                double dc = u[p] * static_cast<double>(p);
                next[p + 1] += 0.5 * dc;
                next[p + 3] -= 0.5 * dc;
            }
            // 1/8 int_0^t (1 - 5 s^2) u(s) ds
            for (std::size_t p = 0; p < u.size(); ++p) {
                next[p + 1] += 0.125 * u[p] / static_cast<double>(p + 1);
                next[p + 3] -= 0.625 * u[p] / static_cast<double>(p + 3);
            }
            out.push_back(std::move(next));
        }
        return out;
    }();
    return polys;
}

double poly_eval(const std::vector<double>& c, double x)
{
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 0;)
        v = v * x + c[i];
    return v;
}

// Large-order uniform expansion (Debye), used when both nu and kappa are big.
double log_bessel_uniform(double nu, double kappa)
{
    const double z = kappa / nu;
    const double w = std::sqrt(1.0 + z * z);
    const double t = 1.0 / w;
    const double eta = w + std::log(z / (1.0 + w));
    const auto& polys = debye_polynomials();
    double sum = 0.0, scale = 1.0;
    for (std::size_t k = 0; k < polys.size(); ++k) {
        double term = poly_eval(polys[k], t) * scale;
        sum += term;
        if (std::fabs(term) < 1e-17 * std::fabs(sum))
            break;
        scale /= nu;
    }
    return nu * eta - 0.5 * std::log(2.0 * kPi * nu) - 0.5 * std::log(w) + std::log(sum);
}

// log of the vMF normalizer kappa^{d/2-1} / ((2 pi)^{d/2} I_{d/2-1}(kappa)).
// Sequential scans evaluate many points at one (d, kappa); cache the last.
double log_vmf_norm(std::size_t d, double kappa)
{
    thread_local std::size_t cached_d = 0;
    thread_local double cached_kappa = -1.0, cached_value = 0.0;
    if (cached_d == d && cached_kappa == kappa)
        return cached_value;
    double nu = 0.5 * static_cast<double>(d) - 1.0;
    double v = nu * std::log(kappa) - 0.5 * static_cast<double>(d) * std::log(2.0 * kPi)
             - log_bessel_i(nu, kappa);
    cached_d = d;
    cached_kappa = kappa;
    cached_value = v;
    return v;
}

void check_component(const VmfComponent& c)
{
    if (!(c.kappa > 0.0) || !std::isfinite(c.kappa))
        throw std::domain_error("vmf: kappa must be positive and finite");
}

// Precomputed Wood envelope constants for one component.
struct WoodParams {
    double b, x0, c;
    std::vector<double> householder; // empty when mu is already e_1
};

WoodParams wood_params(const VmfComponent& comp)
{
    std::size_t d = comp.mu.dim();
    double kappa = comp.kappa;
    double dm1 = static_cast<double>(d - 1);
    WoodParams p;
    p.b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
    p.x0 = (1.0 - p.b) / (1.0 + p.b);
    p.c = kappa * p.x0 + dm1 * std::log(1.0 - p.x0 * p.x0);
    double nsq = 2.0 * (1.0 - comp.mu[0]);
    if (nsq > 1e-28) {
        p.householder.resize(d);
        p.householder[0] = 1.0 - comp.mu[0];
        for (std::size_t i = 1; i < d; ++i)
            p.householder[i] = -comp.mu[i];
        double inv = 1.0 / std::sqrt(nsq);
        for (double& u : p.householder)
            u *= inv;
    }
    return p;
}

UnitVector vmf_draw(Rng& rng, const VmfComponent& comp, const WoodParams& p)
{
    std::size_t d = comp.mu.dim();
    double kappa = comp.kappa;
    double dm1 = static_cast<double>(d - 1);
    double w;
    for (;;) {
        double z = rng.beta(0.5 * dm1, 0.5 * dm1);
        w = (1.0 - (1.0 + p.b) * z) / (1.0 - (1.0 - p.b) * z);
        double u = rng.uniform_pos();
        if (kappa * w + dm1 * std::log(1.0 - p.x0 * w) - p.c >= std::log(u))
            break;
    }
    // Uniform tangential direction, then lift: y = (w, sqrt(1-w^2) v).
    std::vector<double> v(d - 1);
    double s;
    do {
        s = 0.0;
        for (std::size_t i = 0; i + 1 < d; ++i) {
            v[i] = rng.normal();
            s += v[i] * v[i];
        }
    } while (s < 1e-300);
    double tangent = std::sqrt(std::max(0.0, 1.0 - w * w)) / std::sqrt(s);
    std::vector<double> y(d);
    y[0] = w;
    for (std::size_t i = 1; i < d; ++i)
        y[i] = v[i - 1] * tangent;
    if (!p.householder.empty()) {
        double dot = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            dot += p.householder[i] * y[i];
        for (std::size_t i = 0; i < d; ++i)
            y[i] -= 2.0 * dot * p.householder[i];
    }
    return UnitVector(std::move(y));
}

} // namespace

VmfMixture::VmfMixture(std::vector<VmfComponent> components, std::vector<double> weights)
    : components_(std::move(components)), weights_(std::move(weights))
{
    if (components_.empty())
        throw std::invalid_argument("VmfMixture: needs at least one component");
    if (components_.size() != weights_.size())
        throw std::invalid_argument("VmfMixture: component/weight count mismatch");
    std::size_t d = components_.front().mu.dim();
    double total = 0.0;
    for (std::size_t i = 0; i < components_.size(); ++i) {
        check_component(components_[i]);
        if (components_[i].mu.dim() != d)
            throw std::invalid_argument("VmfMixture: inconsistent dimensions");
        if (!(weights_[i] > 0.0))
            throw std::invalid_argument("VmfMixture: weights must be positive");
        total += weights_[i];
    }
    if (std::fabs(total - 1.0) > 1e-12)
        throw std::invalid_argument("VmfMixture: weights must sum to 1");
}

double log_bessel_i(double nu, double kappa)
{
    if (!(nu >= 0.0))
        throw std::domain_error("log_bessel_i: order must be nonnegative");
    if (!(kappa > 0.0))
        throw std::domain_error("log_bessel_i: argument must be positive");
    double threshold = 50.0 * std::max(1.0, std::sqrt(nu));
    if (kappa <= threshold)
        return log_bessel_series(nu, kappa);
    if (nu <= 20.0)
        return log_bessel_hankel(nu, kappa);
    return log_bessel_uniform(nu, kappa);
}

double vmf_pdf(const VmfComponent& c, const UnitVector& x)
{
    check_component(c);
    if (c.mu.dim() != x.dim())
        throw std::invalid_argument("vmf_pdf: dimension mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < x.dim(); ++i)
        dot += c.mu[i] * x[i];
    return std::exp(log_vmf_norm(x.dim(), c.kappa) + c.kappa * dot);
}

double mixture_pdf(const VmfMixture& mix, const UnitVector& x)
{
    double f = 0.0;
    for (std::size_t i = 0; i < mix.size(); ++i)
        f += mix.weight(i) * vmf_pdf(mix.component(i), x);
    return f;
}

PointList vmf_sample(const VmfComponent& c, std::size_t count, std::uint64_t seed)
{
    check_component(c);
    Rng rng(seed);
    WoodParams p = wood_params(c);
    PointList out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(vmf_draw(rng, c, p));
    return out;
}

PointList mixture_sample(const VmfMixture& mix, std::size_t count, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<WoodParams> params;
    params.reserve(mix.size());
    for (std::size_t i = 0; i < mix.size(); ++i)
        params.push_back(wood_params(mix.component(i)));
    PointList out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        double u = rng.uniform();
        std::size_t c = 0;
        double acc = mix.weight(0);
        while (c + 1 < mix.size() && u >= acc) {
            ++c;
            acc += mix.weight(c);
        }
        out.push_back(vmf_draw(rng, mix.component(c), params[c]));
    }
    return out;
}

std::pair<UnitVector, UnitVector> mean_pair(std::size_t d, double angle, std::uint64_t seed)
{
    if (d < 2)
        throw std::invalid_argument("mean_pair: d must be at least 2");
    if (!std::isfinite(angle) || !(angle > 0.0) || angle > 3.14159265358979323846264338327950288)
        throw std::domain_error("mean_pair: angle must lie in (0, pi]");
    Rng rng(seed);
    std::vector<double> g(d);
    double s;
    do {
        s = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            g[i] = rng.normal();
            s += g[i] * g[i];
        }
    } while (s < 1e-300);
    double inv = 1.0 / std::sqrt(s);
    std::vector<double> m1(d);
    for (std::size_t i = 0; i < d; ++i)
        m1[i] = g[i] * inv;
    // Tangent direction: project a fresh Gaussian off m1, normalize.
    std::vector<double> t(d);
    for (;;) {
        double dot = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            t[i] = rng.normal();
            dot += t[i] * m1[i];
        }
        double ns = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            t[i] -= dot * m1[i];
            ns += t[i] * t[i];
        }
        if (ns > 1e-16) {
            double tin = 1.0 / std::sqrt(ns);
            for (double& x : t)
                x *= tin;
            break;
        }
    }
    double ca = std::cos(angle), sa = std::sin(angle);
    std::vector<double> m2(d);
    for (std::size_t i = 0; i < d; ++i)
        m2[i] = ca * m1[i] + sa * t[i];
    return {UnitVector(std::move(m1)), UnitVector(std::move(m2))};
}

} // namespace easde
