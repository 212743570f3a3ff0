#include "easde/baselines.hpp"
#include "easde/detail/parallel.hpp"
#include "easde/vmf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace easde {

namespace {

std::vector<double> flatten(const PointList& data, std::size_t& d)
{
    if (data.empty())
        throw std::invalid_argument("baseline: empty data");
    d = data[0].dim();
    std::vector<double> flat;
    flat.reserve(data.size() * d);
    for (const UnitVector& x : data) {
        if (x.dim() != d)
            throw std::invalid_argument("baseline: mixed dimensions in data");
        flat.insert(flat.end(), x.coords().begin(), x.coords().end());
    }
    return flat;
}

} // namespace

KnnModel make_knn(const PointList& data, std::size_t k)
{
    KnnModel model;
    model.data = flatten(data, model.d);
    model.n = data.size();
    model.k = k;
    if (k < 1 || k > model.n)
        throw std::invalid_argument("make_knn: k must lie in [1, n]");
    return model;
}

double knn_density(const KnnModel& model, const UnitVector& x)
{
    if (x.dim() != model.d)
        throw std::invalid_argument("knn_density: dimension mismatch");
    const std::size_t n = model.n, d = model.d;
    thread_local std::vector<double> sq;
    sq.resize(n);
    const double* q = x.coords().data();
    const double* rows = model.data.data();
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        const double* r = rows + i * d;
        for (std::size_t t = 0; t < d; ++t)
            dot += r[t] * q[t];
        sq[i] = std::max(0.0, 2.0 - 2.0 * dot); // |x - r|^2 on the sphere
    }
    std::nth_element(sq.begin(), sq.begin() + (model.k - 1), sq.end());
    double rk = std::sqrt(sq[model.k - 1]);
    if (rk == 0.0)
        return std::numeric_limits<double>::infinity();
    return static_cast<double>(model.k)
         / (static_cast<double>(n) * cap_volume(d, rk));
}

std::vector<double> knn_density_batch(const KnnModel& model, const PointList& xs)
{
    std::vector<double> out(xs.size());
    detail::parallel_for(xs.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            out[i] = knn_density(model, xs[i]);
    });
    return out;
}

KdeModel make_kde(const PointList& data, double bandwidth, KdeKernel kernel)
{
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
        throw std::invalid_argument("make_kde: bandwidth must be positive and finite");
    KdeModel model;
    model.data = flatten(data, model.d);
    model.n = data.size();
    model.bandwidth = bandwidth;
    model.kernel = kernel;
    return model;
}

double kde_density(const KdeModel& model, const UnitVector& x)
{
    if (x.dim() != model.d)
        throw std::invalid_argument("kde_density: dimension mismatch");
    const std::size_t n = model.n, d = model.d;
    const double h = model.bandwidth;
    const double* q = x.coords().data();
    const double* rows = model.data.data();

    thread_local std::vector<double> dots;
    dots.resize(n);
    double maxdot = -2.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        const double* r = rows + i * d;
        for (std::size_t t = 0; t < d; ++t)
            dot += r[t] * q[t];
        dots[i] = dot;
        maxdot = std::max(maxdot, dot);
    }

    // Both kernels depend on the inner product alone; the shared shifted sum
    // keeps the exponentials in range for small bandwidths.
    if (model.kernel == KdeKernel::vmf) {
        double kappa = 1.0 / (h * h);
        double nu = 0.5 * static_cast<double>(d) - 1.0;
        double logc = nu * std::log(kappa)
                    - 0.5 * static_cast<double>(d) * std::log(2.0 * M_PI)
                    - log_bessel_i(nu, kappa);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            s += std::exp(kappa * (dots[i] - maxdot));
        return std::exp(logc + kappa * maxdot + std::log(s / static_cast<double>(n)));
    }
    double inv = 1.0 / (h * h);
    double logc = -0.5 * static_cast<double>(d) * std::log(2.0 * M_PI * h * h);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        s += std::exp(inv * (dots[i] - maxdot));
    return std::exp(logc + inv * (maxdot - 1.0) + std::log(s / static_cast<double>(n)));
}

std::vector<double> kde_density_batch(const KdeModel& model, const PointList& xs)
{
    std::vector<double> out(xs.size());
    detail::parallel_for(xs.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            out[i] = kde_density(model, xs[i]);
    });
    return out;
}

} // namespace easde
