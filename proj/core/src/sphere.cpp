// Geometry of spherical caps in the chordal metric. Everything here reduces
// to the Beta law of a single coordinate of a uniform point on S^{d-1}.

#include "easde/sphere.hpp"
#include "easde/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace easde {

UnitVector::UnitVector(std::vector<double> coords) : coords_(std::move(coords))
{
    if (coords_.size() < 2)
        throw std::invalid_argument("UnitVector: dimension must be at least 2");
    double s = 0.0;
    for (double c : coords_) {
        if (!std::isfinite(c))
            throw std::invalid_argument("UnitVector: non-finite coordinate");
        s += c * c;
    }
    double norm = std::sqrt(s);
    if (std::fabs(norm - 1.0) > 1e-6)
        throw std::invalid_argument("UnitVector: norm deviates from 1 by more than 1e-6 (norm=" + std::to_string(norm) + ")");
    if (norm != 1.0) {
        for (double& c : coords_)
            c /= norm;
    }
}

double surface_area(std::size_t d)
{
    if (d < 2)
        throw std::invalid_argument("surface_area: d must be at least 2");
    const double pi = 3.14159265358979323846;
    return 2.0 * std::pow(pi, 0.5 * static_cast<double>(d)) / std::tgamma(0.5 * static_cast<double>(d));
}

PointList sample_uniform(std::size_t d, std::size_t count, std::uint64_t seed)
{
    if (d < 2)
        throw std::invalid_argument("sample_uniform: d must be at least 2");
    Rng rng(seed);
    PointList out;
    out.reserve(count);
    std::vector<double> v(d);
    for (std::size_t i = 0; i < count; ++i) {
        double s;
        do {
            s = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                v[j] = rng.normal();
                s += v[j] * v[j];
            }
        } while (s < 1e-300);
        double inv = 1.0 / std::sqrt(s);
        std::vector<double> p(d);
        for (std::size_t j = 0; j < d; ++j)
            p[j] = v[j] * inv;
        out.emplace_back(std::move(p));
    }
    return out;
}

namespace detail {

namespace {

// Continued fraction for the incomplete beta (modified Lentz iteration).
double beta_cf(double a, double b, double x)
{
    const double tiny = 1e-300;
    const double eps = 1e-16;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny)
        d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny)
            d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny)
            d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps)
            break;
    }
    return h;
}

} // namespace

double regularized_incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0) || !(b > 0.0))
        throw std::domain_error("regularized_incomplete_beta: a, b must be positive");
    if (x < 0.0 || x > 1.0)
        throw std::domain_error("regularized_incomplete_beta: x outside [0, 1]");
    if (x == 0.0)
        return 0.0;
    if (x == 1.0)
        return 1.0;
    double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b)
               + a * std::log(x) + b * std::log1p(-x);
    double bt = std::exp(lbt);
    if (x < (a + 1.0) / (a + b + 2.0))
        return bt * beta_cf(a, b, x) / a;
    return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

} // namespace detail

double cap_mass(std::size_t d, double radius)
{
    if (d < 2)
        throw std::invalid_argument("cap_mass: d must be at least 2");
    if (!(radius >= 0.0) || radius > 2.0)
        throw std::domain_error("cap_mass: radius outside [0, 2]");
    if (radius == 0.0)
        return 0.0;
    if (radius == 2.0)
        return 1.0;
    double r2 = radius * radius;
    if (r2 > 2.0) {
        // Complement of the antipodal cap; chord sandwich r^2 + r'^2 = 4.
        return 1.0 - cap_mass(d, std::sqrt(4.0 - r2));
    }
    // theta_1 of a uniform point has theta_1^2 ~ Beta(1/2, (d-1)/2), and the
    // cap is {theta_1 >= 1 - r^2/2} with a nonnegative threshold here.
    const double a = 0.5;
    const double b = 0.5 * static_cast<double>(d - 1);
    // The beta argument is 1 - t^2 with t = 1 - r^2/2. Each side of the
    // complement identity keeps its argument in the half where it is
    // computable without cancellation: t^2 degrades near r = 0, 1 - t^2
    // degrades near the hemisphere.
    double t = (2.0 - r2) / 2.0;
    double t2 = t * t;
    if (t2 <= 0.5)
        return 0.5 * (1.0 - detail::regularized_incomplete_beta(a, b, t2));
    double one_minus_z = r2 * (4.0 - r2) / 4.0;
    return 0.5 * detail::regularized_incomplete_beta(b, a, one_minus_z);
}

double cap_radius(std::size_t d, double mass)
{
    if (d < 2)
        throw std::invalid_argument("cap_radius: d must be at least 2");
    if (!(mass >= 0.0) || mass > 1.0)
        throw std::domain_error("cap_radius: mass outside [0, 1]");
    if (mass == 0.0)
        return 0.0;
    if (mass == 1.0)
        return 2.0;
    // Bisection: the mass-radius map is continuous and strictly increasing,
    // but its derivative vanishes at both endpoints, so no Newton here.
    double lo = 0.0, hi = 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        double mid = 0.5 * (lo + hi);
        if (cap_mass(d, mid) < mass)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double cap_volume(std::size_t d, double radius)
{
    return cap_mass(d, radius) * surface_area(d);
}

double chord_dist(const UnitVector& a, const UnitVector& b)
{
    if (a.dim() != b.dim())
        throw std::invalid_argument("chord_dist: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        double t = a[i] - b[i];
        s += t * t;
    }
    return std::sqrt(s);
}

} // namespace easde
