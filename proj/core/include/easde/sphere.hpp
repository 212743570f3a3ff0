#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace easde {

//! Point on the unit sphere S^{d-1}, d >= 2. Inputs within 1e-6 of unit
//! length are renormalized on construction; anything farther is rejected.
class UnitVector {
public:
    explicit UnitVector(std::vector<double> coords);

    std::size_t dim() const { return coords_.size(); }
    double operator[](std::size_t i) const { return coords_[i]; }
    const std::vector<double>& coords() const { return coords_; }

private:
    std::vector<double> coords_;
};

using PointList = std::vector<UnitVector>;

//! Spherical cap B(center, radius), radius measured in the chordal metric.
struct CapSpec {
    UnitVector center;
    double radius; // in [0, 2]
};

//! Surface area of S^{d-1}: 2 pi^{d/2} / Gamma(d/2).
double surface_area(std::size_t d);

//! count i.i.d. points uniform on S^{d-1} (normalized Gaussians).
PointList sample_uniform(std::size_t d, std::size_t count, std::uint64_t seed);

//! Normalized surface measure of a cap of chordal radius r; exact via the
//! Beta law of a uniform coordinate. Monotone in r, cap_mass(d, 2) = 1.
double cap_mass(std::size_t d, double radius);

//! Inverse of cap_mass in its radius argument, by bisection on [0, 2].
double cap_radius(std::size_t d, double mass);

//! Unnormalized cap area: cap_mass * surface_area.
double cap_volume(std::size_t d, double radius);

//! Chordal (Euclidean) distance between two points of equal dimension.
double chord_dist(const UnitVector& a, const UnitVector& b);

namespace detail {

//! Regularized incomplete beta I_x(a, b), continued fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

} // namespace detail

} // namespace easde
