#pragma once

#include "easde/sphere.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace easde {

//! One von Mises-Fisher component on S^{d-1}: mean direction and
//! concentration kappa > 0.
struct VmfComponent {
    UnitVector mu;
    double kappa;
};

//! Convex mixture of vMF components sharing one dimension. Weights must be
//! positive and sum to 1 within 1e-12.
class VmfMixture {
public:
    VmfMixture(std::vector<VmfComponent> components, std::vector<double> weights);

    std::size_t size() const { return components_.size(); }
    std::size_t dim() const { return components_.front().mu.dim(); }
    const VmfComponent& component(std::size_t i) const { return components_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }

private:
    std::vector<VmfComponent> components_;
    std::vector<double> weights_;
};

//! log I_nu(kappa) for nu >= 0, kappa > 0. Power series in the moderate
//! regime, asymptotic expansion beyond kappa = 50 * max(1, sqrt(nu)).
double log_bessel_i(double nu, double kappa);

//! vMF density at x, computed in log space and exponentiated once.
double vmf_pdf(const VmfComponent& c, const UnitVector& x);

//! Mixture density: weighted sum of component densities.
double mixture_pdf(const VmfMixture& mix, const UnitVector& x);

//! count i.i.d. vMF draws. Rejection sampling of the mean-axis marginal from
//! a Beta envelope, uniform tangential direction, Householder rotation to mu.
PointList vmf_sample(const VmfComponent& c, std::size_t count, std::uint64_t seed);

//! count i.i.d. mixture draws: component by weight, then one vMF draw.
PointList mixture_sample(const VmfMixture& mix, std::size_t count, std::uint64_t seed);

//! A uniformly random mean plus a second mean at the given geodesic angle,
//! reached along a uniformly random tangent direction.
std::pair<UnitVector, UnitVector> mean_pair(std::size_t d, double angle, std::uint64_t seed);

} // namespace easde
