#pragma once

#include "easde/sphere.hpp"

#include <cstddef>
#include <vector>

namespace easde {

// k-nearest-neighbour density: f(x) = k / (n * cap_volume(d, r_k(x))) where
// r_k is the chordal distance to the k-th nearest sample point. A zero radius
// (query duplicated k or more times in the sample) yields +infinity.
struct KnnModel {
    std::size_t d = 0;
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<double> data; // n x d, row major
};

KnnModel make_knn(const PointList& data, std::size_t k);
double knn_density(const KnnModel& model, const UnitVector& x);
std::vector<double> knn_density_batch(const KnnModel& model, const PointList& xs);

enum class KdeKernel {
    vmf,             // von Mises-Fisher kernel with concentration 1/h^2
    ambient_gaussian // Euclidean Gaussian in the ambient space, (2 pi h^2)^{-d/2} scale
};

struct KdeModel {
    std::size_t d = 0;
    std::size_t n = 0;
    double bandwidth = 0.0;
    KdeKernel kernel = KdeKernel::ambient_gaussian;
    std::vector<double> data; // n x d, row major
};

KdeModel make_kde(const PointList& data, double bandwidth, KdeKernel kernel);
double kde_density(const KdeModel& model, const UnitVector& x);
std::vector<double> kde_density_batch(const KdeModel& model, const PointList& xs);

} // namespace easde
