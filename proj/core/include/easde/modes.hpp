#pragma once

#include "easde/eas.hpp"
#include "easde/sphere.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace easde {

// Distance to the k-th nearest other sample point, for every sample.
// Requires 1 <= k <= n - 1.
std::vector<double> knn_radii(const PointList& data, std::size_t k);

// Level-set graph over the sample: vertices are the points with fhat >= lambda,
// and two vertices are adjacent iff |x_i - x_j| <= alpha * min(rk_i, rk_j).
struct DensityGraph {
    std::size_t d = 0;
    std::size_t n = 0;
    std::vector<double> points; // n x d, row major
    std::vector<double> fhat;
    std::vector<double> rk;
    double alpha = 0.0; // >= sqrt(2)
    double lambda = 0.0;
};

DensityGraph build_density_graph(const PointList& points,
                                 std::vector<double> fhat,
                                 std::vector<double> rk,
                                 double alpha, double lambda);

// Partition of the vertex set of G(lambda). Members of each component are
// sorted ascending; components are ordered by smallest member.
std::vector<std::vector<std::size_t>> connected_components(const DensityGraph& graph);

// Sample index maximizing the fitted density (ties to the smaller index).
std::size_t single_mode_index(const EasModel& model, const PointList& data);
UnitVector single_mode(const EasModel& model, const PointList& data);

struct Mode {
    std::size_t sample_index = 0;
    double fhat = 0.0;
    double discovery_level = 0.0;
};

// Modes in discovery order; discovery levels are nonincreasing.
struct ModeSet {
    std::vector<Mode> modes;
};

// Statistical slack of the estimator at confidence 1 - delta, expressed on the
// density scale: gamma = alpha_n / (S_{d-1} k / m) with
// alpha_n = 2 sqrt(k S sup_f log(m/delta) / (m n)) + 2 log(m/delta) / (3 n).
double gamma_n(std::size_t d, std::size_t m, std::size_t k, std::size_t n,
               double sup_f, double delta);

// gamma_n with the training sup of the fitted density standing in for the
// unknown sup of f, at delta = 0.05.
double auto_eps(const EasModel& model);

inline double default_graph_alpha() { return 1.4142135623730951; } // sqrt(2)

// The level-descent recovery procedure on precomputed vertex data: walk the
// distinct density values from highest to lowest; at level L the components of
// the graph on {fhat >= L - eps_tilde} that contain no previously returned
// mode and reach level L each contribute their density maximizer.
ModeSet recover_modes_from_density(const PointList& points,
                                   const std::vector<double>& fhat,
                                   const std::vector<double>& rk,
                                   double alpha, double eps_tilde);

// Convenience wrapper: densities from the fitted model, radii from the sample.
// k_graph = 0 selects the model's own k; eps_tilde = nullopt selects auto_eps.
ModeSet recover_modes(const EasModel& model, const PointList& data,
                      std::size_t k_graph = 0,
                      double alpha = 1.4142135623730951,
                      std::optional<double> eps_tilde = std::nullopt);

void write_mode_csv(const ModeSet& set, const PointList& points,
                    const std::string& path);

} // namespace easde
