#pragma once

#include "easde/baselines.hpp"
#include "easde/eas.hpp"
#include "easde/vmf.hpp"

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace easde {

using DensityFn = std::function<double(const UnitVector&)>;

// Empirical total variation over a test sample, (1/2M) sum |f - fhat|, plus
// the corresponding sup discrepancy.
struct EtvReport {
    double etv = 0.0;
    double sup_error = 0.0;
    std::size_t count = 0;
};

EtvReport etv(const DensityFn& truth, const DensityFn& estimate,
              const PointList& test);
EtvReport etv_from_values(const std::vector<double>& truth,
                          const std::vector<double>& estimate);

// Hyperparameter grids. k grids use the natural logarithm; the bandwidth grid
// is geometric with exact endpoints 0.01 and 1.
std::vector<std::size_t> knn_k_grid(std::size_t n);
std::vector<double> kde_bandwidth_grid();
std::vector<std::size_t> eas_k_grid(std::size_t d, std::size_t m);

struct GridResult {
    double parameter = 0.0;
    double validation_etv = 0.0;
    bool selected = false;
};

struct KnnSelection {
    std::vector<GridResult> grid;
    std::size_t best_k = 0;
};

struct KdeSelection {
    std::vector<GridResult> grid;
    double best_bandwidth = 0.0;
};

struct EasSelection {
    std::vector<GridResult> grid;
    std::size_t best_k = 0;
    EasModel model; // fitted at best_k on the training sample
};

// Exhaustive validation-ETV minimization over the grids; ties resolve to the
// smaller parameter. The EaS search shares one bank across candidates and is
// numerically identical to refitting each candidate from scratch.
KnnSelection select_knn_k(const PointList& train, const PointList& val,
                          const DensityFn& truth);
KdeSelection select_kde_bandwidth(const PointList& train, const PointList& val,
                                  const DensityFn& truth,
                                  KdeKernel kernel = KdeKernel::ambient_gaussian);
EasSelection select_eas_k(std::size_t m, std::size_t d, const PointList& train,
                          const PointList& val, const DensityFn& truth,
                          std::uint64_t bank_seed);

enum class RateFamily { density, mode };

struct RatePoint {
    std::size_t n = 0;
    double mean_error = 0.0;
    double std_dev = 0.0;
    std::vector<double> errors; // one per trial
};

struct RateTable {
    RateFamily family = RateFamily::density;
    std::size_t d = 0;
    std::vector<RatePoint> points;
    double slope = 0.0;
    double slope_stderr = 0.0;
};

// Error-versus-n experiment: for each n, fresh train/validation/test draws,
// m = n, k selected on validation ETV; the recorded error is the test sup
// discrepancy (density family) or the chordal distance from the sample
// maximizer to the first component mean (mode family). The slope is the
// least-squares fit of log(mean error) against log(n).
RateTable rate_experiment(RateFamily family, std::size_t d,
                          const VmfMixture& truth,
                          const std::vector<std::size_t>& n_grid,
                          std::size_t trials, std::uint64_t seed);

// (slope, standard error) of log(errors) regressed on log(ns).
std::pair<double, double> fit_loglog_slope(const std::vector<double>& ns,
                                           const std::vector<double>& errors);

} // namespace easde
