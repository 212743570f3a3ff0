#pragma once

#include "easde/sphere.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace easde {

//! Random projection bank: m unit rows in R^d, i.i.d. uniform on S^{d-1}.
struct ProjectionBank {
    std::size_t d = 0;
    std::size_t m = 0;
    std::uint64_t seed = 0;
    std::vector<double> rows; // m x d, row-major, each row unit norm
};

ProjectionBank make_bank(std::size_t d, std::size_t m, std::uint64_t seed);

//! Bank with caller-supplied rows (fixtures, tests). Rows are validated.
ProjectionBank bank_from_rows(std::size_t d, const std::vector<std::vector<double>>& rows);

//! k-sparse binary code as a strictly increasing index list.
struct SparseCode {
    std::vector<std::uint32_t> indices;
};

//! Indices of the k largest bank activations for x, ordered by decreasing
//! activation with ties broken toward the smaller index. encode() is the
//! ascending sort of this list; its prefixes give the codes for smaller k.
std::vector<std::uint32_t> ranked_topk(const ProjectionBank& bank, std::size_t k,
                                       const UnitVector& x);

//! Top-k indicator code of x. Scale-free in x by construction.
SparseCode encode(const ProjectionBank& bank, std::size_t k, const UnitVector& x);

//! ranked_topk for every point of xs, flattened row-major (xs.size() x k).
std::vector<std::uint32_t> ranked_topk_batch(const ProjectionBank& bank,
                                             std::size_t k, const PointList& xs);

//! Fitted density estimator: per-coordinate activation counts over a sample.
struct EasModel {
    ProjectionBank bank;
    std::size_t k = 0;
    std::vector<std::uint64_t> counts; // size m, sum == n * k
    std::size_t n = 0;
    double norm_const = 0.0;     // m / (k^2 * surface_area(d))
    double sup_fhat_train = 0.0; // max fitted density over the training sample
};

EasModel fit(const ProjectionBank& bank, std::size_t k, const PointList& data);

//! Density estimate at x: norm_const times the mean empirical mass of the
//! regions activated by x.
double evaluate(const EasModel& model, const UnitVector& x);

//! Batch evaluation; identical numbers to evaluate() point by point.
std::vector<double> evaluate_batch(const EasModel& model, const PointList& xs);

//! Versioned binary model file; load(save(model)) reproduces evaluations
//! bit for bit.
void save_model(const EasModel& model, const std::string& path);
EasModel load_model(const std::string& path);

//! Monte-Carlo region statistics for sampled coordinates.
struct RegionStat {
    std::uint32_t index = 0;
    std::size_t probe_count = 0;
    double ratio = 0.0;    // measured volume over nominal surface_area*k/m
    double diameter = 0.0; // max pairwise chordal distance among its probes
};

struct RegionReport {
    std::size_t d = 0, m = 0, k = 0, probes = 0;
    double nominal_fraction = 0.0; // k / m
    double diameter_bound = 0.0;   // (4/sqrt 3) (6 sqrt(d) k/m)^{1/(d-1)}
    double ratio_min = 0.0, ratio_max = 0.0, ratio_mean = 0.0;
    double diameter_max = 0.0;
    std::vector<RegionStat> regions;
};

//! Probes the sphere uniformly and reports volume ratios and diameters for
//! a deterministic sample of regions (all of them when m <= regions).
RegionReport region_diagnostics(const ProjectionBank& bank, std::size_t k,
                                std::size_t probes, std::uint64_t seed,
                                std::size_t regions = 100);

} // namespace easde
