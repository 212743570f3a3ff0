#include "easde/evaluation.hpp"
#include "easde/detail/parallel.hpp"
#include "easde/modes.hpp"
#include "easde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace easde {

namespace {

std::vector<double> map_fn(const DensityFn& fn, const PointList& xs)
{
    std::vector<double> out(xs.size());
    detail::parallel_for(xs.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            out[i] = fn(xs[i]);
    });
    return out;
}

} // namespace

EtvReport etv_from_values(const std::vector<double>& truth,
                          const std::vector<double>& estimate)
{
    if (truth.empty() || truth.size() != estimate.size())
        throw std::invalid_argument("etv: value lists must be nonempty and equal-sized");
    EtvReport rep;
    rep.count = truth.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        double diff = std::fabs(truth[i] - estimate[i]);
        sum += diff;
        rep.sup_error = std::max(rep.sup_error, diff);
    }
    rep.etv = sum / (2.0 * static_cast<double>(rep.count));
    return rep;
}

EtvReport etv(const DensityFn& truth, const DensityFn& estimate,
              const PointList& test)
{
    if (test.empty())
        throw std::invalid_argument("etv: empty test set");
    return etv_from_values(map_fn(truth, test), map_fn(estimate, test));
}

std::vector<std::size_t> knn_k_grid(std::size_t n)
{
    if (n < 2)
        throw std::invalid_argument("knn_k_grid: n must be at least 2");
    const double nd = static_cast<double>(n);
    const double raw[] = {1.0,
                          10.0,
                          50.0,
                          std::log(nd),
                          std::sqrt(nd),
                          nd / 8.0,
                          nd / 4.0,
                          nd / 2.0,
                          3.0 * nd / 4.0};
    std::set<std::size_t> grid;
    for (double v : raw) {
        long long r = std::llround(v);
        r = std::max(1ll, std::min(r, static_cast<long long>(n) - 1));
        grid.insert(static_cast<std::size_t>(r));
    }
    return {grid.begin(), grid.end()};
}

std::vector<double> kde_bandwidth_grid()
{
    std::vector<double> grid(20);
    grid.front() = 0.01;
    grid.back() = 1.0;
    for (std::size_t i = 1; i + 1 < grid.size(); ++i)
        grid[i] = std::pow(10.0, -2.0 + 2.0 * static_cast<double>(i) / 19.0);
    return grid;
}

std::vector<std::size_t> eas_k_grid(std::size_t d, std::size_t m)
{
    if (d < 2 || m == 0)
        throw std::invalid_argument("eas_k_grid: d >= 2 and m >= 1 required");
    long long center =
        std::llround(static_cast<double>(d) * std::log(static_cast<double>(m)));
    std::set<std::size_t> grid;
    for (long long k = center - 8; k <= center + 8; ++k) {
        long long c = std::max(1ll, std::min(k, static_cast<long long>(m)));
        grid.insert(static_cast<std::size_t>(c));
    }
    return {grid.begin(), grid.end()};
}

KnnSelection select_knn_k(const PointList& train, const PointList& val,
                          const DensityFn& truth)
{
    if (train.size() < 2)
        throw std::invalid_argument("select_knn_k: need at least two training points");
    if (val.empty())
        throw std::invalid_argument("select_knn_k: empty validation set");
    const std::size_t n = train.size();
    const std::size_t d = train[0].dim();
    const std::vector<std::size_t> grid = knn_k_grid(n);
    const std::size_t kmax = grid.back();
    const std::vector<double> truth_vals = map_fn(truth, val);

    // One sorted distance pass per validation point serves every k: the k-th
    // order statistic equals what a per-k partial selection would produce.
    std::vector<double> flat;
    flat.reserve(n * d);
    for (const UnitVector& x : train)
        flat.insert(flat.end(), x.coords().begin(), x.coords().end());
    std::vector<std::vector<double>> fhat(grid.size(),
                                          std::vector<double>(val.size()));
    detail::parallel_for(val.size(), [&](std::size_t b, std::size_t e) {
        std::vector<double> sq(n);
        for (std::size_t v = b; v < e; ++v) {
            const double* q = val[v].coords().data();
            for (std::size_t i = 0; i < n; ++i) {
                double dot = 0.0;
                const double* r = flat.data() + i * d;
                for (std::size_t t = 0; t < d; ++t)
                    dot += r[t] * q[t];
                sq[i] = std::max(0.0, 2.0 - 2.0 * dot);
            }
            std::partial_sort(sq.begin(), sq.begin() + kmax, sq.end());
            for (std::size_t g = 0; g < grid.size(); ++g) {
                const std::size_t k = grid[g];
                double rk = std::sqrt(sq[k - 1]);
                fhat[g][v] = rk == 0.0
                    ? std::numeric_limits<double>::infinity()
                    : static_cast<double>(k)
                        / (static_cast<double>(n) * cap_volume(d, rk));
            }
        }
    });

    KnnSelection sel;
    sel.grid.resize(grid.size());
    std::size_t best = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        sel.grid[g].parameter = static_cast<double>(grid[g]);
        sel.grid[g].validation_etv = etv_from_values(truth_vals, fhat[g]).etv;
        if (sel.grid[g].validation_etv < sel.grid[best].validation_etv)
            best = g;
    }
    sel.grid[best].selected = true;
    sel.best_k = grid[best];
    return sel;
}

KdeSelection select_kde_bandwidth(const PointList& train, const PointList& val,
                                  const DensityFn& truth, KdeKernel kernel)
{
    if (val.empty())
        throw std::invalid_argument("select_kde_bandwidth: empty validation set");
    const std::vector<double> grid = kde_bandwidth_grid();
    const std::vector<double> truth_vals = map_fn(truth, val);

    KdeSelection sel;
    sel.grid.resize(grid.size());
    std::size_t best = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        KdeModel model = make_kde(train, grid[g], kernel);
        std::vector<double> fhat = kde_density_batch(model, val);
        sel.grid[g].parameter = grid[g];
        sel.grid[g].validation_etv = etv_from_values(truth_vals, fhat).etv;
        if (sel.grid[g].validation_etv < sel.grid[best].validation_etv)
            best = g;
    }
    sel.grid[best].selected = true;
    sel.best_bandwidth = grid[best];
    return sel;
}

EasSelection select_eas_k(std::size_t m, std::size_t d, const PointList& train,
                          const PointList& val, const DensityFn& truth,
                          std::uint64_t bank_seed)
{
    if (train.empty())
        throw std::invalid_argument("select_eas_k: empty training set");
    if (val.empty())
        throw std::invalid_argument("select_eas_k: empty validation set");
    const std::vector<std::size_t> grid = eas_k_grid(d, m);
    const std::size_t kmax = grid.back();
    const std::size_t n = train.size(), nv = val.size();
    const ProjectionBank bank = make_bank(d, m, bank_seed);
    const std::vector<double> truth_vals = map_fn(truth, val);

    // Candidate codes are prefixes of one ranked encoding, and counts are
    // integers, so the incremental sweep reproduces a per-candidate refit
    // bit for bit.
    const std::vector<std::uint32_t> rtrain = ranked_topk_batch(bank, kmax, train);
    const std::vector<std::uint32_t> rval = ranked_topk_batch(bank, kmax, val);

    EasSelection sel;
    sel.grid.resize(grid.size());
    std::vector<std::uint64_t> counts(m, 0);
    std::vector<double> fhat(nv);
    std::size_t filled = 0, best = 0;
    const double area = surface_area(d);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const std::size_t k = grid[g];
        for (; filled < k; ++filled)
            for (std::size_t i = 0; i < n; ++i)
                ++counts[rtrain[i * kmax + filled]];
        const double norm = static_cast<double>(m)
            / (static_cast<double>(k) * static_cast<double>(k) * area);
        for (std::size_t v = 0; v < nv; ++v) {
            std::uint64_t s = 0;
            for (std::size_t t = 0; t < k; ++t)
                s += counts[rval[v * kmax + t]];
            fhat[v] = norm * (static_cast<double>(s) / static_cast<double>(n));
        }
        sel.grid[g].parameter = static_cast<double>(k);
        sel.grid[g].validation_etv = etv_from_values(truth_vals, fhat).etv;
        if (sel.grid[g].validation_etv < sel.grid[best].validation_etv)
            best = g;
    }
    sel.grid[best].selected = true;
    sel.best_k = grid[best];
    sel.model = fit(bank, sel.best_k, train);
    return sel;
}

RateTable rate_experiment(RateFamily family, std::size_t d,
                          const VmfMixture& truth,
                          const std::vector<std::size_t>& n_grid,
                          std::size_t trials, std::uint64_t seed)
{
    if (n_grid.empty())
        throw std::invalid_argument("rate_experiment: empty n grid");
    for (std::size_t i = 1; i < n_grid.size(); ++i)
        if (n_grid[i] <= n_grid[i - 1])
            throw std::invalid_argument("rate_experiment: n grid must be increasing");
    if (trials < 3)
        throw std::invalid_argument("rate_experiment: need at least 3 trials");
    if (truth.dim() != d)
        throw std::invalid_argument("rate_experiment: dimension mismatch");

    const std::size_t n_val = 2000, n_test = 10000;
    DensityFn pdf = [&truth](const UnitVector& x) { return mixture_pdf(truth, x); };

    RateTable table;
    table.family = family;
    table.d = d;
    table.points.resize(n_grid.size());
    for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
        const std::size_t n = n_grid[gi];
        RatePoint& pt = table.points[gi];
        pt.n = n;
        pt.errors.resize(trials);
        for (std::size_t t = 0; t < trials; ++t) {
            const std::uint64_t root = derive_seed(derive_seed(seed, gi), t);
            PointList train = mixture_sample(truth, n, derive_seed(root, 0));
            PointList val = mixture_sample(truth, n_val, derive_seed(root, 1));
            EasSelection sel =
                select_eas_k(n, d, train, val, pdf, derive_seed(root, 3));
            if (family == RateFamily::density) {
                PointList test = mixture_sample(truth, n_test, derive_seed(root, 2));
                std::vector<double> est = evaluate_batch(sel.model, test);
                pt.errors[t] = etv_from_values(map_fn(pdf, test), est).sup_error;
            } else {
                UnitVector mode = single_mode(sel.model, train);
                pt.errors[t] = chord_dist(mode, truth.component(0).mu);
            }
        }
        double mean = 0.0;
        for (double e : pt.errors)
            mean += e;
        mean /= static_cast<double>(trials);
        double var = 0.0;
        for (double e : pt.errors)
            var += (e - mean) * (e - mean);
        pt.mean_error = mean;
        pt.std_dev = std::sqrt(var / static_cast<double>(trials - 1));
    }

    std::vector<double> ns(n_grid.size()), means(n_grid.size());
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        ns[i] = static_cast<double>(n_grid[i]);
        means[i] = table.points[i].mean_error;
    }
    auto [slope, stderr_] = fit_loglog_slope(ns, means);
    table.slope = slope;
    table.slope_stderr = stderr_;
    return table;
}

std::pair<double, double> fit_loglog_slope(const std::vector<double>& ns,
                                           const std::vector<double>& errors)
{
    const std::size_t k = ns.size();
    if (k < 2 || errors.size() != k)
        throw std::invalid_argument("fit_loglog_slope: need >= 2 matched points");
    std::vector<double> x(k), y(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (!(ns[i] > 0.0) || !(errors[i] > 0.0))
            throw std::invalid_argument("fit_loglog_slope: values must be positive");
        x[i] = std::log(ns[i]);
        y[i] = std::log(errors[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(k);
    my /= static_cast<double>(k);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0)
        throw std::invalid_argument("fit_loglog_slope: degenerate abscissae");
    const double slope = sxy / sxx;
    if (k == 2)
        return {slope, 0.0};
    const double intercept = my - slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double r = y[i] - (intercept + slope * x[i]);
        ssr += r * r;
    }
    return {slope, std::sqrt(ssr / (static_cast<double>(k - 2) * sxx))};
}

} // namespace easde
