#include "easde/modes.hpp"
#include "easde/detail/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace easde {

namespace {

double sq_dist(const double* a, const double* b, std::size_t d)
{
    double s = 0.0;
    for (std::size_t t = 0; t < d; ++t) {
        double dt = a[t] - b[t];
        s += dt * dt;
    }
    return s;
}

std::vector<double> flatten_points(const PointList& points, std::size_t& d)
{
    if (points.empty())
        throw std::invalid_argument("modes: empty point set");
    d = points[0].dim();
    std::vector<double> flat;
    flat.reserve(points.size() * d);
    for (const UnitVector& x : points) {
        if (x.dim() != d)
            throw std::invalid_argument("modes: mixed dimensions");
        flat.insert(flat.end(), x.coords().begin(), x.coords().end());
    }
    return flat;
}

void check_alpha(double alpha)
{
    if (!(alpha >= std::sqrt(2.0)) || !std::isfinite(alpha))
        throw std::invalid_argument("modes: alpha must be >= sqrt(2)");
}

// Union-find with per-root aggregates: the component's density maximizer
// (ties to the smaller index), its smallest member, and whether a mode was
// already returned from it.
struct Forest {
    std::vector<std::uint32_t> parent, rnk, best, min_idx;
    std::vector<char> has_mode;
    const std::vector<double>* fhat = nullptr;

    explicit Forest(std::size_t n, const std::vector<double>& f)
        : parent(n), rnk(n, 0), best(n), min_idx(n), has_mode(n, 0), fhat(&f)
    {
        std::iota(parent.begin(), parent.end(), 0u);
        std::iota(best.begin(), best.end(), 0u);
        std::iota(min_idx.begin(), min_idx.end(), 0u);
    }

    std::uint32_t find(std::uint32_t v)
    {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    }

    void unite(std::uint32_t a, std::uint32_t b)
    {
        a = find(a);
        b = find(b);
        if (a == b)
            return;
        if (rnk[a] < rnk[b])
            std::swap(a, b);
        if (rnk[a] == rnk[b])
            ++rnk[a];
        parent[b] = a;
        const std::vector<double>& f = *fhat;
        if (f[best[b]] > f[best[a]] || (f[best[b]] == f[best[a]] && best[b] < best[a]))
            best[a] = best[b];
        min_idx[a] = std::min(min_idx[a], min_idx[b]);
        has_mode[a] = static_cast<char>(has_mode[a] | has_mode[b]);
    }
};

} // namespace

std::vector<double> knn_radii(const PointList& data, std::size_t k)
{
    const std::size_t n = data.size();
    if (n < 2)
        throw std::invalid_argument("knn_radii: need at least two points");
    if (k < 1 || k > n - 1)
        throw std::invalid_argument("knn_radii: k must lie in [1, n-1]");
    std::size_t d = 0;
    std::vector<double> flat = flatten_points(data, d);
    std::vector<double> out(n);
    detail::parallel_for(n, [&](std::size_t b, std::size_t e) {
        std::vector<double> sq(n - 1);
        for (std::size_t i = b; i < e; ++i) {
            const double* p = flat.data() + i * d;
            std::size_t w = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i)
                    continue;
                sq[w++] = sq_dist(p, flat.data() + j * d, d);
            }
            std::nth_element(sq.begin(), sq.begin() + (k - 1), sq.end());
            out[i] = std::sqrt(sq[k - 1]);
        }
    });
    return out;
}

DensityGraph build_density_graph(const PointList& points,
                                 std::vector<double> fhat,
                                 std::vector<double> rk,
                                 double alpha, double lambda)
{
    check_alpha(alpha);
    DensityGraph g;
    g.points = flatten_points(points, g.d);
    g.n = points.size();
    if (fhat.size() != g.n || rk.size() != g.n)
        throw std::invalid_argument("build_density_graph: fhat/rk length mismatch");
    for (double r : rk)
        if (!(r > 0.0) || !std::isfinite(r))
            throw std::invalid_argument("build_density_graph: radii must be positive");
    g.fhat = std::move(fhat);
    g.rk = std::move(rk);
    g.alpha = alpha;
    g.lambda = lambda;
    return g;
}

std::vector<std::vector<std::size_t>> connected_components(const DensityGraph& graph)
{
    std::vector<std::uint32_t> verts;
    for (std::size_t i = 0; i < graph.n; ++i)
        if (graph.fhat[i] >= graph.lambda)
            verts.push_back(static_cast<std::uint32_t>(i));

    Forest forest(graph.n, graph.fhat);
    const double a2 = graph.alpha * graph.alpha;
    for (std::size_t p = 0; p < verts.size(); ++p) {
        std::uint32_t i = verts[p];
        const double* xi = graph.points.data() + i * graph.d;
        for (std::size_t q = p + 1; q < verts.size(); ++q) {
            std::uint32_t j = verts[q];
            double r = std::min(graph.rk[i], graph.rk[j]);
            if (sq_dist(xi, graph.points.data() + j * graph.d, graph.d) <= a2 * r * r)
                forest.unite(i, j);
        }
    }

    std::vector<std::vector<std::size_t>> comps;
    std::vector<std::int64_t> slot(graph.n, -1);
    for (std::uint32_t v : verts) {
        std::uint32_t r = forest.find(v);
        if (slot[r] < 0) {
            slot[r] = static_cast<std::int64_t>(comps.size());
            comps.emplace_back();
        }
        comps[static_cast<std::size_t>(slot[r])].push_back(v);
    }
    for (auto& c : comps)
        std::sort(c.begin(), c.end());
    std::sort(comps.begin(), comps.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return comps;
}

std::size_t single_mode_index(const EasModel& model, const PointList& data)
{
    if (data.empty())
        throw std::invalid_argument("single_mode: empty data");
    std::vector<double> fhat = evaluate_batch(model, data);
    return static_cast<std::size_t>(
        std::max_element(fhat.begin(), fhat.end()) - fhat.begin());
}

UnitVector single_mode(const EasModel& model, const PointList& data)
{
    return data[single_mode_index(model, data)];
}

double gamma_n(std::size_t d, std::size_t m, std::size_t k, std::size_t n,
               double sup_f, double delta)
{
    if (d < 2 || m == 0 || k == 0 || n == 0)
        throw std::invalid_argument("gamma_n: d, m, k, n must be positive");
    if (!(sup_f >= 0.0) || !std::isfinite(sup_f))
        throw std::invalid_argument("gamma_n: sup_f must be nonnegative");
    if (!(delta > 0.0) || !(delta < 1.0))
        throw std::invalid_argument("gamma_n: delta must lie in (0, 1)");
    const double S = surface_area(d);
    const double md = static_cast<double>(m), kd = static_cast<double>(k),
                 nd = static_cast<double>(n);
    const double lg = std::log(md / delta);
    const double alpha_n = 2.0 * std::sqrt(kd * S * sup_f * lg / (md * nd))
                         + 2.0 * lg / (3.0 * nd);
    return alpha_n / (S * kd / md);
}

double auto_eps(const EasModel& model)
{
    return gamma_n(model.bank.d, model.bank.m, model.k, model.n,
                   model.sup_fhat_train, 0.05);
}

ModeSet recover_modes_from_density(const PointList& points,
                                   const std::vector<double>& fhat,
                                   const std::vector<double>& rk,
                                   double alpha, double eps_tilde)
{
    check_alpha(alpha);
    if (!(eps_tilde >= 0.0) || !std::isfinite(eps_tilde))
        throw std::invalid_argument("recover_modes: eps_tilde must be >= 0");
    std::size_t d = 0;
    std::vector<double> flat = flatten_points(points, d);
    const std::size_t n = points.size();
    if (fhat.size() != n || rk.size() != n)
        throw std::invalid_argument("recover_modes: fhat/rk length mismatch");

    // Indices by decreasing density (ties ascending); the distinct values in
    // this order are the level sequence, and the same order drives vertex
    // activation since the vertex sets {fhat >= L - eps} are nested.
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return fhat[a] > fhat[b] || (fhat[a] == fhat[b] && a < b);
    });

    Forest forest(n, fhat);
    std::vector<std::uint32_t> actives;
    actives.reserve(n);
    std::vector<std::uint64_t> stamp(n, 0);
    const double a2 = alpha * alpha;

    ModeSet out;
    std::size_t p = 0;
    std::uint64_t level_id = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> cands; // (min member, root)
    for (std::size_t t = 0; t < n; ++t) {
        if (t > 0 && fhat[order[t]] == fhat[order[t - 1]])
            continue; // one pass per distinct level
        const double level = fhat[order[t]];
        ++level_id;
        const double thr = level - eps_tilde;
        while (p < n && fhat[order[p]] >= thr) {
            std::uint32_t v = order[p];
            const double* xv = flat.data() + v * d;
            for (std::uint32_t u : actives) {
                double r = std::min(rk[u], rk[v]);
                if (sq_dist(xv, flat.data() + u * d, d) <= a2 * r * r)
                    forest.unite(u, v);
            }
            actives.push_back(v);
            ++p;
        }
        cands.clear();
        for (std::uint32_t v : actives) {
            std::uint32_t r = forest.find(v);
            if (stamp[r] == level_id)
                continue;
            stamp[r] = level_id;
            if (!forest.has_mode[r] && fhat[forest.best[r]] >= level)
                cands.emplace_back(forest.min_idx[r], r);
        }
        std::sort(cands.begin(), cands.end());
        for (auto [mi, r] : cands) {
            (void)mi;
            std::uint32_t b = forest.best[r];
            out.modes.push_back({b, fhat[b], level});
            forest.has_mode[r] = 1;
        }
    }
    return out;
}

ModeSet recover_modes(const EasModel& model, const PointList& data,
                      std::size_t k_graph, double alpha,
                      std::optional<double> eps_tilde)
{
    if (data.empty())
        throw std::invalid_argument("recover_modes: empty data");
    if (k_graph == 0)
        k_graph = model.k;
    std::vector<double> fhat = evaluate_batch(model, data);
    std::vector<double> rk = knn_radii(data, k_graph);
    double eps = eps_tilde ? *eps_tilde : auto_eps(model);
    return recover_modes_from_density(data, fhat, rk, alpha, eps);
}

void write_mode_csv(const ModeSet& set, const PointList& points,
                    const std::string& path)
{
    if (points.empty())
        throw std::invalid_argument("write_mode_csv: empty point set");
    const std::size_t d = points[0].dim();
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw std::runtime_error("write_mode_csv: cannot open " + path);
    os << "schema_version,mode_rank,sample_index";
    for (std::size_t t = 0; t < d; ++t)
        os << ",x" << t;
    os << ",fhat,discovery_level\n";
    char buf[64];
    for (std::size_t r = 0; r < set.modes.size(); ++r) {
        const Mode& mode = set.modes[r];
        if (mode.sample_index >= points.size())
            throw std::invalid_argument("write_mode_csv: mode index out of range");
        os << 1 << ',' << r << ',' << mode.sample_index;
        const auto& co = points[mode.sample_index].coords();
        for (std::size_t t = 0; t < d; ++t) {
            std::snprintf(buf, sizeof buf, "%.17g", co[t]);
            os << ',' << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g", mode.fhat);
        os << ',' << buf;
        std::snprintf(buf, sizeof buf, "%.17g", mode.discovery_level);
        os << ',' << buf << '\n';
    }
    if (!os)
        throw std::runtime_error("write_mode_csv: write failed: " + path);
}

} // namespace easde
