#include "easde/eas.hpp"
#include "easde/detail/parallel.hpp"
#include "easde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace easde {

namespace {

struct Scratch {
    std::vector<double> y;
    std::vector<std::uint32_t> idx;
};

// Activations plus exact top-k selection; ties go to the smaller index so the
// ranked order is a total order and prefixes are consistent across k.
void ranked_topk_into(const ProjectionBank& bank, std::size_t k, const UnitVector& x,
                      Scratch& s, std::vector<std::uint32_t>& out)
{
    const std::size_t m = bank.m, d = bank.d;
    s.y.resize(m);
    const double* rows = bank.rows.data();
    const double* q = x.coords().data();
    for (std::size_t j = 0; j < m; ++j) {
        const double* r = rows + j * d;
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            acc += r[i] * q[i];
        s.y[j] = acc;
    }
    s.idx.resize(m);
    std::iota(s.idx.begin(), s.idx.end(), 0u);
    const double* y = s.y.data();
    auto better = [y](std::uint32_t a, std::uint32_t b) {
        return y[a] > y[b] || (y[a] == y[b] && a < b);
    };
    if (k < m)
        std::nth_element(s.idx.begin(), s.idx.begin() + (k - 1), s.idx.end(), better);
    std::sort(s.idx.begin(), s.idx.begin() + k, better);
    out.assign(s.idx.begin(), s.idx.begin() + k);
}

void check_bank(const ProjectionBank& bank)
{
    if (bank.d < 2 || bank.m == 0 || bank.rows.size() != bank.m * bank.d)
        throw std::invalid_argument("eas: malformed projection bank");
}

void check_k(const ProjectionBank& bank, std::size_t k)
{
    if (k < 1 || k > bank.m)
        throw std::invalid_argument("eas: k must lie in [1, m]");
}

double eval_from_sum(const EasModel& model, std::uint64_t sum)
{
    return model.norm_const * (static_cast<double>(sum) / static_cast<double>(model.n));
}

std::uint64_t count_sum(const std::vector<std::uint64_t>& counts,
                        const std::vector<std::uint32_t>& code)
{
    std::uint64_t s = 0;
    for (std::uint32_t j : code)
        s += counts[j];
    return s;
}

} // namespace

ProjectionBank make_bank(std::size_t d, std::size_t m, std::uint64_t seed)
{
    if (d < 2)
        throw std::invalid_argument("make_bank: d must be at least 2");
    if (m == 0)
        throw std::invalid_argument("make_bank: m must be positive");
    PointList rows = sample_uniform(d, m, seed);
    ProjectionBank bank;
    bank.d = d;
    bank.m = m;
    bank.seed = seed;
    bank.rows.reserve(m * d);
    for (const UnitVector& r : rows)
        bank.rows.insert(bank.rows.end(), r.coords().begin(), r.coords().end());
    return bank;
}

ProjectionBank bank_from_rows(std::size_t d, const std::vector<std::vector<double>>& rows)
{
    if (d < 2)
        throw std::invalid_argument("bank_from_rows: d must be at least 2");
    if (rows.empty())
        throw std::invalid_argument("bank_from_rows: need at least one row");
    ProjectionBank bank;
    bank.d = d;
    bank.m = rows.size();
    bank.seed = 0;
    bank.rows.reserve(bank.m * d);
    for (const auto& r : rows) {
        if (r.size() != d)
            throw std::invalid_argument("bank_from_rows: row dimension mismatch");
        UnitVector u(r); // validates and renormalizes
        bank.rows.insert(bank.rows.end(), u.coords().begin(), u.coords().end());
    }
    return bank;
}

std::vector<std::uint32_t> ranked_topk(const ProjectionBank& bank, std::size_t k,
                                       const UnitVector& x)
{
    check_bank(bank);
    check_k(bank, k);
    if (x.dim() != bank.d)
        throw std::invalid_argument("ranked_topk: dimension mismatch");
    Scratch s;
    std::vector<std::uint32_t> out;
    ranked_topk_into(bank, k, x, s, out);
    return out;
}

SparseCode encode(const ProjectionBank& bank, std::size_t k, const UnitVector& x)
{
    SparseCode code;
    code.indices = ranked_topk(bank, k, x);
    std::sort(code.indices.begin(), code.indices.end());
    return code;
}

std::vector<std::uint32_t> ranked_topk_batch(const ProjectionBank& bank,
                                             std::size_t k, const PointList& xs)
{
    check_bank(bank);
    check_k(bank, k);
    std::vector<std::uint32_t> out(xs.size() * k);
    detail::parallel_for(xs.size(), [&](std::size_t b, std::size_t e) {
        Scratch s;
        std::vector<std::uint32_t> code;
        for (std::size_t i = b; i < e; ++i) {
            if (xs[i].dim() != bank.d)
                throw std::invalid_argument("ranked_topk_batch: dimension mismatch");
            ranked_topk_into(bank, k, xs[i], s, code);
            std::copy(code.begin(), code.end(), out.begin() + i * k);
        }
    });
    return out;
}

EasModel fit(const ProjectionBank& bank, std::size_t k, const PointList& data)
{
    check_bank(bank);
    check_k(bank, k);
    if (data.empty())
        throw std::invalid_argument("fit: empty data");
    for (const UnitVector& x : data)
        if (x.dim() != bank.d)
            throw std::invalid_argument("fit: dimension mismatch in data");

    const std::size_t n = data.size(), m = bank.m;
    EasModel model;
    model.bank = bank;
    model.k = k;
    model.n = n;
    model.counts.assign(m, 0);
    model.norm_const = static_cast<double>(m)
                     / (static_cast<double>(k) * static_cast<double>(k) * surface_area(bank.d));

    // Codes are kept for the second pass; counts merge by addition, so a
    // partitioned fit matches the serial one exactly.
    std::vector<std::uint32_t> codes(n * k);
    std::vector<std::uint64_t>& counts = model.counts;
    detail::parallel_for(n, [&](std::size_t b, std::size_t e) {
        Scratch s;
        std::vector<std::uint32_t> code;
        for (std::size_t i = b; i < e; ++i) {
            ranked_topk_into(bank, k, data[i], s, code);
            std::copy(code.begin(), code.end(), codes.begin() + i * k);
        }
    });
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < k; ++t)
            ++counts[codes[i * k + t]];

    std::vector<double> fhat(n);
    detail::parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            std::uint64_t s = 0;
            for (std::size_t t = 0; t < k; ++t)
                s += counts[codes[i * k + t]];
            fhat[i] = eval_from_sum(model, s);
        }
    });
    model.sup_fhat_train = *std::max_element(fhat.begin(), fhat.end());
    return model;
}

double evaluate(const EasModel& model, const UnitVector& x)
{
    check_bank(model.bank);
    if (x.dim() != model.bank.d)
        throw std::invalid_argument("evaluate: dimension mismatch");
    thread_local Scratch s;
    thread_local std::vector<std::uint32_t> code;
    ranked_topk_into(model.bank, model.k, x, s, code);
    return eval_from_sum(model, count_sum(model.counts, code));
}

std::vector<double> evaluate_batch(const EasModel& model, const PointList& xs)
{
    std::vector<double> out(xs.size());
    detail::parallel_for(xs.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            out[i] = evaluate(model, xs[i]);
    });
    return out;
}

RegionReport region_diagnostics(const ProjectionBank& bank, std::size_t k,
                                std::size_t probes, std::uint64_t seed,
                                std::size_t regions)
{
    check_bank(bank);
    check_k(bank, k);
    if (probes == 0)
        throw std::invalid_argument("region_diagnostics: need at least one probe");
    const std::size_t m = bank.m;
    regions = std::min(regions, m);

    // Deterministic sample of regions without replacement.
    std::vector<std::uint32_t> sampled(m);
    std::iota(sampled.begin(), sampled.end(), 0u);
    Rng rng(derive_seed(seed, 1));
    for (std::size_t i = 0; i < regions; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(m - i));
        std::swap(sampled[i], sampled[std::min(j, m - 1)]);
    }
    sampled.resize(regions);
    std::sort(sampled.begin(), sampled.end());
    std::vector<std::int64_t> slot(m, -1);
    for (std::size_t i = 0; i < regions; ++i)
        slot[sampled[i]] = static_cast<std::int64_t>(i);

    PointList pts = sample_uniform(bank.d, probes, derive_seed(seed, 2));
    std::vector<std::uint64_t> hits(regions, 0);
    std::vector<std::vector<std::uint32_t>> members(regions);
    {
        Scratch s;
        std::vector<std::uint32_t> code;
        for (std::size_t p = 0; p < probes; ++p) {
            ranked_topk_into(bank, k, pts[p], s, code);
            for (std::uint32_t j : code) {
                std::int64_t r = slot[j];
                if (r >= 0) {
                    ++hits[r];
                    members[r].push_back(static_cast<std::uint32_t>(p));
                }
            }
        }
    }

    RegionReport rep;
    rep.d = bank.d;
    rep.m = m;
    rep.k = k;
    rep.probes = probes;
    rep.nominal_fraction = static_cast<double>(k) / static_cast<double>(m);
    rep.diameter_bound = (4.0 / std::sqrt(3.0))
        * std::pow(6.0 * std::sqrt(static_cast<double>(bank.d)) * rep.nominal_fraction,
                   1.0 / (static_cast<double>(bank.d) - 1.0));
    rep.regions.resize(regions);

    const double scale = static_cast<double>(m) / static_cast<double>(k);
    detail::parallel_for(regions, [&](std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) {
            RegionStat& st = rep.regions[r];
            st.index = sampled[r];
            st.probe_count = hits[r];
            st.ratio = (static_cast<double>(hits[r]) / static_cast<double>(probes)) * scale;
            // Exact max pairwise distance; centroid ordering prunes the scan
            // since dist(i, j) <= r_i + r_j <= 2 max(r_i, r_j).
            const auto& mem = members[r];
            const std::size_t c = mem.size(), d = bank.d;
            if (c < 2) {
                st.diameter = 0.0;
                continue;
            }
            std::vector<double> flat(c * d);
            std::vector<double> cen(d, 0.0);
            for (std::size_t i = 0; i < c; ++i) {
                const auto& co = pts[mem[i]].coords();
                for (std::size_t t = 0; t < d; ++t) {
                    flat[i * d + t] = co[t];
                    cen[t] += co[t];
                }
            }
            for (double& v : cen)
                v /= static_cast<double>(c);
            std::vector<std::pair<double, std::uint32_t>> order(c);
            for (std::size_t i = 0; i < c; ++i) {
                double sq = 0.0;
                for (std::size_t t = 0; t < d; ++t) {
                    double dt = flat[i * d + t] - cen[t];
                    sq += dt * dt;
                }
                order[i] = {sq, static_cast<std::uint32_t>(i)};
            }
            std::sort(order.begin(), order.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
            double best2 = 0.0;
            for (std::size_t ai = 0; ai < c; ++ai) {
                double ra = std::sqrt(order[ai].first);
                double cap = 2.0 * ra;
                if (cap * cap <= best2)
                    break;
                const double* pa = flat.data() + order[ai].second * d;
                for (std::size_t bb = ai + 1; bb < c; ++bb) {
                    const double* pb = flat.data() + order[bb].second * d;
                    double sq = 0.0;
                    for (std::size_t t = 0; t < d; ++t) {
                        double dt = pa[t] - pb[t];
                        sq += dt * dt;
                    }
                    if (sq > best2)
                        best2 = sq;
                }
            }
            st.diameter = std::sqrt(best2);
        }
    });

    rep.ratio_min = std::numeric_limits<double>::infinity();
    rep.ratio_max = 0.0;
    double acc = 0.0;
    for (const RegionStat& st : rep.regions) {
        rep.ratio_min = std::min(rep.ratio_min, st.ratio);
        rep.ratio_max = std::max(rep.ratio_max, st.ratio);
        rep.diameter_max = std::max(rep.diameter_max, st.diameter);
        acc += st.ratio;
    }
    rep.ratio_mean = regions ? acc / static_cast<double>(regions) : 0.0;
    return rep;
}

namespace {

constexpr char kMagic[4] = {'E', 'A', 'S', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void get(std::istream& is, T& v)
{
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is)
        throw std::runtime_error("model file: truncated");
}

} // namespace

void save_model(const EasModel& model, const std::string& path)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw std::runtime_error("model file: cannot open for writing: " + path);
    os.write(kMagic, 4);
    put(os, kFormatVersion);
    put(os, static_cast<std::uint64_t>(model.bank.d));
    put(os, static_cast<std::uint64_t>(model.bank.m));
    put(os, static_cast<std::uint64_t>(model.k));
    put(os, static_cast<std::uint64_t>(model.n));
    put(os, static_cast<std::uint64_t>(model.bank.seed));
    put(os, model.norm_const);
    put(os, model.sup_fhat_train);
    os.write(reinterpret_cast<const char*>(model.bank.rows.data()),
             static_cast<std::streamsize>(model.bank.rows.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(model.counts.data()),
             static_cast<std::streamsize>(model.counts.size() * sizeof(std::uint64_t)));
    if (!os)
        throw std::runtime_error("model file: write failed: " + path);
}

EasModel load_model(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("model file: cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("model file: bad magic");
    std::uint32_t version = 0;
    get(is, version);
    if (version != kFormatVersion)
        throw std::runtime_error("model file: unsupported version");
    std::uint64_t d, m, k, n, seed;
    get(is, d);
    get(is, m);
    get(is, k);
    get(is, n);
    get(is, seed);
    EasModel model;
    get(is, model.norm_const);
    get(is, model.sup_fhat_train);
    if (d < 2 || m == 0 || k < 1 || k > m || n == 0)
        throw std::runtime_error("model file: inconsistent header");
    model.bank.d = d;
    model.bank.m = m;
    model.bank.seed = seed;
    model.k = k;
    model.n = n;
    model.bank.rows.resize(m * d);
    is.read(reinterpret_cast<char*>(model.bank.rows.data()),
            static_cast<std::streamsize>(m * d * sizeof(double)));
    model.counts.resize(m);
    is.read(reinterpret_cast<char*>(model.counts.data()),
            static_cast<std::streamsize>(m * sizeof(std::uint64_t)));
    if (!is)
        throw std::runtime_error("model file: truncated");
    std::uint64_t total = 0;
    for (std::uint64_t c : model.counts)
        total += c;
    if (total != static_cast<std::uint64_t>(n) * k)
        throw std::runtime_error("model file: count conservation violated");
    return model;
}

} // namespace easde
