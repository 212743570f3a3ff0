#include "easde/experiment.hpp"
#include "easde/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace easde {

namespace {

std::string trim(const std::string& s)
{
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::size_t b = 0;
    while (true) {
        std::size_t e = s.find(sep, b);
        if (e == std::string::npos) {
            out.push_back(trim(s.substr(b)));
            return out;
        }
        out.push_back(trim(s.substr(b, e - b)));
        b = e + 1;
    }
}

bool parse_double(const std::string& s, double& out)
{
    if (s.empty())
        return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

bool parse_ll(const std::string& s, long long& out)
{
    if (s.empty())
        return false;
    char* end = nullptr;
    out = std::strtoll(s.c_str(), &end, 10);
    return end == s.c_str() + s.size();
}

bool parse_u64(const std::string& s, std::uint64_t& out)
{
    if (s.empty() || s[0] == '-')
        return false;
    char* end = nullptr;
    out = std::strtoull(s.c_str(), &end, 10);
    return end == s.c_str() + s.size();
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_ms(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double ms() const
    {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - t0)
            .count();
    }
};

// Positive size field with a named range error; returns false on bad syntax.
bool assign_size(const std::string& key, const std::string& value, std::size_t line,
                 std::size_t min_value, std::size_t& out,
                 std::vector<std::string>& errors)
{
    long long v = 0;
    if (!parse_ll(value, v)) {
        errors.push_back("line " + std::to_string(line) + ": " + key
                         + ": not an integer");
        return false;
    }
    if (v < static_cast<long long>(min_value)) {
        errors.push_back("line " + std::to_string(line) + ": " + key
                         + ": must be at least " + std::to_string(min_value));
        return false;
    }
    out = static_cast<std::size_t>(v);
    return true;
}

} // namespace

std::string task_name(Task task)
{
    switch (task) {
    case Task::density_experiment: return "density-experiment";
    case Task::mode_single: return "mode-single";
    case Task::mode_multi: return "mode-multi";
    case Task::diagnostics: return "diagnostics";
    case Task::rate: return "rate";
    }
    return "unknown";
}

std::optional<Task> task_from_name(const std::string& name)
{
    if (name == "density-experiment")
        return Task::density_experiment;
    if (name == "mode-single")
        return Task::mode_single;
    if (name == "mode-multi")
        return Task::mode_multi;
    if (name == "diagnostics")
        return Task::diagnostics;
    if (name == "rate")
        return Task::rate;
    return std::nullopt;
}

ConfigParse parse_config(const std::string& text)
{
    ConfigParse out;
    ExperimentConfig cfg;
    std::vector<std::string>& errors = out.errors;

    std::istringstream is(text);
    std::string raw;
    std::size_t lineno = 0;
    bool estimators_seen = false;
    while (std::getline(is, raw)) {
        ++lineno;
        std::string line = raw;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(lineno)
                             + ": expected 'key = value'");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto bad = [&](const std::string& msg) {
            errors.push_back("line " + std::to_string(lineno) + ": " + key + ": "
                             + msg);
        };

        if (key == "task") {
            auto t = task_from_name(value);
            if (!t)
                bad("unknown task '" + value + "'");
            else
                cfg.task = t;
        } else if (key == "d") {
            assign_size(key, value, lineno, 2, cfg.d, errors);
        } else if (key == "n_train") {
            assign_size(key, value, lineno, 1, cfg.n_train, errors);
        } else if (key == "n_val") {
            assign_size(key, value, lineno, 1, cfg.n_val, errors);
        } else if (key == "n_test") {
            assign_size(key, value, lineno, 1, cfg.n_test, errors);
        } else if (key == "probes") {
            assign_size(key, value, lineno, 1, cfg.probes, errors);
        } else if (key == "regions") {
            assign_size(key, value, lineno, 1, cfg.regions, errors);
        } else if (key == "trials") {
            assign_size(key, value, lineno, 1, cfg.trials, errors);
        } else if (key == "k_graph") {
            assign_size(key, value, lineno, 0, cfg.k_graph, errors);
        } else if (key == "k") {
            if (value == "auto") {
                cfg.k.reset();
            } else {
                std::size_t v = 0;
                if (assign_size(key, value, lineno, 1, v, errors))
                    cfg.k = v;
            }
        } else if (key == "m") {
            if (value == "auto") {
                cfg.m.reset();
            } else {
                std::size_t v = 0;
                if (assign_size(key, value, lineno, 1, v, errors))
                    cfg.m = v;
            }
        } else if (key == "expansion_factors") {
            cfg.expansion_factors.clear();
            for (const std::string& tok : split(value, ',')) {
                double v = 0.0;
                if (!parse_double(tok, v))
                    bad("'" + tok + "' is not a number");
                else
                    cfg.expansion_factors.push_back(v);
            }
        } else if (key == "n_grid") {
            cfg.n_grid.clear();
            for (const std::string& tok : split(value, ',')) {
                long long v = 0;
                if (!parse_ll(tok, v) || v < 1)
                    bad("'" + tok + "' is not a positive integer");
                else
                    cfg.n_grid.push_back(static_cast<std::size_t>(v));
            }
        } else if (key == "seeds") {
            cfg.seeds.clear();
            for (const std::string& tok : split(value, ',')) {
                std::uint64_t v = 0;
                if (!parse_u64(tok, v))
                    bad("'" + tok + "' is not an unsigned integer");
                else
                    cfg.seeds.push_back(v);
            }
        } else if (key == "estimators") {
            estimators_seen = true;
            cfg.use_eas = cfg.use_knnde = cfg.use_kde = false;
            for (const std::string& tok : split(value, ',')) {
                if (tok == "eas")
                    cfg.use_eas = true;
                else if (tok == "knnde")
                    cfg.use_knnde = true;
                else if (tok == "kde")
                    cfg.use_kde = true;
                else
                    bad("unknown estimator '" + tok + "'");
            }
        } else if (key == "kde_kernel") {
            if (value == "vmf")
                cfg.kde_kernel = KdeKernel::vmf;
            else if (value == "ambient_gaussian")
                cfg.kde_kernel = KdeKernel::ambient_gaussian;
            else
                bad("unknown kernel '" + value + "'");
        } else if (key == "output_dir") {
            if (value.empty())
                bad("must not be empty");
            else
                cfg.output_dir = value;
        } else if (key == "alpha") {
            double v = 0.0;
            if (!parse_double(value, v))
                bad("not a number");
            else
                cfg.alpha = v;
        } else if (key == "angle") {
            double v = 0.0;
            if (!parse_double(value, v))
                bad("not a number");
            else
                cfg.mixture.angle = v;
        } else if (key == "eps_tilde") {
            if (value == "auto") {
                cfg.eps_tilde.reset();
            } else {
                double v = 0.0;
                if (!parse_double(value, v) || v < 0.0)
                    bad("must be 'auto' or a nonnegative number");
                else
                    cfg.eps_tilde = v;
            }
        } else if (key == "family") {
            if (value == "density")
                cfg.family = RateFamily::density;
            else if (value == "mode")
                cfg.family = RateFamily::mode;
            else
                bad("must be 'density' or 'mode'");
        } else if (key == "save_models") {
            if (value == "true")
                cfg.save_models = true;
            else if (value == "false")
                cfg.save_models = false;
            else
                bad("must be 'true' or 'false'");
        } else if (key == "component") {
            double kappa = std::numeric_limits<double>::quiet_NaN();
            double weight = std::numeric_limits<double>::quiet_NaN();
            std::vector<double> mu;
            bool ok = true;
            std::istringstream ts(value);
            std::string tok;
            while (ts >> tok) {
                std::size_t teq = tok.find('=');
                if (teq == std::string::npos) {
                    bad("expected kappa=..., weight=..., mu=...");
                    ok = false;
                    break;
                }
                const std::string tkey = tok.substr(0, teq);
                const std::string tval = tok.substr(teq + 1);
                if (tkey == "kappa") {
                    if (!parse_double(tval, kappa)) {
                        bad("kappa: not a number");
                        ok = false;
                    }
                } else if (tkey == "weight") {
                    if (!parse_double(tval, weight)) {
                        bad("weight: not a number");
                        ok = false;
                    }
                } else if (tkey == "mu") {
                    mu.clear();
                    for (const std::string& c : split(tval, ',')) {
                        double v = 0.0;
                        if (!parse_double(c, v)) {
                            bad("mu: not a coordinate list");
                            ok = false;
                            break;
                        }
                        mu.push_back(v);
                    }
                } else {
                    bad("unknown field '" + tkey + "'");
                    ok = false;
                }
                if (!ok)
                    break;
            }
            if (ok && (std::isnan(kappa) || std::isnan(weight))) {
                bad("kappa and weight are required");
                ok = false;
            }
            if (ok) {
                cfg.mixture.kappas.push_back(kappa);
                cfg.mixture.weights.push_back(weight);
                cfg.mixture.mus.push_back(std::move(mu));
            }
        } else {
            errors.push_back("line " + std::to_string(lineno) + ": unknown key '"
                             + key + "'");
        }
    }
    (void)estimators_seen;

    std::vector<std::string> constraint = validate_config(cfg);
    errors.insert(errors.end(), constraint.begin(), constraint.end());
    if (errors.empty())
        out.config = std::move(cfg);
    return out;
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg)
{
    std::vector<std::string> errors;
    if (!cfg.task)
        errors.push_back("task: required (density-experiment, mode-single, "
                         "mode-multi, diagnostics, or rate)");
    if (cfg.d == 0)
        errors.push_back("d: required (>= 2)");

    const std::size_t ncomp = cfg.mixture.kappas.size();
    if (ncomp == 0) {
        errors.push_back("component: at least one required");
    } else {
        for (std::size_t i = 0; i < ncomp; ++i) {
            if (!(cfg.mixture.kappas[i] > 0.0) || !std::isfinite(cfg.mixture.kappas[i]))
                errors.push_back("component[" + std::to_string(i)
                                 + "].kappa: must be positive and finite");
            if (!(cfg.mixture.weights[i] > 0.0) || !std::isfinite(cfg.mixture.weights[i]))
                errors.push_back("component[" + std::to_string(i)
                                 + "].weight: must be positive");
        }
        double wsum = 0.0;
        for (double w : cfg.mixture.weights)
            wsum += w;
        if (std::fabs(wsum - 1.0) > 1e-9)
            errors.push_back("mixture.weights: must sum to 1 (sum = " + fmt(wsum)
                             + ")");
        std::size_t with_mu = 0;
        for (const auto& mu : cfg.mixture.mus)
            if (!mu.empty())
                ++with_mu;
        if (with_mu != 0 && with_mu != ncomp)
            errors.push_back("component: means must be given for all components "
                             "or none");
        if (with_mu == ncomp && cfg.d != 0) {
            for (std::size_t i = 0; i < ncomp; ++i)
                if (cfg.mixture.mus[i].size() != cfg.d)
                    errors.push_back("component[" + std::to_string(i)
                                     + "].mu: expected " + std::to_string(cfg.d)
                                     + " coordinates");
        }
        if (with_mu == 0 && ncomp == 2) {
            if (!cfg.mixture.angle)
                errors.push_back("angle: required for a two-component mixture "
                                 "without explicit means");
            else if (!(*cfg.mixture.angle > 0.0) || !(*cfg.mixture.angle <= M_PI))
                errors.push_back("angle: must lie in (0, pi]");
        }
        if (with_mu == 0 && ncomp > 2)
            errors.push_back("component: explicit means required for more than "
                             "two components");
    }

    if (cfg.seeds.empty())
        errors.push_back("seeds: required");
    if (cfg.output_dir.empty())
        errors.push_back("output_dir: required");
    if (!(cfg.alpha >= std::sqrt(2.0)))
        errors.push_back("alpha: must be >= sqrt(2)");

    if (cfg.task) {
        switch (*cfg.task) {
        case Task::density_experiment:
            if (cfg.expansion_factors.empty())
                errors.push_back("expansion_factors: required for the density "
                                 "experiment");
            for (double f : cfg.expansion_factors)
                if (!(f >= 1.0) || !std::isfinite(f)) {
                    errors.push_back("expansion_factors: values must be >= 1");
                    break;
                }
            if (!cfg.use_eas && !cfg.use_knnde && !cfg.use_kde)
                errors.push_back("estimators: at least one of eas, knnde, kde "
                                 "must be enabled");
            break;
        case Task::diagnostics:
            if (!cfg.m)
                errors.push_back("m: required for diagnostics");
            break;
        case Task::rate:
            if (cfg.n_grid.empty())
                errors.push_back("n_grid: required for the rate experiment");
            for (std::size_t i = 1; i < cfg.n_grid.size(); ++i)
                if (cfg.n_grid[i] <= cfg.n_grid[i - 1]) {
                    errors.push_back("n_grid: must be strictly increasing");
                    break;
                }
            if (cfg.trials < 3)
                errors.push_back("trials: must be at least 3");
            break;
        case Task::mode_single:
        case Task::mode_multi:
            break;
        }
    }
    return errors;
}

VmfMixture realize_mixture(const MixtureSpec& spec, std::size_t d,
                           std::uint64_t means_seed)
{
    const std::size_t ncomp = spec.kappas.size();
    if (ncomp == 0)
        throw std::invalid_argument("realize_mixture: no components");
    std::size_t with_mu = 0;
    for (const auto& mu : spec.mus)
        if (!mu.empty())
            ++with_mu;

    std::vector<VmfComponent> comps;
    comps.reserve(ncomp);
    if (with_mu == ncomp) {
        for (std::size_t i = 0; i < ncomp; ++i)
            comps.push_back({UnitVector(spec.mus[i]), spec.kappas[i]});
    } else if (with_mu != 0) {
        throw std::invalid_argument(
            "realize_mixture: means must be given for all components or none");
    } else if (ncomp == 1) {
        comps.push_back({sample_uniform(d, 1, means_seed)[0], spec.kappas[0]});
    } else if (ncomp == 2) {
        if (!spec.angle)
            throw std::invalid_argument("realize_mixture: angle required");
        auto [mu1, mu2] = mean_pair(d, *spec.angle, means_seed);
        comps.push_back({mu1, spec.kappas[0]});
        comps.push_back({mu2, spec.kappas[1]});
    } else {
        throw std::invalid_argument(
            "realize_mixture: explicit means required for > 2 components");
    }

    double wsum = 0.0;
    for (double w : spec.weights)
        wsum += w;
    std::vector<double> weights(ncomp);
    for (std::size_t i = 0; i < ncomp; ++i)
        weights[i] = spec.weights[i] / wsum;
    return VmfMixture(comps, weights);
}

namespace {

struct Emitter {
    std::string dir;
    RunResult* result = nullptr;

    std::string path(const std::string& name) const
    {
        return (std::filesystem::path(dir) / name).string();
    }

    void file(const std::string& name, const std::string& content)
    {
        const std::string p = path(name);
        std::ofstream os(p, std::ios::trunc | std::ios::binary);
        if (!os)
            throw std::runtime_error("run: cannot open " + p);
        os << content;
        if (!os)
            throw std::runtime_error("run: write failed: " + p);
        result->files.push_back(p);
    }
};

std::string join_list(const std::vector<std::string>& parts)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i)
            out += ",";
        out += parts[i];
    }
    return out;
}

void echo_config(const ExperimentConfig& cfg, std::vector<std::string>& man)
{
    man.push_back("library_version=" + std::string(kLibraryVersion));
    man.push_back("task=" + task_name(*cfg.task));
    man.push_back("d=" + std::to_string(cfg.d));
    for (std::size_t i = 0; i < cfg.mixture.kappas.size(); ++i) {
        std::string line = "component" + std::to_string(i)
            + ".kappa=" + fmt(cfg.mixture.kappas[i]);
        man.push_back(line);
        man.push_back("component" + std::to_string(i)
                      + ".weight=" + fmt(cfg.mixture.weights[i]));
        if (!cfg.mixture.mus[i].empty()) {
            std::vector<std::string> co;
            for (double v : cfg.mixture.mus[i])
                co.push_back(fmt(v));
            man.push_back("component" + std::to_string(i) + ".mu=" + join_list(co));
        }
    }
    if (cfg.mixture.angle)
        man.push_back("angle=" + fmt(*cfg.mixture.angle));
    man.push_back("n_train=" + std::to_string(cfg.n_train));
    man.push_back("n_val=" + std::to_string(cfg.n_val));
    man.push_back("n_test=" + std::to_string(cfg.n_test));
    {
        std::vector<std::string> fs;
        for (double f : cfg.expansion_factors)
            fs.push_back(fmt(f));
        if (!fs.empty())
            man.push_back("expansion_factors=" + join_list(fs));
    }
    {
        std::vector<std::string> es;
        if (cfg.use_eas)
            es.push_back("eas");
        if (cfg.use_knnde)
            es.push_back("knnde");
        if (cfg.use_kde)
            es.push_back("kde");
        man.push_back("estimators=" + join_list(es));
    }
    man.push_back(std::string("kde_kernel=")
                  + (cfg.kde_kernel == KdeKernel::vmf ? "vmf" : "ambient_gaussian"));
    {
        std::vector<std::string> ss;
        for (std::uint64_t s : cfg.seeds)
            ss.push_back(std::to_string(s));
        man.push_back("seeds=" + join_list(ss));
    }
    man.push_back("alpha=" + fmt(cfg.alpha));
    man.push_back("eps_tilde=" + (cfg.eps_tilde ? fmt(*cfg.eps_tilde)
                                                : std::string("auto")));
    man.push_back("k_graph=" + std::to_string(cfg.k_graph));
    man.push_back("k=" + (cfg.k ? std::to_string(*cfg.k) : std::string("auto")));
    man.push_back("m=" + (cfg.m ? std::to_string(*cfg.m) : std::string("auto")));
    man.push_back("probes=" + std::to_string(cfg.probes));
    man.push_back("regions=" + std::to_string(cfg.regions));
    if (*cfg.task == Task::rate) {
        std::vector<std::string> ns;
        for (std::size_t n : cfg.n_grid)
            ns.push_back(std::to_string(n));
        man.push_back("family=" + std::string(cfg.family == RateFamily::density
                                                  ? "density"
                                                  : "mode"));
        man.push_back("n_grid=" + join_list(ns));
        man.push_back("trials=" + std::to_string(cfg.trials));
    }
    man.push_back(std::string("save_models=") + (cfg.save_models ? "true" : "false"));
    man.push_back("output_dir=" + cfg.output_dir);
}

void manifest_mixture(const VmfMixture& mix, std::uint64_t seed,
                      std::vector<std::string>& man)
{
    for (std::size_t j = 0; j < mix.size(); ++j) {
        std::vector<std::string> co;
        for (double v : mix.component(j).mu.coords())
            co.push_back(fmt(v));
        man.push_back("seed" + std::to_string(seed) + ".component"
                      + std::to_string(j) + ".mu=" + join_list(co));
    }
}

void manifest_seed_streams(std::uint64_t seed, std::vector<std::string>& man)
{
    const std::string p = "seed" + std::to_string(seed);
    man.push_back(p + ".means_seed="
                  + std::to_string(derive_seed(seed, kSeedStreamMeans)));
    man.push_back(p + ".train_seed="
                  + std::to_string(derive_seed(seed, kSeedStreamTrain)));
    man.push_back(p + ".val_seed="
                  + std::to_string(derive_seed(seed, kSeedStreamVal)));
    man.push_back(p + ".test_seed="
                  + std::to_string(derive_seed(seed, kSeedStreamTest)));
}

double pairing_error(const ModeSet& set, const PointList& points,
                     const UnitVector& mu0, const UnitVector& mu1)
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < set.modes.size(); ++i)
        for (std::size_t j = 0; j < set.modes.size(); ++j) {
            if (i == j)
                continue;
            double e0 = chord_dist(points[set.modes[i].sample_index], mu0);
            double e1 = chord_dist(points[set.modes[j].sample_index], mu1);
            best = std::min(best, std::max(e0, e1));
        }
    return best;
}

void run_density(const ExperimentConfig& cfg, Emitter& em,
                 std::vector<std::string>& man, RunResult& result)
{
    std::string csv = "schema_version,estimator,d,expansion_factor,m,"
                      "k_or_bandwidth,n_train,seed,etv,sup_error,fit_ms,eval_ms\n";

    struct Agg {
        double etv_sum = 0.0, sup_sum = 0.0;
        std::size_t count = 0, m = 0;
        double factor = 0.0;
        std::string estimator;
    };
    std::vector<Agg> aggs; // first-appearance order: eas factors, knnde, kde
    auto agg_for = [&](const std::string& est, double factor, std::size_t m) -> Agg& {
        for (Agg& a : aggs)
            if (a.estimator == est && a.factor == factor)
                return a;
        aggs.push_back({0.0, 0.0, 0, m, factor, est});
        return aggs.back();
    };
    auto add_row = [&](const ResultRow& row, double fit_ms, double eval_ms) {
        csv += "1," + row.estimator + "," + std::to_string(row.d) + ","
             + fmt(row.expansion_factor) + "," + std::to_string(row.m) + ","
             + fmt(row.k_or_bandwidth) + "," + std::to_string(row.n_train) + ","
             + std::to_string(row.seed) + "," + fmt(row.etv) + ","
             + fmt(row.sup_error) + ",0,0\n";
        Agg& a = agg_for(row.estimator, row.expansion_factor, row.m);
        a.etv_sum += row.etv;
        a.sup_sum += row.sup_error;
        ++a.count;
        result.rows.push_back(row);
        man.push_back("time_fit_ms.seed" + std::to_string(row.seed) + "."
                      + row.estimator
                      + (row.m ? ".m" + std::to_string(row.m) : std::string())
                      + "=" + fmt_ms(fit_ms));
        man.push_back("time_eval_ms.seed" + std::to_string(row.seed) + "."
                      + row.estimator
                      + (row.m ? ".m" + std::to_string(row.m) : std::string())
                      + "=" + fmt_ms(eval_ms));
    };

    for (std::uint64_t seed : cfg.seeds) {
        manifest_seed_streams(seed, man);
        VmfMixture mix = realize_mixture(cfg.mixture, cfg.d,
                                         derive_seed(seed, kSeedStreamMeans));
        manifest_mixture(mix, seed, man);
        PointList train =
            mixture_sample(mix, cfg.n_train, derive_seed(seed, kSeedStreamTrain));
        PointList val =
            mixture_sample(mix, cfg.n_val, derive_seed(seed, kSeedStreamVal));
        PointList test =
            mixture_sample(mix, cfg.n_test, derive_seed(seed, kSeedStreamTest));
        DensityFn truth = [&mix](const UnitVector& x) { return mixture_pdf(mix, x); };
        std::vector<double> truth_test(test.size());
        for (std::size_t i = 0; i < test.size(); ++i)
            truth_test[i] = truth(test[i]);

        if (cfg.use_eas) {
            const std::uint64_t bank_base = derive_seed(seed, kSeedStreamBank);
            for (std::size_t fi = 0; fi < cfg.expansion_factors.size(); ++fi) {
                const double factor = cfg.expansion_factors[fi];
                const std::size_t m = static_cast<std::size_t>(
                    std::llround(factor * static_cast<double>(cfg.d)));
                const std::uint64_t bank_seed = derive_seed(bank_base, fi);
                man.push_back("seed" + std::to_string(seed) + ".eas.m"
                              + std::to_string(m)
                              + ".bank_seed=" + std::to_string(bank_seed));
                Timer tf;
                EasModel model;
                std::size_t k_used = 0;
                if (cfg.k) {
                    k_used = std::min(*cfg.k, m);
                    model = fit(make_bank(cfg.d, m, bank_seed), k_used, train);
                } else {
                    EasSelection sel =
                        select_eas_k(m, cfg.d, train, val, truth, bank_seed);
                    k_used = sel.best_k;
                    model = std::move(sel.model);
                }
                const double fit_ms = tf.ms();
                man.push_back("seed" + std::to_string(seed) + ".eas.m"
                              + std::to_string(m) + ".k=" + std::to_string(k_used));
                Timer te;
                std::vector<double> est = evaluate_batch(model, test);
                EtvReport rep = etv_from_values(truth_test, est);
                const double eval_ms = te.ms();
                add_row({"eas", cfg.d, factor, m, static_cast<double>(k_used),
                         cfg.n_train, seed, rep.etv, rep.sup_error},
                        fit_ms, eval_ms);
                if (cfg.save_models) {
                    const std::string name = "model_s" + std::to_string(seed)
                        + "_m" + std::to_string(m) + ".bin";
                    save_model(model, em.path(name));
                    result.files.push_back(em.path(name));
                }
            }
        }
        if (cfg.use_knnde) {
            Timer tf;
            KnnSelection sel = select_knn_k(train, val, truth);
            KnnModel model = make_knn(train, sel.best_k);
            const double fit_ms = tf.ms();
            man.push_back("seed" + std::to_string(seed)
                          + ".knnde.k=" + std::to_string(sel.best_k));
            Timer te;
            std::vector<double> est = knn_density_batch(model, test);
            EtvReport rep = etv_from_values(truth_test, est);
            add_row({"knnde", cfg.d, 0.0, 0, static_cast<double>(sel.best_k),
                     cfg.n_train, seed, rep.etv, rep.sup_error},
                    fit_ms, te.ms());
        }
        if (cfg.use_kde) {
            Timer tf;
            KdeSelection sel =
                select_kde_bandwidth(train, val, truth, cfg.kde_kernel);
            KdeModel model = make_kde(train, sel.best_bandwidth, cfg.kde_kernel);
            const double fit_ms = tf.ms();
            man.push_back("seed" + std::to_string(seed)
                          + ".kde.bandwidth=" + fmt(sel.best_bandwidth));
            Timer te;
            std::vector<double> est = kde_density_batch(model, test);
            EtvReport rep = etv_from_values(truth_test, est);
            add_row({"kde", cfg.d, 0.0, 0, sel.best_bandwidth, cfg.n_train, seed,
                     rep.etv, rep.sup_error},
                    fit_ms, te.ms());
        }
    }

    em.file("results.csv", csv);
    std::string summary = "schema_version,estimator,expansion_factor,m,mean_etv,"
                          "mean_sup_error,seeds\n";
    for (const Agg& a : aggs) {
        summary += "1," + a.estimator + "," + fmt(a.factor) + ","
                 + std::to_string(a.m) + ","
                 + fmt(a.etv_sum / static_cast<double>(a.count)) + ","
                 + fmt(a.sup_sum / static_cast<double>(a.count)) + ","
                 + std::to_string(a.count) + "\n";
    }
    em.file("summary.csv", summary);
}

void run_modes(const ExperimentConfig& cfg, Emitter& em,
               std::vector<std::string>& man, RunResult& result)
{
    const bool multi = *cfg.task == Task::mode_multi;
    std::string summary = "schema_version,seed,n_train,m,k,n_modes,error\n";
    for (std::uint64_t seed : cfg.seeds) {
        manifest_seed_streams(seed, man);
        VmfMixture mix = realize_mixture(cfg.mixture, cfg.d,
                                         derive_seed(seed, kSeedStreamMeans));
        manifest_mixture(mix, seed, man);
        PointList train =
            mixture_sample(mix, cfg.n_train, derive_seed(seed, kSeedStreamTrain));
        const std::size_t m = cfg.m ? *cfg.m : cfg.n_train;
        const std::uint64_t bank_seed =
            derive_seed(derive_seed(seed, kSeedStreamBank), 0);
        man.push_back("seed" + std::to_string(seed)
                      + ".bank_seed=" + std::to_string(bank_seed));

        Timer tf;
        EasModel model;
        std::size_t k_used = 0;
        if (cfg.k) {
            k_used = std::min(*cfg.k, m);
            model = fit(make_bank(cfg.d, m, bank_seed), k_used, train);
        } else {
            PointList val =
                mixture_sample(mix, cfg.n_val, derive_seed(seed, kSeedStreamVal));
            DensityFn truth = [&mix](const UnitVector& x) {
                return mixture_pdf(mix, x);
            };
            EasSelection sel = select_eas_k(m, cfg.d, train, val, truth, bank_seed);
            k_used = sel.best_k;
            model = std::move(sel.model);
        }
        man.push_back("seed" + std::to_string(seed) + ".k="
                      + std::to_string(k_used));
        man.push_back("time_fit_ms.seed" + std::to_string(seed) + "="
                      + fmt_ms(tf.ms()));

        Timer tm;
        ModeSet set;
        if (multi) {
            set = recover_modes(model, train, cfg.k_graph, cfg.alpha,
                                cfg.eps_tilde);
            man.push_back("seed" + std::to_string(seed) + ".eps_tilde="
                          + fmt(cfg.eps_tilde ? *cfg.eps_tilde
                                              : auto_eps(model)));
        } else {
            std::size_t idx = single_mode_index(model, train);
            double level = evaluate(model, train[idx]);
            set.modes.push_back({idx, level, level});
        }
        man.push_back("time_modes_ms.seed" + std::to_string(seed) + "="
                      + fmt_ms(tm.ms()));

        const std::string name = "modes_s" + std::to_string(seed) + ".csv";
        write_mode_csv(set, train, em.path(name));
        result.files.push_back(em.path(name));
        if (cfg.save_models) {
            const std::string mname = "model_s" + std::to_string(seed) + ".bin";
            save_model(model, em.path(mname));
            result.files.push_back(em.path(mname));
        }

        double error = std::numeric_limits<double>::quiet_NaN();
        if (multi && mix.size() >= 2 && set.modes.size() >= 2)
            error = pairing_error(set, train, mix.component(0).mu,
                                  mix.component(1).mu);
        else if (!multi)
            error = chord_dist(train[set.modes[0].sample_index],
                               mix.component(0).mu);
        summary += "1," + std::to_string(seed) + "," + std::to_string(cfg.n_train)
                 + "," + std::to_string(m) + "," + std::to_string(k_used) + ","
                 + std::to_string(set.modes.size()) + "," + fmt(error) + "\n";
    }
    em.file("mode_summary.csv", summary);
}

void run_diagnostics(const ExperimentConfig& cfg, Emitter& em,
                     std::vector<std::string>& man)
{
    const std::uint64_t seed = cfg.seeds.front();
    const std::size_t m = *cfg.m;
    std::size_t k;
    if (cfg.k) {
        k = std::min(*cfg.k, m);
    } else {
        long long c = std::llround(static_cast<double>(cfg.d)
                                   * std::log(static_cast<double>(m)));
        k = static_cast<std::size_t>(
            std::max(1ll, std::min(c, static_cast<long long>(m))));
    }
    const std::uint64_t bank_seed = derive_seed(derive_seed(seed, kSeedStreamBank), 0);
    const std::uint64_t probe_seed = derive_seed(seed, kSeedStreamProbes);
    man.push_back("bank_seed=" + std::to_string(bank_seed));
    man.push_back("probe_seed=" + std::to_string(probe_seed));
    man.push_back("resolved_k=" + std::to_string(k));

    Timer t;
    ProjectionBank bank = make_bank(cfg.d, m, bank_seed);
    RegionReport rep = region_diagnostics(bank, k, cfg.probes, probe_seed,
                                          cfg.regions);
    man.push_back("time_diagnostics_ms=" + fmt_ms(t.ms()));
    man.push_back("nominal_fraction=" + fmt(rep.nominal_fraction));
    man.push_back("diameter_bound=" + fmt(rep.diameter_bound));
    man.push_back("ratio_min=" + fmt(rep.ratio_min));
    man.push_back("ratio_max=" + fmt(rep.ratio_max));
    man.push_back("ratio_mean=" + fmt(rep.ratio_mean));
    man.push_back("diameter_max=" + fmt(rep.diameter_max));

    std::string csv = "schema_version,region_rank,coordinate,probe_count,ratio,"
                      "diameter\n";
    for (std::size_t r = 0; r < rep.regions.size(); ++r) {
        const RegionStat& st = rep.regions[r];
        csv += "1," + std::to_string(r) + "," + std::to_string(st.index) + ","
             + std::to_string(st.probe_count) + "," + fmt(st.ratio) + ","
             + fmt(st.diameter) + "\n";
    }
    em.file("diagnostics.csv", csv);
}

void run_rate(const ExperimentConfig& cfg, Emitter& em,
              std::vector<std::string>& man)
{
    const std::uint64_t seed = cfg.seeds.front();
    VmfMixture mix = realize_mixture(cfg.mixture, cfg.d,
                                     derive_seed(seed, kSeedStreamMeans));
    manifest_mixture(mix, seed, man);
    Timer t;
    RateTable table =
        rate_experiment(cfg.family, cfg.d, mix, cfg.n_grid, cfg.trials, seed);
    man.push_back("time_rate_ms=" + fmt_ms(t.ms()));
    man.push_back("slope=" + fmt(table.slope));
    man.push_back("slope_stderr=" + fmt(table.slope_stderr));

    std::string csv = "schema_version,n,trial,error\n";
    for (const RatePoint& pt : table.points)
        for (std::size_t tr = 0; tr < pt.errors.size(); ++tr)
            csv += "1," + std::to_string(pt.n) + "," + std::to_string(tr) + ","
                 + fmt(pt.errors[tr]) + "\n";
    em.file("rate.csv", csv);

    std::string summary =
        "schema_version,n,mean_error,std_dev,slope,slope_stderr\n";
    for (const RatePoint& pt : table.points)
        summary += "1," + std::to_string(pt.n) + "," + fmt(pt.mean_error) + ","
                 + fmt(pt.std_dev) + "," + fmt(table.slope) + ","
                 + fmt(table.slope_stderr) + "\n";
    em.file("rate_summary.csv", summary);
}

} // namespace

RunResult run(const ExperimentConfig& cfg)
{
    std::vector<std::string> errors = validate_config(cfg);
    if (!errors.empty()) {
        std::string msg = "run: invalid config";
        for (const std::string& e : errors)
            msg += "\n  " + e;
        throw std::invalid_argument(msg);
    }
    std::filesystem::create_directories(cfg.output_dir);

    RunResult result;
    Emitter em{cfg.output_dir, &result};
    std::vector<std::string> man;
    echo_config(cfg, man);

    switch (*cfg.task) {
    case Task::density_experiment:
        run_density(cfg, em, man, result);
        break;
    case Task::mode_single:
    case Task::mode_multi:
        run_modes(cfg, em, man, result);
        break;
    case Task::diagnostics:
        run_diagnostics(cfg, em, man);
        break;
    case Task::rate:
        run_rate(cfg, em, man);
        break;
    }

    std::string manifest;
    for (const std::string& line : man)
        manifest += line + "\n";
    em.file("manifest.txt", manifest);
    return result;
}

} // namespace easde
