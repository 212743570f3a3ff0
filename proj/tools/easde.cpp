// Command line front end: config-driven experiment pipelines plus small
// fit/eval utilities around the model file format.

#include "easde/experiment.hpp"
#include "easde/rng.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::string read_file(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("cannot read config file: " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

// Builds the effective config text: file content, then the subcommand's task
// line, then --set overrides. Later lines win for scalar keys, so overrides
// stack in that order.
std::string compose(const std::string& config_path, const std::string& task_line,
                    const std::vector<std::string>& sets)
{
    std::string text;
    if (!config_path.empty())
        text = read_file(config_path);
    text += "\n";
    if (!task_line.empty())
        text += task_line + "\n";
    for (const std::string& s : sets)
        text += s + "\n";
    return text;
}

easde::ExperimentConfig parse_or_die(const std::string& text)
{
    easde::ConfigParse parsed = easde::parse_config(text);
    if (!parsed.config) {
        std::cerr << "invalid configuration:\n";
        for (const std::string& e : parsed.errors)
            std::cerr << "  " << e << "\n";
        std::exit(2);
    }
    return *parsed.config;
}

int run_task(const std::string& config_path, const std::string& task_line,
             const std::vector<std::string>& sets)
{
    easde::ExperimentConfig cfg =
        parse_or_die(compose(config_path, task_line, sets));
    easde::RunResult result = easde::run(cfg);
    for (const std::string& f : result.files)
        std::cout << "wrote " << f << "\n";
    return 0;
}

int run_fit(const std::string& config_path, const std::vector<std::string>& sets,
            const std::string& out)
{
    // fit ignores task/output_dir, so pinning them keeps validation happy for
    // configs that only describe the data and estimator.
    std::string text = compose(config_path, "task = mode-single", sets);
    text += "output_dir = .\n";
    easde::ExperimentConfig cfg = parse_or_die(text);

    const std::uint64_t seed = cfg.seeds.front();
    easde::VmfMixture mix = easde::realize_mixture(
        cfg.mixture, cfg.d, easde::derive_seed(seed, easde::kSeedStreamMeans));
    easde::PointList train = easde::mixture_sample(
        mix, cfg.n_train, easde::derive_seed(seed, easde::kSeedStreamTrain));
    const std::size_t m = cfg.m ? *cfg.m : cfg.n_train;
    const std::uint64_t bank_seed =
        easde::derive_seed(easde::derive_seed(seed, easde::kSeedStreamBank), 0);

    easde::EasModel model;
    std::size_t k_used = 0;
    if (cfg.k) {
        k_used = std::min(*cfg.k, m);
        model = easde::fit(easde::make_bank(cfg.d, m, bank_seed), k_used, train);
    } else {
        easde::PointList val = easde::mixture_sample(
            mix, cfg.n_val, easde::derive_seed(seed, easde::kSeedStreamVal));
        easde::DensityFn truth = [&mix](const easde::UnitVector& x) {
            return easde::mixture_pdf(mix, x);
        };
        easde::EasSelection sel =
            easde::select_eas_k(m, cfg.d, train, val, truth, bank_seed);
        k_used = sel.best_k;
        model = std::move(sel.model);
    }
    easde::save_model(model, out);
    std::cout << "wrote " << out << " (d=" << cfg.d << " m=" << m
              << " k=" << k_used << " n=" << cfg.n_train << ")\n";
    return 0;
}

int run_eval(const std::string& model_path, const std::string& points_path)
{
    easde::EasModel model = easde::load_model(model_path);
    std::ifstream is(points_path);
    if (!is) {
        std::cerr << "cannot read points file: " << points_path << "\n";
        return 1;
    }
    std::string line;
    std::size_t lineno = 0;
    char buf[64];
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#')
            continue;
        std::vector<double> coords;
        std::istringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ','))
            coords.push_back(std::stod(tok));
        // Project onto the sphere: inputs are directions, not unit vectors.
        double norm = 0.0;
        for (double v : coords)
            norm += v * v;
        norm = std::sqrt(norm);
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            std::cerr << "line " << lineno << ": not a usable direction\n";
            return 1;
        }
        for (double& v : coords)
            v /= norm;
        try {
            easde::UnitVector x(coords);
            std::snprintf(buf, sizeof buf, "%.17g",
                          easde::evaluate(model, x));
            std::cout << buf << "\n";
        } catch (const std::exception& e) {
            std::cerr << "line " << lineno << ": " << e.what() << "\n";
            return 1;
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Expand-and-sparsify density and mode estimation on the sphere"};
    app.require_subcommand(1);

    std::string config_path, out_path, model_path, points_path;
    std::vector<std::string> sets;
    bool multi = false;

    auto add_common = [&](CLI::App* cmd, bool config_required) {
        auto* opt = cmd->add_option("-c,--config", config_path,
                                    "Configuration file (key = value lines)");
        if (config_required)
            opt->required()->check(CLI::ExistingFile);
        cmd->add_option("--set", sets,
                        "Override a config entry, e.g. --set seeds=7 "
                        "(repeatable, applied last)");
    };

    CLI::App* experiment =
        app.add_subcommand("experiment", "Density-estimation comparison sweep");
    add_common(experiment, true);

    CLI::App* modes = app.add_subcommand("modes", "Mode recovery on a fresh sample");
    add_common(modes, true);
    modes->add_flag("--multi", multi, "Run the multi-mode procedure");

    CLI::App* diagnostics =
        app.add_subcommand("diagnostics", "Code-region volume/diameter diagnostics");
    add_common(diagnostics, true);

    CLI::App* rate = app.add_subcommand("rate", "Error-versus-n rate experiment");
    add_common(rate, true);

    CLI::App* fit = app.add_subcommand("fit", "Fit one model and save it");
    add_common(fit, true);
    fit->add_option("-o,--out", out_path, "Model file to write")->required();

    CLI::App* eval = app.add_subcommand("eval", "Evaluate a saved model at points");
    eval->add_option("-m,--model", model_path, "Model file")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("-p,--points", points_path,
                     "CSV of query coordinates, one point per line")
        ->required()
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(experiment))
            return run_task(config_path, "task = density-experiment", sets);
        if (app.got_subcommand(modes))
            return run_task(config_path,
                            multi ? "task = mode-multi" : "task = mode-single",
                            sets);
        if (app.got_subcommand(diagnostics))
            return run_task(config_path, "task = diagnostics", sets);
        if (app.got_subcommand(rate))
            return run_task(config_path, "task = rate", sets);
        if (app.got_subcommand(fit))
            return run_fit(config_path, sets, out_path);
        if (app.got_subcommand(eval))
            return run_eval(model_path, points_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
