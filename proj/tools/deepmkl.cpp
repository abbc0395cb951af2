// deepmkl: experiment runner and utilities for deep multiple kernel learning.
//
//   deepmkl run    --config exp.json
//   deepmkl bounds --layers L --sets H --kernels M [--u U]
//   deepmkl fit    --data D.csv --label CLASS [--layers 3 --objective span ...] --out model.json
//   deepmkl stats  --table results.json [--reference span-3] [--ties dense]

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "deepmkl/arch.hpp"
#include "deepmkl/bounds.hpp"
#include "deepmkl/dataset.hpp"
#include "deepmkl/error.hpp"
#include "deepmkl/experiment.hpp"
#include "deepmkl/train.hpp"

namespace {

using nlohmann::json;

int cmd_run(const std::string& config_path, int threads, bool quiet) {
    deepmkl::ExperimentConfig cfg = deepmkl::load_experiment_config(config_path);
    if (threads > 0) cfg.threads = threads;
    const auto table = deepmkl::run(cfg, [&](const deepmkl::CellResult& cell) {
        if (quiet) return;
        std::fprintf(stderr, "%-16s %-10s seed %-4llu ", cfg.datasets[cell.dataset].name.c_str(),
                     cfg.methods[cell.method].name.c_str(), static_cast<unsigned long long>(cell.seed));
        if (cell.accuracy) std::fprintf(stderr, "acc %.4f (%d iters)\n", *cell.accuracy, cell.iterations);
        else std::fprintf(stderr, "FAILED: %s\n", cell.error.c_str());
    });
    std::cout << deepmkl::render_markdown(table);
    if (!table.failures.empty()) std::cerr << table.failures.size() << " cell(s) failed\n";
    return 0;
}

int cmd_bounds(int layers, int sets, int kernels, double u) {
    std::printf("pseudo_dim_bound      %lld\n",
                static_cast<long long>(deepmkl::bounds::pseudo_dim_bound(layers, sets, kernels)));
    std::printf("rademacher_bound      %.10g\n", deepmkl::bounds::rademacher_bound(layers, sets, kernels, u));
    if (layers >= 2) {
        std::printf("equivalent_ffn_width  %.10g\n", deepmkl::bounds::equivalent_ffn_width(layers, sets, kernels));
    } else {
        std::printf("equivalent_ffn_width  undefined (needs at least two layers)\n");
    }
    return 0;
}

struct FitArgs {
    std::string data;
    std::string label;
    int layers = 3;
    int sets = 1;
    std::string objective = "span";
    double eta = 0.1;
    double c_svm = 10.0;
    int iters = 500;
    double step = 0.05;
    std::uint64_t seed = 0;
    double train_fraction = 0.5;
    std::string out;
};

int cmd_fit(const FitArgs& a) {
    const auto raw = deepmkl::load_csv(a.data, a.label);
    const auto [train_raw, test_raw] = deepmkl::split(raw, {a.seed, a.train_fraction});
    const auto [train, test] = deepmkl::standardize(train_raw, test_raw);

    deepmkl::TrainOptions opts;
    opts.objective = deepmkl::parse_objective(a.objective);
    opts.span.eta = a.eta;
    opts.C = a.c_svm;
    opts.max_iters = a.iters;
    opts.step_size = a.step;

    const deepmkl::ArchConfig arch(a.layers, a.sets, deepmkl::default_roster());
    const auto result = deepmkl::fit(arch, train, opts);
    const double train_acc = deepmkl::evaluate(result.config, result.model, train, train);
    const double test_acc = deepmkl::evaluate(result.config, result.model, train, test);

    std::printf("rows %zu (dropped %zu), train %lld, test %lld\n", raw.size(), raw.dropped_rows,
                static_cast<long long>(train.size()), static_cast<long long>(test.size()));
    std::printf("%s objective: best %.6g at iteration %d of %d (%s)\n", a.objective.c_str(),
                result.report.best_objective, result.report.best_iteration, result.report.iterations,
                std::string(deepmkl::to_string(result.report.termination)).c_str());
    std::printf("support vectors %zu, train accuracy %.4f, test accuracy %.4f\n", result.model.sv_indices.size(),
                train_acc, test_acc);

    if (!a.out.empty()) {
        json scaling = json::array();
        for (const auto& s : train.scaling) scaling.push_back({{"mean", s.mean}, {"stddev", s.stddev}});
        json model = {{"architecture", result.config},
                      {"objective", a.objective},
                      {"split", {{"seed", a.seed}, {"train_fraction", a.train_fraction}}},
                      {"standardization", scaling},
                      {"svm",
                       {{"C", result.model.C},
                        {"bias", result.model.bias},
                        {"alpha", std::vector<double>(result.model.alpha.begin(), result.model.alpha.end())},
                        {"sv_indices", result.model.sv_indices},
                        {"dual_value", result.model.dual_value}}},
                      {"report", result.report},
                      {"train_accuracy", train_acc},
                      {"test_accuracy", test_acc}};
        std::ofstream out(a.out);
        if (!out) throw deepmkl::InputError("cannot write '" + a.out + "'");
        out << model.dump(2) << '\n';
    }
    return 0;
}

int cmd_stats(const std::string& path, const std::string& reference, const std::string& ties) {
    std::ifstream in(path);
    if (!in) throw deepmkl::InputError("cannot open '" + path + "'");
    auto table = deepmkl::results_from_json(json::parse(in));
    if (!reference.empty()) table.reference = reference;
    if (!ties.empty()) table.rank_ties = deepmkl::stats::parse_tie_rule(ties);
    std::cout << deepmkl::render_markdown(table);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep multiple kernel learning: training, benchmarks and bound calculators"};
    app.require_subcommand(1);

    std::string config_path;
    int threads = 0;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "Run an experiment grid from a JSON config");
    run->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
    run->add_option("--threads", threads, "Worker threads (overrides the config)");
    run->add_flag("--quiet", quiet, "Suppress per-cell progress");

    int layers = 1, sets = 1, kernels = 1;
    double u = 1.0;
    auto* bounds = app.add_subcommand("bounds", "Print pseudo-dimension, Rademacher bound and equivalent width");
    bounds->add_option("--layers", layers)->required()->check(CLI::PositiveNumber);
    bounds->add_option("--sets", sets)->required()->check(CLI::PositiveNumber);
    bounds->add_option("--kernels", kernels)->required()->check(CLI::PositiveNumber);
    bounds->add_option("--u", u, "sup sqrt(K(x,x)); 1 for normalized kernels")->check(CLI::NonNegativeNumber);

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "Train one model on a seeded half split and report test accuracy");
    fit->add_option("--data", fa.data, "CSV file")->required()->check(CLI::ExistingFile);
    fit->add_option("--label", fa.label, "Label column name")->required();
    fit->add_option("--layers", fa.layers)->check(CLI::PositiveNumber);
    fit->add_option("--sets", fa.sets)->check(CLI::PositiveNumber);
    fit->add_option("--objective", fa.objective)->check(CLI::IsMember({"span", "dual"}));
    fit->add_option("--eta", fa.eta, "Span regularizer");
    fit->add_option("--c-svm", fa.c_svm, "SVM box constraint C");
    fit->add_option("--iters", fa.iters, "Maximum iterations")->check(CLI::PositiveNumber);
    fit->add_option("--step", fa.step, "Step size for every weight")->check(CLI::Range(0.0, 1.0));
    fit->add_option("--seed", fa.seed, "Split seed");
    fit->add_option("--train-fraction", fa.train_fraction)->check(CLI::Range(0.0, 1.0));
    fit->add_option("--out", fa.out, "Write the trained model as JSON");

    std::string table_path, reference, ties;
    auto* stats = app.add_subcommand("stats", "Recompute mean ranks and p-values for a results file");
    stats->add_option("--table", table_path, "results.json")->required()->check(CLI::ExistingFile);
    stats->add_option("--reference", reference, "Reference method for p-values");
    stats->add_option("--ties", ties, "Rank tie rule (default: the file's, else average)")
        ->check(CLI::IsMember({"average", "min", "dense"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(config_path, threads, quiet);
        if (*bounds) return cmd_bounds(layers, sets, kernels, u);
        if (*fit) return cmd_fit(fa);
        if (*stats) return cmd_stats(table_path, reference, ties);
    } catch (const deepmkl::TrainError& e) {
        std::cerr << "error: " << e.what() << " (after " << e.partial().iterations << " iterations)\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
