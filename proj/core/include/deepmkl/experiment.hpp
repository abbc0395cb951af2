#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "deepmkl/kernels.hpp"
#include "deepmkl/stats.hpp"
#include "deepmkl/train.hpp"

namespace deepmkl {

struct DatasetEntry {
    std::string name;
    std::filesystem::path path;
    std::string label;
};

struct MethodEntry {
    Objective objective = Objective::Span;
    int layers = 1;
    /// Column name; defaults to "<objective>-<layers>".
    std::string name;
};

struct ExperimentConfig {
    std::vector<DatasetEntry> datasets;
    std::vector<MethodEntry> methods;
    std::vector<std::uint64_t> seeds{0};
    double train_fraction = 0.5;
    int sets = 1;
    std::vector<KernelSpec> kernels = default_roster();
    TrainOptions train;
    /// Method the p-values are computed against; empty means the last method.
    std::string reference;
    stats::TieRule rank_ties = stats::TieRule::Average;
    std::filesystem::path json_out;
    std::filesystem::path markdown_out;
    /// Worker threads; 0 uses the hardware concurrency.
    int threads = 0;

    void validate() const;
};

/// Parses the experiment file. Unknown keys are rejected; relative dataset
/// and output paths resolve against `base_dir`.
ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct CellFailure {
    std::size_t dataset = 0;
    std::size_t method = 0;
    std::uint64_t seed = 0;
    std::string reason;
};

struct Aggregates {
    /// datasets x methods seed-mean accuracy; nullopt when every seed failed.
    std::vector<std::vector<std::optional<double>>> mean_accuracy;
    /// Over datasets with no missing cell.
    std::vector<double> mean_ranks;
    std::size_t ranked_datasets = 0;
    /// Against the reference method; nullopt for the reference itself.
    std::vector<std::optional<double>> p_values;
};

struct ResultsTable {
    std::vector<std::string> datasets;
    /// Training-set size per dataset (first seed).
    std::vector<std::size_t> train_sizes;
    std::vector<std::string> methods;
    std::vector<std::uint64_t> seeds;
    /// accuracy[dataset][method][seed]; nullopt for failed cells.
    std::vector<std::vector<std::vector<std::optional<double>>>> accuracy;
    std::vector<CellFailure> failures;
    std::string reference;
    stats::TieRule rank_ties = stats::TieRule::Average;

    std::size_t reference_index() const;
    Aggregates aggregates() const;
};

struct CellResult {
    std::size_t dataset;
    std::size_t method;
    std::uint64_t seed;
    std::optional<double> accuracy;
    std::string error;
    int iterations = 0;
};

/// Runs every (dataset, seed, method) cell: load, split, standardize, fit,
/// evaluate. Cell failures are recorded and the run continues.
ResultsTable run(const ExperimentConfig& config, const std::function<void(const CellResult&)>& on_cell = {});

/// Accuracies as percentages with two decimals, plus mean-rank and p-value rows.
std::string render_markdown(const ResultsTable& table);

void to_json(nlohmann::json& j, const ResultsTable& table);
ResultsTable results_from_json(const nlohmann::json& j);

}  // namespace deepmkl
