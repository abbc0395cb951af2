#include "deepmkl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

#include <nlohmann/json.hpp>

#include "deepmkl/dataset.hpp"
#include "deepmkl/error.hpp"
#include "deepmkl/stats.hpp"

namespace deepmkl {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw InputError(where + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw InputError("unknown key '" + key + "' in " + where);
        }
    }
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return base / p;
}

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (datasets.empty()) throw InputError("experiment needs at least one dataset");
    if (methods.empty()) throw InputError("experiment needs at least one method");
    if (seeds.empty()) throw InputError("experiment needs at least one seed");
    if (sets < 1) throw InputError("sets must be >= 1");
    if (kernels.empty()) throw InputError("experiment needs at least one kernel");
    for (const auto& m : methods) {
        if (m.layers < 1) throw InputError("method layers must be >= 1");
    }
    if (!reference.empty() &&
        std::none_of(methods.begin(), methods.end(), [&](const MethodEntry& m) { return m.name == reference; })) {
        throw InputError("reference method '" + reference + "' is not among the methods");
    }
}

ExperimentConfig parse_experiment_config(const json& j, const std::filesystem::path& base_dir) {
    reject_unknown(j, {"datasets", "methods", "seeds", "train_fraction", "architecture", "train", "reference",
                       "rank_ties", "output", "threads"},
                   "experiment config");
    ExperimentConfig cfg;

    for (const auto& d : j.at("datasets")) {
        reject_unknown(d, {"name", "path", "label"}, "dataset entry");
        cfg.datasets.push_back({d.at("name").get<std::string>(),
                                resolve(d.at("path").get<std::string>(), base_dir),
                                d.at("label").get<std::string>()});
    }

    std::set<std::string> names;
    for (const auto& m : j.at("methods")) {
        reject_unknown(m, {"objective", "layers", "name"}, "method entry");
        MethodEntry entry;
        entry.objective = parse_objective(m.at("objective").get<std::string>());
        entry.layers = m.at("layers").get<int>();
        entry.name = m.contains("name") ? m["name"].get<std::string>()
                                        : std::string(to_string(entry.objective)) + "-" + std::to_string(entry.layers);
        // Repeated entries keep distinct column names.
        std::string unique = entry.name;
        for (int k = 2; names.count(unique) != 0; ++k) unique = entry.name + "#" + std::to_string(k);
        entry.name = unique;
        names.insert(unique);
        cfg.methods.push_back(std::move(entry));
    }

    if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    cfg.train_fraction = j.value("train_fraction", cfg.train_fraction);

    if (j.contains("architecture")) {
        const auto& a = j["architecture"];
        reject_unknown(a, {"sets", "kernels", "theta_init"}, "architecture");
        cfg.sets = a.value("sets", 1);
        if (a.contains("kernels")) cfg.kernels = a["kernels"].get<std::vector<KernelSpec>>();
        if (a.contains("theta_init") && a["theta_init"].get<std::string>() != "uniform") {
            throw InputError("only theta_init \"uniform\" is supported");
        }
    }

    if (j.contains("train")) {
        const auto& t = j["train"];
        reject_unknown(t, {"step_size", "step_sizes", "max_iters", "C", "eta", "c", "d", "stop_tol", "stop_window",
                           "max_skips", "svm_tolerance"},
                       "train options");
        auto& o = cfg.train;
        o.step_size = t.value("step_size", o.step_size);
        if (t.contains("step_sizes")) o.step_sizes = t["step_sizes"].get<std::vector<double>>();
        o.max_iters = t.value("max_iters", o.max_iters);
        o.C = t.value("C", o.C);
        o.span.eta = t.value("eta", o.span.eta);
        o.span.c = t.value("c", o.span.c);
        o.span.d_offset = t.value("d", o.span.d_offset);
        o.stop_tol = t.value("stop_tol", o.stop_tol);
        o.stop_window = t.value("stop_window", o.stop_window);
        o.max_skips = t.value("max_skips", o.max_skips);
        o.svm_tolerance = t.value("svm_tolerance", o.svm_tolerance);
    }

    cfg.reference = j.value("reference", std::string{});
    if (j.contains("rank_ties")) cfg.rank_ties = stats::parse_tie_rule(j["rank_ties"].get<std::string>());
    if (j.contains("output")) {
        const auto& o = j["output"];
        reject_unknown(o, {"json", "markdown"}, "output");
        if (o.contains("json")) cfg.json_out = resolve(o["json"].get<std::string>(), base_dir);
        if (o.contains("markdown")) cfg.markdown_out = resolve(o["markdown"].get<std::string>(), base_dir);
    }
    cfg.threads = j.value("threads", 0);
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_experiment_config(j, path.parent_path());
}

// ---------------------------------------------------------------------------

std::size_t ResultsTable::reference_index() const {
    if (methods.empty()) throw InputError("results table has no methods");
    if (reference.empty()) return methods.size() - 1;
    const auto it = std::find(methods.begin(), methods.end(), reference);
    if (it == methods.end()) throw InputError("reference method '" + reference + "' not in table");
    return static_cast<std::size_t>(it - methods.begin());
}

Aggregates ResultsTable::aggregates() const {
    const std::size_t D = datasets.size(), M = methods.size();
    Aggregates agg;
    agg.mean_accuracy.assign(D, std::vector<std::optional<double>>(M));
    for (std::size_t d = 0; d < D; ++d) {
        for (std::size_t m = 0; m < M; ++m) {
            double sum = 0.0;
            int count = 0;
            for (const auto& cell : accuracy[d][m]) {
                if (cell) {
                    sum += *cell;
                    ++count;
                }
            }
            if (count > 0) agg.mean_accuracy[d][m] = sum / count;
        }
    }

    std::vector<std::vector<double>> complete;
    for (const auto& row : agg.mean_accuracy) {
        if (std::all_of(row.begin(), row.end(), [](const auto& v) { return v.has_value(); })) {
            std::vector<double> r;
            for (const auto& v : row) r.push_back(*v);
            complete.push_back(std::move(r));
        }
    }
    agg.ranked_datasets = complete.size();
    if (!complete.empty() && M > 0) agg.mean_ranks = stats::mean_ranks(complete, rank_ties);

    agg.p_values.assign(M, std::nullopt);
    if (M == 0) return agg;
    const std::size_t ref = reference_index();
    for (std::size_t m = 0; m < M; ++m) {
        if (m == ref) continue;
        std::vector<double> a, b;
        for (std::size_t d = 0; d < D; ++d) {
            if (agg.mean_accuracy[d][m] && agg.mean_accuracy[d][ref]) {
                a.push_back(*agg.mean_accuracy[d][m]);
                b.push_back(*agg.mean_accuracy[d][ref]);
            }
        }
        if (a.size() >= 2) agg.p_values[m] = stats::wilcoxon_signed_rank(a, b);
    }
    return agg;
}

ResultsTable run(const ExperimentConfig& config, const std::function<void(const CellResult&)>& on_cell) {
    config.validate();
    const std::size_t D = config.datasets.size(), M = config.methods.size(), S = config.seeds.size();

    ResultsTable table;
    table.methods.reserve(M);
    for (const auto& m : config.methods) table.methods.push_back(m.name);
    table.seeds = config.seeds;
    table.reference = config.reference.empty() ? config.methods.back().name : config.reference;
    table.rank_ties = config.rank_ties;
    table.accuracy.assign(D, std::vector<std::vector<std::optional<double>>>(M, std::vector<std::optional<double>>(S)));

    // Splits are cheap; prepare them up front so worker threads only fit.
    struct Split {
        std::optional<std::pair<Dataset, Dataset>> data;
        std::string error;
    };
    std::vector<std::vector<Split>> splits(D, std::vector<Split>(S));
    for (std::size_t d = 0; d < D; ++d) {
        const auto& entry = config.datasets[d];
        table.datasets.push_back(entry.name);
        const RawDataset raw = load_csv(entry.path, entry.label);
        for (std::size_t s = 0; s < S; ++s) {
            try {
                auto [tr, te] = split(raw, SplitSpec{config.seeds[s], config.train_fraction});
                splits[d][s].data = standardize(tr, te);
            } catch (const std::exception& e) {
                splits[d][s].error = e.what();
            }
        }
        table.train_sizes.push_back(splits[d][0].data ? static_cast<std::size_t>(splits[d][0].data->first.size())
                                                      : std::size_t{0});
    }

    struct Task {
        std::size_t d, m, s;
    };
    std::vector<Task> tasks;
    for (std::size_t d = 0; d < D; ++d)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t m = 0; m < M; ++m) tasks.push_back({d, m, s});

    std::mutex mu;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= tasks.size()) return;
            const auto [d, m, s] = tasks[idx];
            CellResult cell{d, m, config.seeds[s], std::nullopt, {}, 0};
            const auto& split_data = splits[d][s];
            if (!split_data.data) {
                cell.error = split_data.error;
            } else {
                try {
                    const auto& method = config.methods[m];
                    TrainOptions opts = config.train;
                    opts.objective = method.objective;
                    const ArchConfig arch(method.layers, config.sets, config.kernels);
                    const auto& [train, test] = *split_data.data;
                    const FitResult result = fit(arch, train, opts);
                    cell.iterations = result.report.iterations;
                    cell.accuracy = evaluate(result.config, result.model, train, test);
                } catch (const std::exception& e) {
                    cell.error = e.what();
                }
            }
            std::lock_guard lock(mu);
            table.accuracy[d][m][s] = cell.accuracy;
            if (!cell.accuracy) table.failures.push_back({d, m, cell.seed, cell.error});
            if (on_cell) on_cell(cell);
        }
    };

    std::size_t n_threads = config.threads > 0 ? static_cast<std::size_t>(config.threads)
                                               : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min(n_threads, tasks.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    std::sort(table.failures.begin(), table.failures.end(), [](const CellFailure& a, const CellFailure& b) {
        return std::tie(a.dataset, a.method, a.seed) < std::tie(b.dataset, b.method, b.seed);
    });

    if (!config.json_out.empty()) {
        std::ofstream out(config.json_out);
        if (!out) throw InputError("cannot write '" + config.json_out.string() + "'");
        out << json(table).dump(2) << '\n';
    }
    if (!config.markdown_out.empty()) {
        std::ofstream out(config.markdown_out);
        if (!out) throw InputError("cannot write '" + config.markdown_out.string() + "'");
        out << render_markdown(table);
    }
    return table;
}

std::string render_markdown(const ResultsTable& table) {
    const Aggregates agg = table.aggregates();
    const std::size_t ref = table.reference_index();
    std::string out = "| Dataset | n |";
    for (const auto& m : table.methods) out += " " + m + " |";
    out += "\n| --- | ---: |";
    for (std::size_t m = 0; m < table.methods.size(); ++m) out += " ---: |";
    out += "\n";
    for (std::size_t d = 0; d < table.datasets.size(); ++d) {
        out += "| " + table.datasets[d] + " | " + std::to_string(table.train_sizes[d]) + " |";
        for (const auto& v : agg.mean_accuracy[d]) out += " " + (v ? fmt("%.2f", 100.0 * *v) : std::string("n/a")) + " |";
        out += "\n";
    }
    out += "| Rank | |";
    for (std::size_t m = 0; m < table.methods.size(); ++m) {
        out += " " + (agg.mean_ranks.empty() ? std::string("n/a") : fmt("%.2f", agg.mean_ranks[m])) + " |";
    }
    out += "\n| p-value vs " + table.methods[ref] + " | |";
    for (std::size_t m = 0; m < table.methods.size(); ++m) {
        const auto& p = agg.p_values[m];
        out += " " + (m == ref ? std::string("-") : p ? fmt("%.3f", *p) : std::string("n/a")) + " |";
    }
    out += "\n";
    return out;
}

void to_json(json& j, const ResultsTable& table) {
    json acc = json::array();
    for (const auto& per_method : table.accuracy) {
        json jm = json::array();
        for (const auto& per_seed : per_method) {
            json js = json::array();
            for (const auto& v : per_seed) js.push_back(v ? json(*v) : json(nullptr));
            jm.push_back(std::move(js));
        }
        acc.push_back(std::move(jm));
    }
    json failures = json::array();
    for (const auto& f : table.failures) {
        failures.push_back({{"dataset", table.datasets[f.dataset]},
                            {"method", table.methods[f.method]},
                            {"seed", f.seed},
                            {"reason", f.reason}});
    }

    const Aggregates agg = table.aggregates();
    json mean_acc = json::array();
    for (const auto& row : agg.mean_accuracy) {
        json r = json::array();
        for (const auto& v : row) r.push_back(v ? json(*v) : json(nullptr));
        mean_acc.push_back(std::move(r));
    }
    json pvals = json::object();
    for (std::size_t m = 0; m < table.methods.size(); ++m) {
        if (agg.p_values[m]) pvals[table.methods[m]] = *agg.p_values[m];
    }

    j = json{{"datasets", table.datasets},
             {"train_sizes", table.train_sizes},
             {"methods", table.methods},
             {"seeds", table.seeds},
             {"accuracy", std::move(acc)},
             {"failures", std::move(failures)},
             {"reference", table.reference},
             {"rank_ties", stats::to_string(table.rank_ties)},
             {"aggregates",
              {{"mean_accuracy", std::move(mean_acc)},
               {"mean_ranks", agg.mean_ranks},
               {"ranked_datasets", agg.ranked_datasets},
               {"p_values", std::move(pvals)}}}};
}

ResultsTable results_from_json(const json& j) {
    ResultsTable t;
    t.datasets = j.at("datasets").get<std::vector<std::string>>();
    t.methods = j.at("methods").get<std::vector<std::string>>();
    t.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    t.train_sizes = j.contains("train_sizes") ? j["train_sizes"].get<std::vector<std::size_t>>()
                                              : std::vector<std::size_t>(t.datasets.size(), 0);
    t.reference = j.value("reference", std::string{});
    if (j.contains("rank_ties")) t.rank_ties = stats::parse_tie_rule(j["rank_ties"].get<std::string>());

    const auto& acc = j.at("accuracy");
    if (acc.size() != t.datasets.size()) throw InputError("accuracy tensor does not match dataset count");
    for (const auto& per_method : acc) {
        if (per_method.size() != t.methods.size()) throw InputError("accuracy tensor does not match method count");
        std::vector<std::vector<std::optional<double>>> row;
        for (const auto& per_seed : per_method) {
            if (per_seed.size() != t.seeds.size()) throw InputError("accuracy tensor does not match seed count");
            std::vector<std::optional<double>> cells;
            for (const auto& v : per_seed) cells.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
            row.push_back(std::move(cells));
        }
        t.accuracy.push_back(std::move(row));
    }

    auto index_of = [](const std::vector<std::string>& names, const std::string& name) {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw InputError("unknown name '" + name + "' in failures");
        return static_cast<std::size_t>(it - names.begin());
    };
    if (j.contains("failures")) {
        for (const auto& f : j["failures"]) {
            t.failures.push_back({index_of(t.datasets, f.at("dataset").get<std::string>()),
                                  index_of(t.methods, f.at("method").get<std::string>()),
                                  f.at("seed").get<std::uint64_t>(), f.value("reason", std::string{})});
        }
    }
    return t;
}

}  // namespace deepmkl
