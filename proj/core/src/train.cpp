#include "deepmkl/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <nlohmann/json.hpp>

#include "deepmkl/error.hpp"

namespace deepmkl {

std::string_view to_string(Objective objective) {
    return objective == Objective::Span ? "span" : "dual";
}

Objective parse_objective(std::string_view name) {
    if (name == "span") return Objective::Span;
    if (name == "dual") return Objective::Dual;
    throw InputError("unknown objective '" + std::string(name) + "' (expected span or dual)");
}

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::MaxIterations: return "max_iterations";
        case Termination::Stalled: return "stalled";
        case Termination::NumericFailure: return "numeric_failure";
    }
    return "unknown";
}

void TrainOptions::validate(const ArchConfig& config) const {
    if (max_iters < 1) throw InputError("max_iters must be >= 1");
    if (!(C > 0.0)) throw InputError("C must be > 0");
    if (stop_window < 1) throw InputError("stop_window must be >= 1");
    span.validate();
    for (double g : steps_for(config)) {
        if (!(g >= 0.0 && g <= 1.0)) throw InputError("step sizes must lie in [0, 1]");
    }
}

std::vector<double> TrainOptions::steps_for(const ArchConfig& config) const {
    const std::size_t P = config.num_weights();
    if (step_sizes.empty()) return std::vector<double>(P, step_size);
    if (step_sizes.size() == P) return step_sizes;
    if (step_sizes.size() == static_cast<std::size_t>(config.kernels())) {
        std::vector<double> steps(P);
        for (std::size_t w = 0; w < P; ++w) steps[w] = step_sizes[static_cast<std::size_t>(config.weight_id(w).kernel)];
        return steps;
    }
    throw InputError("step_sizes must have one entry per kernel or per weight");
}

void to_json(nlohmann::json& j, const TrainReport& report) {
    nlohmann::json trace = nlohmann::json::array();
    for (double v : report.objective_trace) {
        if (std::isnan(v)) trace.push_back(nullptr);
        else trace.push_back(v);
    }
    j = nlohmann::json{{"objective_trace", trace},
                       {"sv_trace", report.sv_trace},
                       {"final_theta", report.final_theta},
                       {"iterations", report.iterations},
                       {"best_iteration", report.best_iteration},
                       {"best_objective", report.best_objective},
                       {"termination", to_string(report.termination)}};
    if (!report.failure.empty()) j["failure"] = report.failure;
}

FitResult fit(const ArchConfig& config, const Dataset& train, const TrainOptions& options) {
    config.validate();
    options.validate(config);
    if (train.size() < 2) throw InputError("fit: need at least two training points");

    const std::vector<double> steps = options.steps_for(config);
    const std::size_t P = config.num_weights();

    SvmOptions svm_options;
    svm_options.C = options.C;
    svm_options.tolerance = options.svm_tolerance;

    ArchConfig current = config;
    std::optional<ArchConfig> best_config;
    std::optional<SvmModel> best_model;
    std::optional<Eigen::VectorXd> warm;
    TrainReport report;
    int skips = 0;

    auto fail = [&](const std::string& what, int iteration) {
        report.iterations = iteration;
        report.final_theta.assign(current.theta().begin(), current.theta().end());
        return TrainError("iteration " + std::to_string(iteration) + ": " + what, report);
    };

    for (int t = 0; t < options.max_iters; ++t) {
        GramStack stack;
        SvmModel model;
        std::vector<double> grad(P, 0.0);
        double objective = std::numeric_limits<double>::quiet_NaN();
        try {
            stack = forward(current, train.X);
            model = solve(stack.final_gram, train.y, svm_options, warm ? &*warm : nullptr);
            warm = model.alpha;
            report.sv_trace.push_back(static_cast<int>(model.sv_indices.size()));

            if (options.objective == Objective::Span && model.sv_indices.size() < 2) {
                report.objective_trace.push_back(objective);
                report.iterations = t + 1;
                if (++skips > options.max_skips) throw fail("too many iterations with fewer than two support vectors", t + 1);
                continue;
            }

            const auto dK = grad_theta(current, stack);
            if (options.objective == Objective::Span) {
                const SpanWorkspace ws = build_workspace(model, stack.final_gram, options.span);
                objective = t_span(model, ws, options.span);
                for (std::size_t w = 0; w < P; ++w) grad[w] = span_grad(ws, dK[w], model, options.span).d_t_span;
            } else {
                objective = model.dual_value;
                for (std::size_t w = 0; w < P; ++w) grad[w] = dual_grad_theta(model, dK[w]);
            }
        } catch (const TrainError&) {
            throw;
        } catch (const std::exception& e) {
            if (!best_config) throw fail(e.what(), t);
            report.sv_trace.resize(report.objective_trace.size());
            report.termination = Termination::NumericFailure;
            report.failure = "iteration " + std::to_string(t) + ": " + e.what();
            break;
        }
        skips = 0;
        report.objective_trace.push_back(objective);

        if (!best_config || objective < report.best_objective) {
            report.best_objective = objective;
            report.best_iteration = t;
            best_config = current;
            best_model = model;
        }

        if (t >= options.stop_window) {
            const double past = report.objective_trace[static_cast<std::size_t>(t - options.stop_window)];
            if (!std::isnan(past) &&
                std::abs(objective - past) <= options.stop_tol * std::max(std::abs(past), 1e-300)) {
                report.termination = Termination::Stalled;
                report.iterations = t + 1;
                break;
            }
        }
        report.iterations = t + 1;

        std::vector<double> theta(current.theta().begin(), current.theta().end());
        for (std::size_t w = 0; w < P; ++w) theta[w] = std::max(0.0, theta[w] - steps[w] * grad[w]);
        current.set_theta(std::move(theta));
    }

    if (!best_config) throw fail("no iteration produced a usable objective", report.iterations);
    report.final_theta.assign(best_config->theta().begin(), best_config->theta().end());
    return FitResult{std::move(*best_config), std::move(*best_model), std::move(report)};
}

double evaluate(const ArchConfig& config, const SvmModel& model, const Dataset& train, const Dataset& test) {
    if (train.size() != model.size()) throw InputError("evaluate: model and training set sizes differ");
    if (test.size() == 0) throw InputError("evaluate: empty test set");
    const Eigen::MatrixXd K_cross = forward_cross(config, train.X, test.X);
    const Eigen::VectorXd pred = predict(model, K_cross);
    Eigen::Index correct = 0;
    for (Eigen::Index i = 0; i < test.size(); ++i) correct += pred(i) == test.y(i) ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace deepmkl
