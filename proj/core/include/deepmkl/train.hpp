#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "deepmkl/arch.hpp"
#include "deepmkl/dataset.hpp"
#include "deepmkl/span.hpp"
#include "deepmkl/svm.hpp"

namespace deepmkl {

enum class Objective { Span, Dual };

std::string_view to_string(Objective objective);
Objective parse_objective(std::string_view name);

struct TrainOptions {
    Objective objective = Objective::Span;
    /// Step size for every weight. Overridden by `step_sizes` when non-empty.
    double step_size = 0.05;
    /// Either one entry per base kernel (applied to every weight on that
    /// kernel) or one entry per flat weight.
    std::vector<double> step_sizes;
    int max_iters = 500;
    double C = 10.0;
    SpanConfig span;
    /// Relative objective change over `stop_window` iterations that counts as a stall.
    double stop_tol = 1e-6;
    int stop_window = 10;
    /// Consecutive iterations with fewer than two support vectors before giving up.
    int max_skips = 20;
    double svm_tolerance = 1e-3;

    void validate(const ArchConfig& config) const;
    std::vector<double> steps_for(const ArchConfig& config) const;
};

/// NumericFailure: a later iteration broke down (for example every weight of a
/// set projected to zero); the best earlier iterate is returned.
enum class Termination { MaxIterations, Stalled, NumericFailure };
std::string_view to_string(Termination t);

struct TrainReport {
    /// Objective at the start of each iteration: T_span, or the dual value.
    /// NaN marks an iteration skipped for having fewer than two support vectors.
    std::vector<double> objective_trace;
    std::vector<int> sv_trace;
    std::vector<double> final_theta;
    int iterations = 0;
    int best_iteration = -1;
    double best_objective = 0.0;
    Termination termination = Termination::MaxIterations;
    /// Reason for a NumericFailure stop.
    std::string failure;
};

void to_json(nlohmann::json& j, const TrainReport& report);

struct FitResult {
    ArchConfig config;
    SvmModel model;
    TrainReport report;
};

/// Raised when no usable iterate exists (the first iteration fails, or too many
/// consecutive iterations have fewer than two support vectors).
class TrainError : public std::runtime_error {
public:
    TrainError(const std::string& what, TrainReport partial)
        : std::runtime_error(what), partial_(std::move(partial)) {}
    const TrainReport& partial() const noexcept { return partial_; }

private:
    TrainReport partial_;
};

/// Alternates SVM solves with projected gradient steps on the kernel weights.
/// Returns the weights (and their SVM) with the lowest objective seen.
FitResult fit(const ArchConfig& config, const Dataset& train, const TrainOptions& options);

/// Fraction of test points classified correctly by the trained stack.
double evaluate(const ArchConfig& config, const SvmModel& model, const Dataset& train, const Dataset& test);

}  // namespace deepmkl
