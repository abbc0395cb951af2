#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace deepmkl {

struct SvmOptions {
    double C = 10.0;
    /// Stop when the maximal KKT violation m(alpha) - M(alpha) drops below this.
    double tolerance = 1e-3;
    std::int64_t max_iterations = 10'000'000;
    /// Floor for non-positive pairwise curvature (indefinite kernels).
    double tau = 1e-12;
    /// alpha_i above this counts as a support vector.
    double sv_threshold = 1e-6;
    /// Optional per-sample multipliers of C; empty means all ones.
    std::vector<double> sample_weights;
};

/// Soft-margin SVM dual solution. Decision value of a point x is
/// sum_i alpha_i y_i K(x_i, x) + bias.
struct SvmModel {
    Eigen::VectorXd alpha;
    Eigen::VectorXd labels;
    /// Per-sample box bound, C times the sample weight.
    Eigen::VectorXd upper;
    double bias = 0.0;
    double C = 10.0;
    std::vector<Eigen::Index> sv_indices;
    double dual_value = 0.0;
    std::int64_t iterations = 0;
    double max_violation = 0.0;

    Eigen::Index size() const { return alpha.size(); }
    /// alpha_i within sv_threshold of its box bound.
    bool at_upper_bound(Eigen::Index i, double sv_threshold = 1e-6) const {
        return alpha(i) >= upper(i) - sv_threshold;
    }
};

/// SMO with maximal-violating-pair selection over a precomputed Gram matrix.
/// `warm_start`, when feasible for the constraints, seeds alpha.
/// Throws ConvergenceError after options.max_iterations pair updates.
SvmModel solve(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, const SvmOptions& options = {},
               const Eigen::VectorXd* warm_start = nullptr);

/// sum(alpha) - 1/2 (alpha.y)^T K (alpha.y)
double dual_objective(const Eigen::VectorXd& alpha, const Eigen::VectorXd& y, const Eigen::MatrixXd& K);

/// Rows of K_cross are test points, columns the training points in training order.
Eigen::VectorXd decision_values(const SvmModel& model, const Eigen::MatrixXd& K_cross);

/// Sign of the decision value; exact zero maps to +1.
Eigen::VectorXd predict(const SvmModel& model, const Eigen::MatrixXd& K_cross);

/// Derivative of the dual value with respect to one kernel weight at fixed alpha:
/// -1/2 sum_ij alpha_i alpha_j y_i y_j dK_ij.
double dual_grad_theta(const SvmModel& model, const Eigen::MatrixXd& dK);

}  // namespace deepmkl
