#pragma once

#include <vector>

#include <Eigen/Dense>

#include "deepmkl/svm.hpp"

namespace deepmkl {

struct SpanConfig {
    /// Slope and offset of the smoothing sigmoid phi(x) = 1 / (1 + exp(-c x + d)).
    double c = 5.0;
    double d_offset = 0.0;
    /// Span regularizer eta.
    double eta = 0.1;

    void validate() const;
};

double smoothing(const SpanConfig& cfg, double x);
double smoothing_deriv(const SpanConfig& cfg, double x);

/// Support-vector quantities shared by the span value and its gradients.
///
/// With n_sv support vectors (in model order):
///   k_tilde  = [[K_sv, 1], [1^T, 0]]
///   q_diag   = (eta / alpha_sv, 0)           diagonal of Q
///   g_diag   = (-eta / alpha_sv^2, 0)        diagonal of G = dQ/dalpha
///   b        = k_tilde + Q, b_inv its inverse
///   a_bar    = inverse of the bordered kernel over the free support vectors,
///              last row and column removed (equal to the all-SV version when
///              no support vector sits at its box bound)
struct SpanWorkspace {
    std::vector<Eigen::Index> sv;
    Eigen::VectorXd alpha_sv;
    Eigen::VectorXd y_sv;
    /// Positions within `sv` whose alpha is strictly inside the box.
    std::vector<Eigen::Index> free;
    Eigen::MatrixXd k_tilde;
    Eigen::VectorXd q_diag;
    Eigen::VectorXd g_diag;
    Eigen::MatrixXd b;
    Eigen::MatrixXd b_inv;
    Eigen::MatrixXd a_bar;
    /// Inverse (or pseudo-inverse, when singular) of the free-SV bordered kernel.
    Eigen::MatrixXd free_inv;

    Eigen::Index n_sv() const { return alpha_sv.size(); }
};

/// Throws InputError with fewer than two support vectors and NumericError
/// when B is numerically singular (reciprocal condition below 1e-12).
SpanWorkspace build_workspace(const SvmModel& model, const Eigen::MatrixXd& K, const SpanConfig& cfg);

/// S_p^2 = 1 / [B^-1]_pp - Q_pp for support vector position p.
double smoothed_span_sq(const SpanWorkspace& ws, Eigen::Index p);
Eigen::VectorXd smoothed_spans(const SpanWorkspace& ws);

/// sum_p phi(alpha_p S_p^2 - 1).
double t_span(const SvmModel& model, const SpanWorkspace& ws, const SpanConfig& cfg);

struct SpanGradient {
    /// dS_p^2 / dtheta_k per support vector.
    Eigen::VectorXd d_span_sq;
    /// d alpha_sv / dtheta_k with the support set and the at-bound set frozen.
    Eigen::VectorXd d_alpha;
    /// Full derivative of T_span, including the S_p^2 dalpha_p term.
    double d_t_span = 0.0;
    /// Only the alpha_p dS_p^2 term.
    double d_t_span_span_only = 0.0;
};

/// Gradient for one kernel weight given the full n x n derivative dK/dtheta_k.
SpanGradient span_grad(const SpanWorkspace& ws, const Eigen::MatrixXd& dK_full, const SvmModel& model,
                       const SpanConfig& cfg);

}  // namespace deepmkl
