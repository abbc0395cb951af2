#include "deepmkl/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "deepmkl/error.hpp"

namespace deepmkl {

namespace {

bool feasible_start(const Eigen::VectorXd& alpha, const Eigen::VectorXd& y, const Eigen::VectorXd& upper) {
    if (alpha.size() != y.size()) return false;
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
        if (!(alpha(i) >= 0.0) || alpha(i) > upper(i)) return false;
    }
    return std::abs(alpha.dot(y)) < 1e-9 * std::max(1.0, alpha.sum());
}

}  // namespace

double dual_objective(const Eigen::VectorXd& alpha, const Eigen::VectorXd& y, const Eigen::MatrixXd& K) {
    const Eigen::VectorXd ay = alpha.cwiseProduct(y);
    return alpha.sum() - 0.5 * ay.dot(K * ay);
}

SvmModel solve(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, const SvmOptions& options,
               const Eigen::VectorXd* warm_start) {
    const Eigen::Index n = K.rows();
    if (K.cols() != n || y.size() != n) throw InputError("solve: Gram and label sizes disagree");
    if (n < 2) throw InputError("solve: need at least two samples");
    if (!(options.C > 0.0)) throw InputError("solve: C must be positive");
    bool has_pos = false, has_neg = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (y(i) == 1.0) has_pos = true;
        else if (y(i) == -1.0) has_neg = true;
        else throw InputError("solve: labels must be -1 or +1");
    }
    if (!has_pos || !has_neg) throw InputError("solve: both classes must be present");
    if (!K.allFinite()) throw NumericError("solve: Gram matrix has non-finite entries");

    Eigen::VectorXd upper = Eigen::VectorXd::Constant(n, options.C);
    if (!options.sample_weights.empty()) {
        if (static_cast<Eigen::Index>(options.sample_weights.size()) != n) {
            throw InputError("solve: sample_weights size mismatch");
        }
        for (Eigen::Index i = 0; i < n; ++i) upper(i) = options.C * options.sample_weights[static_cast<std::size_t>(i)];
    }

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    if (warm_start != nullptr && feasible_start(*warm_start, y, upper)) alpha = *warm_start;

    // Gradient of 1/2 a^T Q a - e^T a with Q_ij = y_i y_j K_ij.
    Eigen::VectorXd grad = y.cwiseProduct(K * alpha.cwiseProduct(y)) - Eigen::VectorXd::Ones(n);

    auto in_up = [&](Eigen::Index t) { return y(t) > 0 ? alpha(t) < upper(t) : alpha(t) > 0.0; };
    auto in_low = [&](Eigen::Index t) { return y(t) > 0 ? alpha(t) > 0.0 : alpha(t) < upper(t); };

    std::int64_t iter = 0;
    double violation = 0.0;
    while (true) {
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        Eigen::Index i = -1, j = -1;
        for (Eigen::Index t = 0; t < n; ++t) {
            const double v = -y(t) * grad(t);
            if (in_up(t) && v > gmax) {
                gmax = v;
                i = t;
            }
            if (in_low(t) && v < gmin) {
                gmin = v;
                j = t;
            }
        }
        violation = (i < 0 || j < 0) ? 0.0 : gmax - gmin;
        if (violation < options.tolerance) break;
        if (iter >= options.max_iterations) {
            throw ConvergenceError("SMO did not converge in " + std::to_string(options.max_iterations) +
                                       " iterations; max KKT violation " + std::to_string(violation),
                                   violation);
        }
        ++iter;

        const double ci = upper(i), cj = upper(j);
        const double old_i = alpha(i), old_j = alpha(j);
        double& ai = alpha(i);
        double& aj = alpha(j);
        if (y(i) != y(j)) {
            double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
            if (quad <= 0.0) quad = options.tau;
            const double delta = (-grad(i) - grad(j)) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0.0) {
                if (aj < 0.0) {
                    aj = 0.0;
                    ai = diff;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = -diff;
            }
            if (diff > ci - cj) {
                if (ai > ci) {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if (aj > cj) {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
            if (quad <= 0.0) quad = options.tau;
            const double delta = (grad(i) - grad(j)) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > ci) {
                if (ai > ci) {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if (aj < 0.0) {
                aj = 0.0;
                ai = sum;
            }
            if (sum > cj) {
                if (aj > cj) {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = sum;
            }
        }

        const double di = (ai - old_i) * y(i);
        const double dj = (aj - old_j) * y(j);
        grad.array() += y.array() * (K.col(i).array() * di + K.col(j).array() * dj);
    }

    // Bias from free vectors, falling back to the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    int n_free = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const double yg = y(t) * grad(t);
        if (alpha(t) >= upper(t)) {
            if (y(t) < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (alpha(t) <= 0.0) {
            if (y(t) > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    const double rho = n_free > 0 ? sum_free / n_free : (ub + lb) / 2.0;

    SvmModel model;
    model.alpha = std::move(alpha);
    model.labels = y;
    model.upper = std::move(upper);
    model.bias = -rho;
    model.C = options.C;
    for (Eigen::Index t = 0; t < n; ++t) {
        if (model.alpha(t) > options.sv_threshold) model.sv_indices.push_back(t);
    }
    model.dual_value = dual_objective(model.alpha, y, K);
    model.iterations = iter;
    model.max_violation = violation;
    return model;
}

Eigen::VectorXd decision_values(const SvmModel& model, const Eigen::MatrixXd& K_cross) {
    if (K_cross.cols() != model.size()) {
        throw InputError("decision_values: expected " + std::to_string(model.size()) + " columns, got " +
                         std::to_string(K_cross.cols()));
    }
    const Eigen::VectorXd ay = model.alpha.cwiseProduct(model.labels);
    return (K_cross * ay).array() + model.bias;
}

Eigen::VectorXd predict(const SvmModel& model, const Eigen::MatrixXd& K_cross) {
    return decision_values(model, K_cross).unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
}

double dual_grad_theta(const SvmModel& model, const Eigen::MatrixXd& dK) {
    if (dK.rows() != model.size() || dK.cols() != model.size()) throw InputError("dual_grad_theta: shape mismatch");
    const Eigen::VectorXd ay = model.alpha.cwiseProduct(model.labels);
    return -0.5 * ay.dot(dK * ay);
}

}  // namespace deepmkl
