#include "deepmkl/span.hpp"

#include <cmath>
#include <string>

#include "deepmkl/error.hpp"

namespace deepmkl {

void SpanConfig::validate() const {
    if (!(c > 0.0)) throw InputError("span smoothing slope c must be > 0");
    if (!(eta > 0.0)) throw InputError("span regularizer eta must be > 0");
    if (!std::isfinite(d_offset)) throw InputError("span smoothing offset must be finite");
}

double smoothing(const SpanConfig& cfg, double x) { return 1.0 / (1.0 + std::exp(-cfg.c * x + cfg.d_offset)); }

double smoothing_deriv(const SpanConfig& cfg, double x) {
    const double phi = smoothing(cfg, x);
    return cfg.c * phi * (1.0 - phi);
}

SpanWorkspace build_workspace(const SvmModel& model, const Eigen::MatrixXd& K, const SpanConfig& cfg) {
    cfg.validate();
    if (K.rows() != model.size() || K.cols() != model.size()) throw InputError("build_workspace: Gram size mismatch");
    const auto nsv = static_cast<Eigen::Index>(model.sv_indices.size());
    if (nsv < 2) throw InputError("span bound needs at least two support vectors, got " + std::to_string(nsv));

    SpanWorkspace ws;
    ws.sv = model.sv_indices;
    ws.alpha_sv.resize(nsv);
    ws.y_sv.resize(nsv);
    for (Eigen::Index a = 0; a < nsv; ++a) {
        const Eigen::Index i = ws.sv[static_cast<std::size_t>(a)];
        ws.alpha_sv(a) = model.alpha(i);
        ws.y_sv(a) = model.labels(i);
        if (!model.at_upper_bound(i)) ws.free.push_back(a);
    }

    ws.k_tilde = Eigen::MatrixXd::Zero(nsv + 1, nsv + 1);
    for (Eigen::Index a = 0; a < nsv; ++a) {
        for (Eigen::Index b = 0; b < nsv; ++b) ws.k_tilde(a, b) = K(ws.sv[static_cast<std::size_t>(a)], ws.sv[static_cast<std::size_t>(b)]);
        ws.k_tilde(a, nsv) = 1.0;
        ws.k_tilde(nsv, a) = 1.0;
    }

    ws.q_diag = Eigen::VectorXd::Zero(nsv + 1);
    ws.g_diag = Eigen::VectorXd::Zero(nsv + 1);
    for (Eigen::Index a = 0; a < nsv; ++a) {
        ws.q_diag(a) = cfg.eta / ws.alpha_sv(a);
        ws.g_diag(a) = -cfg.eta / (ws.alpha_sv(a) * ws.alpha_sv(a));
    }

    ws.b = ws.k_tilde;
    ws.b.diagonal() += ws.q_diag;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(ws.b);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-12)) {
        throw NumericError("span matrix B is numerically singular (rcond " + std::to_string(rcond) +
                           "); try a larger eta");
    }
    ws.b_inv = lu.inverse();

    // Bordered kernel over the free support vectors; at-bound alphas stay at C.
    const auto nf = static_cast<Eigen::Index>(ws.free.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nf + 1, nf + 1);
    for (Eigen::Index a = 0; a < nf; ++a) {
        for (Eigen::Index b = 0; b < nf; ++b) m(a, b) = ws.k_tilde(ws.free[static_cast<std::size_t>(a)], ws.free[static_cast<std::size_t>(b)]);
        m(a, nf) = 1.0;
        m(nf, a) = 1.0;
    }
    if (nf > 0) {
        const Eigen::PartialPivLU<Eigen::MatrixXd> mlu(m);
        if (mlu.rcond() > 1e-12) {
            ws.free_inv = mlu.inverse();
        } else {
            // Duplicate support vectors make the block singular; take the minimum-norm solution.
            ws.free_inv = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(m).pseudoInverse();
        }
    } else {
        ws.free_inv = Eigen::MatrixXd::Zero(1, 1);
    }
    ws.a_bar = ws.free_inv.topLeftCorner(nf, nf);
    return ws;
}

double smoothed_span_sq(const SpanWorkspace& ws, Eigen::Index p) {
    if (p < 0 || p >= ws.n_sv()) throw InputError("smoothed_span_sq: support vector index out of range");
    const double diag = ws.b_inv(p, p);
    if (!(diag > 0.0)) {
        throw NumericError("[B^-1]_pp = " + std::to_string(diag) + " is not positive for support vector " +
                           std::to_string(p));
    }
    return 1.0 / diag - ws.q_diag(p);
}

Eigen::VectorXd smoothed_spans(const SpanWorkspace& ws) {
    Eigen::VectorXd s(ws.n_sv());
    for (Eigen::Index p = 0; p < ws.n_sv(); ++p) s(p) = smoothed_span_sq(ws, p);
    return s;
}

double t_span(const SvmModel& model, const SpanWorkspace& ws, const SpanConfig& cfg) {
    if (ws.n_sv() != static_cast<Eigen::Index>(model.sv_indices.size())) throw InputError("t_span: workspace/model mismatch");
    double total = 0.0;
    for (Eigen::Index p = 0; p < ws.n_sv(); ++p) total += smoothing(cfg, ws.alpha_sv(p) * smoothed_span_sq(ws, p) - 1.0);
    return total;
}

SpanGradient span_grad(const SpanWorkspace& ws, const Eigen::MatrixXd& dK_full, const SvmModel& model,
                       const SpanConfig& cfg) {
    if (dK_full.rows() != model.size() || dK_full.cols() != model.size()) throw InputError("span_grad: shape mismatch");
    const Eigen::Index nsv = ws.n_sv();

    Eigen::MatrixXd dk_sv(nsv, nsv);
    for (Eigen::Index a = 0; a < nsv; ++a) {
        for (Eigen::Index b = 0; b < nsv; ++b) dk_sv(a, b) = dK_full(ws.sv[static_cast<std::size_t>(a)], ws.sv[static_cast<std::size_t>(b)]);
    }

    SpanGradient out;

    // alpha responds through the free-SV optimality system
    //   [K_FF 1; 1^T 0] (y_F alpha_F; b) = (y_F - K_{F,bound} y_bound C; -sum y_bound C).
    out.d_alpha = Eigen::VectorXd::Zero(nsv);
    const auto nf = static_cast<Eigen::Index>(ws.free.size());
    if (nf > 0) {
        const Eigen::VectorXd beta = ws.y_sv.cwiseProduct(ws.alpha_sv);
        const Eigen::VectorXd dk_beta = dk_sv * beta;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf + 1);
        for (Eigen::Index a = 0; a < nf; ++a) rhs(a) = -dk_beta(ws.free[static_cast<std::size_t>(a)]);
        const Eigen::VectorXd d_beta = ws.free_inv * rhs;
        for (Eigen::Index a = 0; a < nf; ++a) {
            const Eigen::Index pos = ws.free[static_cast<std::size_t>(a)];
            out.d_alpha(pos) = ws.y_sv(pos) * d_beta(a);
        }
    }

    // dQ = G dalpha on the support-vector diagonal.
    const Eigen::VectorXd dq = ws.g_diag.head(nsv).cwiseProduct(out.d_alpha);

    // [B^-1 dB B^-1]_pp with dB = [[dK_sv + diag(dq), 0], [0, 0]].
    const auto P = ws.b_inv.topLeftCorner(nsv, nsv);
    const Eigen::MatrixXd PdK = P * dk_sv;
    const Eigen::VectorXd quad = (PdK.array() * P.array()).rowwise().sum().matrix() +
                                 P.array().square().matrix() * dq;

    out.d_span_sq.resize(nsv);
    for (Eigen::Index p = 0; p < nsv; ++p) {
        const double diag = ws.b_inv(p, p);
        out.d_span_sq(p) = quad(p) / (diag * diag) - dq(p);
    }

    for (Eigen::Index p = 0; p < nsv; ++p) {
        const double s = smoothed_span_sq(ws, p);
        const double dphi = smoothing_deriv(cfg, ws.alpha_sv(p) * s - 1.0);
        out.d_t_span_span_only += dphi * ws.alpha_sv(p) * out.d_span_sq(p);
        out.d_t_span += dphi * (ws.alpha_sv(p) * out.d_span_sq(p) + s * out.d_alpha(p));
    }
    return out;
}

}  // namespace deepmkl
