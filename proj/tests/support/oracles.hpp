#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the code paths it is used to check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace deepmkl::oracle {

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Scalar evaluation of the layered kernel between two points, written as a
/// direct recursion over (layer, set) without matrices or caching.
struct ScalarStack {
    int layers;
    int sets;
    int m;
    std::vector<std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>> base;
    std::vector<std::function<double(double)>> compose;
    /// weight(layer, out, in, k)
    std::function<double(int, int, int, int)> weight;

    double raw(int layer, int set, const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        double r = 0.0;
        if (layer == 0) {
            for (int k = 0; k < m; ++k) r += weight(0, set, 0, k) * base[static_cast<std::size_t>(k)](x, y);
            return r;
        }
        for (int in = 0; in < sets; ++in) {
            const double prev = normalized(layer - 1, in, x, y);
            for (int k = 0; k < m; ++k) r += weight(layer, set, in, k) * compose[static_cast<std::size_t>(k)](prev);
        }
        return r;
    }

    double normalized(int layer, int set, const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        return raw(layer, set, x, y) / std::sqrt(raw(layer, set, x, x) * raw(layer, set, y, y));
    }

    double final_value(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        if (layers == 1 && sets > 1) {
            double s = 0.0;
            for (int set = 0; set < sets; ++set) s += normalized(0, set, x, y);
            return s / sets;
        }
        return normalized(layers - 1, 0, x, y);
    }
};

/// Regularized span by direct minimization of
///   K_pp - 2 lambda^T k_p + lambda^T (K_rest + diag(eta / alpha_rest)) lambda  s.t. sum lambda = 1
/// through its KKT system. Returns NaN if the reduced Hessian is not positive definite.
inline double qp_span_sq(const Eigen::MatrixXd& K_sv, const Eigen::VectorXd& alpha_sv, Eigen::Index p, double eta) {
    const Eigen::Index n = K_sv.rows();
    std::vector<Eigen::Index> rest;
    for (Eigen::Index i = 0; i < n; ++i)
        if (i != p) rest.push_back(i);
    const auto r = static_cast<Eigen::Index>(rest.size());
    Eigen::MatrixXd H(r, r);
    Eigen::VectorXd kp(r);
    for (Eigen::Index a = 0; a < r; ++a) {
        kp(a) = K_sv(rest[static_cast<std::size_t>(a)], p);
        for (Eigen::Index b = 0; b < r; ++b) H(a, b) = K_sv(rest[static_cast<std::size_t>(a)], rest[static_cast<std::size_t>(b)]);
        H(a, a) += eta / alpha_sv(rest[static_cast<std::size_t>(a)]);
    }
    // Positive definiteness on the constraint subspace sum(lambda) = 0.
    if (r > 1) {
        Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(r, r - 1);
        for (Eigen::Index c = 0; c < r - 1; ++c) {
            Z(c, c) = 1.0;
            Z(r - 1, c) = -1.0;
        }
        const Eigen::MatrixXd reduced = Z.transpose() * H * Z;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reduced);
        if (es.eigenvalues().minCoeff() <= 1e-12) return std::nan("");
    }
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(r + 1, r + 1);
    kkt.topLeftCorner(r, r) = 2.0 * H;
    kkt.block(0, r, r, 1).setOnes();
    kkt.block(r, 0, 1, r).setOnes();
    Eigen::VectorXd rhs(r + 1);
    rhs.head(r) = 2.0 * kp;
    rhs(r) = 1.0;
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    const Eigen::VectorXd lambda = sol.head(r);
    return K_sv(p, p) - 2.0 * lambda.dot(kp) + lambda.dot(H * lambda);
}

/// Exact p-value of the two-sided signed-rank test by enumerating every sign
/// pattern of the non-zero differences (average ranks for ties).
inline double brute_force_wilcoxon(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) d.push_back(a[i] - b[i]);
    const std::size_t n = d.size();
    if (n == 0) return 1.0;
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        double less = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(d[j]) < std::abs(d[i])) less += 1;
            else if (std::abs(d[j]) == std::abs(d[i])) equal += 1;
        }
        rank[i] = less + (equal + 1.0) / 2.0;
    }
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (d[i] > 0) w += rank[i];
    std::uint64_t le = 0, ge = 0;
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (std::uint64_t{1} << i)) s += rank[i];
        if (s <= w + 1e-9) ++le;
        if (s >= w - 1e-9) ++ge;
    }
    const double p = 2.0 * static_cast<double>(std::min(le, ge)) / static_cast<double>(total);
    return std::min(1.0, p);
}

/// Two Gaussian blobs in 2-D with the given centre separation.
inline void make_blobs(int n, double separation, std::uint64_t seed, Eigen::MatrixXd& X, Eigen::VectorXd& y,
                       double spread = 1.0, int dims = 2) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, spread);
    X.resize(n, dims);
    y.resize(n);
    for (int i = 0; i < n; ++i) {
        const double label = i % 2 == 0 ? 1.0 : -1.0;
        y(i) = label;
        for (int c = 0; c < dims; ++c) X(i, c) = noise(rng) + (c == 0 ? label * separation / 2.0 : 0.0);
    }
}

}  // namespace deepmkl::oracle
