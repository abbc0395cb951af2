#include "deepmkl/arch.hpp"

#include <cmath>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "deepmkl/error.hpp"

namespace deepmkl {

// ---------------------------------------------------------------------------
// ArchConfig
// ---------------------------------------------------------------------------

std::size_t ArchConfig::LayerShape::size() const {
    return static_cast<std::size_t>(out_sets) * static_cast<std::size_t>(in_sets);
}

ArchConfig::ArchConfig(int layers, int sets, std::vector<KernelSpec> specs)
    : layers_(layers), sets_(sets), specs_(std::move(specs)) {
    if (layers_ < 1) throw InputError("architecture needs at least one layer");
    if (sets_ < 1) throw InputError("architecture needs at least one set per layer");
    if (specs_.empty()) throw InputError("architecture needs at least one base kernel");
    for (const auto& s : specs_) s.validate();

    std::size_t total = 0;
    for (int l = 0; l < layers_; ++l) total += layer_shape(l).size() * specs_.size();
    theta_.assign(total, 1.0 / static_cast<double>(specs_.size()));
}

ArchConfig::LayerShape ArchConfig::layer_shape(int layer) const {
    if (layer < 0 || layer >= layers_) throw InputError("layer index out of range");
    const auto m = specs_.size();
    const auto h = static_cast<std::size_t>(sets_);
    LayerShape shape{};
    if (layer == 0) {
        shape = {sets_, 1, 0};
    } else {
        const int out = layer == layers_ - 1 ? 1 : sets_;
        // layer 0 holds h*m weights, each middle layer h*h*m.
        shape = {out, sets_, h * m + static_cast<std::size_t>(layer - 1) * h * h * m};
    }
    return shape;
}

std::size_t ArchConfig::weight_index(int layer, int out, int in, int kernel) const {
    const auto shape = layer_shape(layer);
    if (out < 0 || out >= shape.out_sets || in < 0 || in >= shape.in_sets || kernel < 0 ||
        kernel >= kernels()) {
        throw InputError("weight index out of range");
    }
    const auto m = specs_.size();
    return shape.offset + (static_cast<std::size_t>(out) * static_cast<std::size_t>(shape.in_sets) +
                           static_cast<std::size_t>(in)) * m + static_cast<std::size_t>(kernel);
}

ArchConfig::WeightId ArchConfig::weight_id(std::size_t flat) const {
    if (flat >= theta_.size()) throw InputError("flat weight index out of range");
    const auto m = specs_.size();
    for (int l = layers_ - 1; l >= 0; --l) {
        const auto shape = layer_shape(l);
        if (flat < shape.offset) continue;
        const std::size_t local = flat - shape.offset;
        const auto k = static_cast<int>(local % m);
        const auto pair = local / m;
        return {l, static_cast<int>(pair / static_cast<std::size_t>(shape.in_sets)),
                static_cast<int>(pair % static_cast<std::size_t>(shape.in_sets)), k};
    }
    throw InputError("flat weight index out of range");
}

void ArchConfig::set_theta(std::vector<double> theta) {
    if (theta.size() != theta_.size()) {
        throw InputError("theta has " + std::to_string(theta.size()) + " entries, expected " +
                         std::to_string(theta_.size()));
    }
    for (double w : theta) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("weights must be finite and non-negative");
    }
    theta_ = std::move(theta);
}

void ArchConfig::scale_layer(int layer, double factor) {
    const auto shape = layer_shape(layer);
    const auto count = shape.size() * specs_.size();
    for (std::size_t i = 0; i < count; ++i) theta_[shape.offset + i] *= factor;
}

void ArchConfig::validate() const {
    for (const auto& s : specs_) s.validate();
    for (double w : theta_) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("weights must be finite and non-negative");
    }
}

void to_json(nlohmann::json& j, const ArchConfig& config) {
    j = nlohmann::json{{"layers", config.layers()},
                       {"sets", config.sets()},
                       {"kernels", config.specs()},
                       {"theta", std::vector<double>(config.theta().begin(), config.theta().end())}};
}

ArchConfig arch_from_json(const nlohmann::json& j) {
    for (const auto& [key, _] : j.items()) {
        if (key != "layers" && key != "sets" && key != "kernels" && key != "theta_init" && key != "theta") {
            throw InputError("unknown architecture field '" + key + "'");
        }
    }
    if (j.contains("theta_init") && j["theta_init"].get<std::string>() != "uniform") {
        throw InputError("only theta_init \"uniform\" is supported");
    }
    std::vector<KernelSpec> specs = j.contains("kernels") ? j["kernels"].get<std::vector<KernelSpec>>()
                                                          : default_roster();
    ArchConfig config(j.at("layers").get<int>(), j.value("sets", 1), std::move(specs));
    if (j.contains("theta")) config.set_theta(j["theta"].get<std::vector<double>>());
    return config;
}

// ---------------------------------------------------------------------------
// Forward pass
// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd compose_matrix(const KernelSpec& spec, const Eigen::MatrixXd& k) {
    return k.unaryExpr([&spec](double v) { return compose_eval(spec, v); });
}

Eigen::MatrixXd compose_deriv_matrix(const KernelSpec& spec, const Eigen::MatrixXd& k) {
    return k.unaryExpr([&spec](double v) { return compose_deriv(spec, v); });
}

void check_diagonal(const Eigen::VectorXd& diag, const char* where) {
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
        if (!std::isfinite(diag(i)) || diag(i) < 1e-300) {
            throw NumericError(std::string("normalization undefined at ") + where + ": raw diagonal entry " +
                               std::to_string(i) + " is " + std::to_string(diag(i)));
        }
    }
}

std::string where(int layer, int set) {
    return "layer " + std::to_string(layer) + " set " + std::to_string(set);
}

Eigen::MatrixXd normalize_checked(const Eigen::MatrixXd& raw, const std::string& location) {
    const Eigen::VectorXd d = raw.diagonal();
    check_diagonal(d, location.c_str());
    const Eigen::VectorXd s = d.cwiseSqrt();
    Eigen::MatrixXd n = raw.array() / (s * s.transpose()).array();
    n.diagonal().setOnes();
    if (!n.allFinite()) throw NumericError("non-finite normalized Gram at " + location);
    return n;
}

/// Directional derivative of the normalization quotient.
Eigen::MatrixXd normalize_tangent(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& normalized,
                                  const Eigen::MatrixXd& d_raw) {
    const Eigen::VectorXd d = raw.diagonal();
    const Eigen::VectorXd s = d.cwiseSqrt();
    const Eigen::VectorXd r = d_raw.diagonal().cwiseQuotient(d);
    const Eigen::Index n = raw.rows();
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            out(i, j) = d_raw(i, j) / (s(i) * s(j)) - 0.5 * normalized(i, j) * (r(i) + r(j));
        }
    }
    out.diagonal().setZero();
    return out;
}

}  // namespace

Eigen::MatrixXd normalize_gram(const Eigen::MatrixXd& raw) {
    if (raw.rows() != raw.cols()) throw InputError("normalize_gram: matrix is not square");
    return normalize_checked(raw, "input");
}

Eigen::MatrixXd base_gram(const KernelSpec& spec, const Eigen::MatrixXd& X) {
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd G(n, n);
    // Row-major copies give contiguous spans for base_eval.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R = X;
    const auto d = static_cast<std::size_t>(X.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::span<const double> xi(R.row(i).data(), d);
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = base_eval(spec, xi, std::span<const double>(R.row(j).data(), d));
            G(i, j) = v;
            G(j, i) = v;
        }
    }
    return G;
}

GramStack forward(const ArchConfig& config, const Eigen::MatrixXd& X) {
    config.validate();
    if (X.rows() < 1) throw InputError("forward: empty input");
    const int L = config.layers();
    const int m = config.kernels();
    const auto& specs = config.specs();

    GramStack stack;
    stack.layers.resize(static_cast<std::size_t>(L));

    for (int l = 0; l < L; ++l) {
        auto& cache = stack.layers[static_cast<std::size_t>(l)];
        const auto shape = config.layer_shape(l);
        if (l == 0) {
            for (int k = 0; k < m; ++k) cache.inputs.push_back(base_gram(specs[static_cast<std::size_t>(k)], X));
        } else {
            const auto& prev = stack.layers[static_cast<std::size_t>(l - 1)].normalized;
            for (int in = 0; in < shape.in_sets; ++in) {
                for (int k = 0; k < m; ++k) {
                    const auto& spec = specs[static_cast<std::size_t>(k)];
                    cache.inputs.push_back(compose_matrix(spec, prev[static_cast<std::size_t>(in)]));
                    cache.input_derivs.push_back(compose_deriv_matrix(spec, prev[static_cast<std::size_t>(in)]));
                }
            }
        }
        for (int out = 0; out < shape.out_sets; ++out) {
            Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(X.rows(), X.rows());
            for (int in = 0; in < shape.in_sets; ++in) {
                for (int k = 0; k < m; ++k) {
                    const double w = config.weight(l, out, in, k);
                    if (w != 0.0) raw.noalias() += w * cache.inputs[static_cast<std::size_t>(in * m + k)];
                }
            }
            cache.normalized.push_back(normalize_checked(raw, where(l, out)));
            cache.raw.push_back(std::move(raw));
        }
    }

    const auto& last = stack.layers.back();
    if (L == 1 && config.sets() > 1) {
        stack.averaged = Eigen::MatrixXd::Zero(X.rows(), X.rows());
        for (const auto& n : last.normalized) stack.averaged += n;
        stack.averaged /= static_cast<double>(config.sets());
        stack.final_gram = normalize_checked(stack.averaged, "set average");
    } else {
        stack.final_gram = last.normalized.front();
    }
    return stack;
}

Eigen::MatrixXd forward_cross(const ArchConfig& config, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z) {
    config.validate();
    if (X.cols() != Z.cols()) throw InputError("forward_cross: dimension mismatch");
    const int L = config.layers();
    const int m = config.kernels();
    const auto& specs = config.specs();
    const auto d = static_cast<std::size_t>(X.cols());
    const Eigen::Index nx = X.rows();
    const Eigen::Index nz = Z.rows();

    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> RX = X, RZ = Z;

    // Normalized cross blocks of the previous layer, one per set. Self-similarities
    // of normalized sets are exactly one, so only the cross block is carried.
    std::vector<Eigen::MatrixXd> prev;
    for (int l = 0; l < L; ++l) {
        const auto shape = config.layer_shape(l);
        std::vector<Eigen::MatrixXd> inputs;
        std::vector<Eigen::VectorXd> dz_inputs, dx_inputs;
        if (l == 0) {
            for (int k = 0; k < m; ++k) {
                const auto& spec = specs[static_cast<std::size_t>(k)];
                Eigen::MatrixXd g(nz, nx);
                Eigen::VectorXd dz(nz), dx(nx);
                for (Eigen::Index i = 0; i < nz; ++i) {
                    const std::span<const double> zi(RZ.row(i).data(), d);
                    dz(i) = base_eval(spec, zi, zi);
                    for (Eigen::Index j = 0; j < nx; ++j) {
                        g(i, j) = base_eval(spec, zi, std::span<const double>(RX.row(j).data(), d));
                    }
                }
                for (Eigen::Index j = 0; j < nx; ++j) {
                    const std::span<const double> xj(RX.row(j).data(), d);
                    dx(j) = base_eval(spec, xj, xj);
                }
                inputs.push_back(std::move(g));
                dz_inputs.push_back(std::move(dz));
                dx_inputs.push_back(std::move(dx));
            }
        } else {
            for (int in = 0; in < shape.in_sets; ++in) {
                for (int k = 0; k < m; ++k) {
                    const auto& spec = specs[static_cast<std::size_t>(k)];
                    const double self = compose_eval(spec, 1.0);
                    inputs.push_back(compose_matrix(spec, prev[static_cast<std::size_t>(in)]));
                    dz_inputs.push_back(Eigen::VectorXd::Constant(nz, self));
                    dx_inputs.push_back(Eigen::VectorXd::Constant(nx, self));
                }
            }
        }

        std::vector<Eigen::MatrixXd> next;
        for (int out = 0; out < shape.out_sets; ++out) {
            Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(nz, nx);
            Eigen::VectorXd rz = Eigen::VectorXd::Zero(nz), rx = Eigen::VectorXd::Zero(nx);
            for (int in = 0; in < shape.in_sets; ++in) {
                for (int k = 0; k < m; ++k) {
                    const double w = config.weight(l, out, in, k);
                    if (w == 0.0) continue;
                    const auto idx = static_cast<std::size_t>(in * m + k);
                    raw.noalias() += w * inputs[idx];
                    rz += w * dz_inputs[idx];
                    rx += w * dx_inputs[idx];
                }
            }
            const auto loc = where(l, out);
            check_diagonal(rz, loc.c_str());
            check_diagonal(rx, loc.c_str());
            const Eigen::VectorXd sz = rz.cwiseSqrt(), sx = rx.cwiseSqrt();
            Eigen::MatrixXd n = raw.array() / (sz * sx.transpose()).array();
            if (!n.allFinite()) throw NumericError("non-finite normalized Gram at " + loc);
            next.push_back(std::move(n));
        }
        prev = std::move(next);
    }

    if (L == 1 && config.sets() > 1) {
        // Averages of unit-diagonal Grams keep a unit diagonal; re-normalization is the identity.
        Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(nz, nx);
        for (const auto& n : prev) avg += n;
        return avg / static_cast<double>(config.sets());
    }
    return prev.front();
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

std::vector<Eigen::MatrixXd> grad_theta(const ArchConfig& config, const GramStack& stack) {
    const int L = config.layers();
    const int m = config.kernels();
    if (static_cast<int>(stack.layers.size()) != L) throw InputError("grad_theta: stack does not match config");
    const Eigen::Index n = stack.size();

    // Chain factors per layer l >= 1: jac[l][out * in_sets + in] = sum_k w(l,out,in,k) * compose'_k(prev[in]).
    std::vector<std::vector<Eigen::MatrixXd>> jac(static_cast<std::size_t>(L));
    for (int l = 1; l < L; ++l) {
        const auto shape = config.layer_shape(l);
        const auto& cache = stack.layers[static_cast<std::size_t>(l)];
        for (int out = 0; out < shape.out_sets; ++out) {
            for (int in = 0; in < shape.in_sets; ++in) {
                Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
                for (int k = 0; k < m; ++k) {
                    j.noalias() += config.weight(l, out, in, k) * cache.input_derivs[static_cast<std::size_t>(in * m + k)];
                }
                jac[static_cast<std::size_t>(l)].push_back(std::move(j));
            }
        }
    }

    std::vector<Eigen::MatrixXd> grads;
    grads.reserve(config.num_weights());
    for (std::size_t w = 0; w < config.num_weights(); ++w) {
        const auto id = config.weight_id(w);
        const auto& cache = stack.layers[static_cast<std::size_t>(id.layer)];

        // Tangent of each normalized set at the current layer; nullopt means zero.
        std::vector<std::optional<Eigen::MatrixXd>> tangent(static_cast<std::size_t>(config.layer_shape(id.layer).out_sets));
        tangent[static_cast<std::size_t>(id.out)] =
            normalize_tangent(cache.raw[static_cast<std::size_t>(id.out)], cache.normalized[static_cast<std::size_t>(id.out)],
                              cache.inputs[static_cast<std::size_t>(id.in * m + id.kernel)]);

        for (int l = id.layer + 1; l < L; ++l) {
            const auto shape = config.layer_shape(l);
            const auto& c = stack.layers[static_cast<std::size_t>(l)];
            std::vector<std::optional<Eigen::MatrixXd>> next(static_cast<std::size_t>(shape.out_sets));
            for (int out = 0; out < shape.out_sets; ++out) {
                Eigen::MatrixXd d_raw = Eigen::MatrixXd::Zero(n, n);
                bool any = false;
                for (int in = 0; in < shape.in_sets; ++in) {
                    const auto& t = tangent[static_cast<std::size_t>(in)];
                    if (!t) continue;
                    d_raw.array() += jac[static_cast<std::size_t>(l)][static_cast<std::size_t>(out * shape.in_sets + in)].array() * t->array();
                    any = true;
                }
                if (any) {
                    next[static_cast<std::size_t>(out)] =
                        normalize_tangent(c.raw[static_cast<std::size_t>(out)], c.normalized[static_cast<std::size_t>(out)], d_raw);
                }
            }
            tangent = std::move(next);
        }

        if (L == 1 && config.sets() > 1) {
            Eigen::MatrixXd d_avg = Eigen::MatrixXd::Zero(n, n);
            for (const auto& t : tangent) {
                if (t) d_avg += *t;
            }
            d_avg /= static_cast<double>(config.sets());
            grads.push_back(normalize_tangent(stack.averaged, stack.final_gram, d_avg));
        } else {
            grads.push_back(tangent.front() ? std::move(*tangent.front()) : Eigen::MatrixXd::Zero(n, n));
        }
    }
    return grads;
}

}  // namespace deepmkl
