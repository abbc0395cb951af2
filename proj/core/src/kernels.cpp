#include "deepmkl/kernels.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "deepmkl/error.hpp"

namespace deepmkl {

namespace {

double ipow(double base, int exponent) {
    double result = 1.0;
    for (int i = 0; i < exponent; ++i) result *= base;
    return result;
}

double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double checked(double value, const KernelSpec& spec) {
    if (!std::isfinite(value)) {
        throw NumericError("non-finite value from " + std::string(to_string(spec.kind)) + " kernel");
    }
    return value;
}

}  // namespace

std::string_view to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::Linear: return "linear";
        case KernelKind::Rbf: return "rbf";
        case KernelKind::Sigmoid: return "sigmoid";
        case KernelKind::Polynomial: return "polynomial";
    }
    return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
    if (name == "linear") return KernelKind::Linear;
    if (name == "rbf") return KernelKind::Rbf;
    if (name == "sigmoid") return KernelKind::Sigmoid;
    if (name == "polynomial") return KernelKind::Polynomial;
    throw InputError("unknown kernel kind '" + std::string(name) + "'");
}

KernelSpec KernelSpec::linear() { return KernelSpec{}; }

KernelSpec KernelSpec::rbf(double gamma) {
    KernelSpec s;
    s.kind = KernelKind::Rbf;
    s.gamma = gamma;
    return s;
}

KernelSpec KernelSpec::sigmoid(double alpha, double beta) {
    KernelSpec s;
    s.kind = KernelKind::Sigmoid;
    s.alpha = alpha;
    s.beta = beta;
    return s;
}

KernelSpec KernelSpec::polynomial(double alpha, double beta, int delta) {
    KernelSpec s;
    s.kind = KernelKind::Polynomial;
    s.alpha = alpha;
    s.beta = beta;
    s.delta = delta;
    return s;
}

void KernelSpec::validate() const {
    if (kind == KernelKind::Rbf && !(gamma > 0.0)) throw InputError("rbf gamma must be > 0");
    if (kind == KernelKind::Polynomial && delta < 1) throw InputError("polynomial delta must be >= 1");
    if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(gamma)) {
        throw InputError("kernel hyperparameters must be finite");
    }
}

std::vector<KernelSpec> default_roster() {
    return {KernelSpec::linear(), KernelSpec::rbf(1.0), KernelSpec::sigmoid(-1e-4, 1.0),
            KernelSpec::polynomial(1.0, 1.0, 2)};
}

double base_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InputError("base_eval: dimension mismatch");
    switch (spec.kind) {
        case KernelKind::Linear: return checked(dot(x, y), spec);
        case KernelKind::Rbf: {
            double d2 = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double d = x[i] - y[i];
                d2 += d * d;
            }
            return checked(std::exp(-spec.gamma * d2), spec);
        }
        case KernelKind::Sigmoid: return checked(std::tanh(spec.alpha * dot(x, y) + spec.beta), spec);
        case KernelKind::Polynomial:
            return checked(ipow(spec.alpha * dot(x, y) + spec.beta, spec.delta), spec);
    }
    return 0.0;
}

double compose_eval(const KernelSpec& spec, double k) {
    switch (spec.kind) {
        case KernelKind::Linear: return k;
        case KernelKind::Rbf: return checked(std::exp(-2.0 * spec.gamma * (1.0 - k)), spec);
        case KernelKind::Sigmoid: return checked(std::tanh(spec.alpha * k + spec.beta), spec);
        case KernelKind::Polynomial: return checked(ipow(spec.alpha * k + spec.beta, spec.delta), spec);
    }
    return 0.0;
}

double compose_deriv(const KernelSpec& spec, double k) {
    switch (spec.kind) {
        case KernelKind::Linear: return 1.0;
        case KernelKind::Rbf:
            return checked(2.0 * spec.gamma * std::exp(-2.0 * spec.gamma * (1.0 - k)), spec);
        case KernelKind::Sigmoid: {
            const double t = std::tanh(spec.alpha * k + spec.beta);
            return checked(spec.alpha * (1.0 - t * t), spec);
        }
        case KernelKind::Polynomial:
            return checked(spec.alpha * spec.delta * ipow(spec.alpha * k + spec.beta, spec.delta - 1), spec);
    }
    return 0.0;
}

void to_json(nlohmann::json& j, const KernelSpec& spec) {
    j = nlohmann::json{{"kind", to_string(spec.kind)}};
    switch (spec.kind) {
        case KernelKind::Linear: break;
        case KernelKind::Rbf: j["gamma"] = spec.gamma; break;
        case KernelKind::Sigmoid:
            j["alpha"] = spec.alpha;
            j["beta"] = spec.beta;
            break;
        case KernelKind::Polynomial:
            j["alpha"] = spec.alpha;
            j["beta"] = spec.beta;
            j["delta"] = spec.delta;
            break;
    }
}

void from_json(const nlohmann::json& j, KernelSpec& spec) {
    for (const auto& [key, _] : j.items()) {
        if (key != "kind" && key != "gamma" && key != "alpha" && key != "beta" && key != "delta") {
            throw InputError("unknown kernel field '" + key + "'");
        }
    }
    // Missing hyperparameters fall back to the roster defaults for the kind.
    switch (parse_kernel_kind(j.at("kind").get<std::string>())) {
        case KernelKind::Linear: spec = KernelSpec::linear(); break;
        case KernelKind::Rbf: spec = KernelSpec::rbf(); break;
        case KernelKind::Sigmoid: spec = KernelSpec::sigmoid(); break;
        case KernelKind::Polynomial: spec = KernelSpec::polynomial(); break;
    }
    if (j.contains("gamma")) spec.gamma = j["gamma"].get<double>();
    if (j.contains("alpha")) spec.alpha = j["alpha"].get<double>();
    if (j.contains("beta")) spec.beta = j["beta"].get<double>();
    if (j.contains("delta")) spec.delta = j["delta"].get<int>();
    spec.validate();
}

}  // namespace deepmkl
