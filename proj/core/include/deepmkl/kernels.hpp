#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace deepmkl {

enum class KernelKind { Linear, Rbf, Sigmoid, Polynomial };

std::string_view to_string(KernelKind kind);
KernelKind parse_kernel_kind(std::string_view name);

/// A base kernel and its fixed hyperparameters. The defaults are the
/// four-kernel roster used throughout the benchmarks.
struct KernelSpec {
    KernelKind kind = KernelKind::Linear;
    double gamma = 1.0;   // Rbf
    double alpha = 1.0;   // Sigmoid, Polynomial
    double beta = 1.0;    // Sigmoid, Polynomial
    int delta = 2;        // Polynomial

    static KernelSpec linear();
    static KernelSpec rbf(double gamma = 1.0);
    static KernelSpec sigmoid(double alpha = -1e-4, double beta = 1.0);
    static KernelSpec polynomial(double alpha = 1.0, double beta = 1.0, int delta = 2);

    /// Throws InputError when the hyperparameters are out of range.
    void validate() const;

    bool operator==(const KernelSpec&) const = default;
};

/// Linear, Rbf(1), Sigmoid(-1e-4, 1), Polynomial(1, 1, 2).
std::vector<KernelSpec> default_roster();

/// Layer-one evaluation on raw vectors.
double base_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

/// Evaluation on the value of a unit-normalized kernel from the previous
/// layer: Linear -> k, Rbf -> exp(-2 gamma (1 - k)), Sigmoid -> tanh(alpha k + beta),
/// Polynomial -> (alpha k + beta)^delta. Never clamps k.
double compose_eval(const KernelSpec& spec, double k_prev);

/// d compose_eval / d k_prev.
double compose_deriv(const KernelSpec& spec, double k_prev);

void to_json(nlohmann::json& j, const KernelSpec& spec);
void from_json(const nlohmann::json& j, KernelSpec& spec);

}  // namespace deepmkl
