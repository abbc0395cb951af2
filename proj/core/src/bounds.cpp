#include "deepmkl/bounds.hpp"

#include <cmath>
#include <numbers>

#include "deepmkl/error.hpp"

namespace deepmkl::bounds {

namespace {

void check(int layers, int sets, int kernels) {
    if (layers < 1 || sets < 1 || kernels < 1) throw InputError("layers, sets and kernels must be >= 1");
}

}  // namespace

std::int64_t pseudo_dim_bound(int layers, int sets, int kernels) {
    check(layers, sets, kernels);
    const std::int64_t l = layers, h = sets, m = kernels;
    if (l == 1) return m;
    return (l - 2) * h * h * m + 2 * h * m;
}

double rademacher_bound(int layers, int sets, int kernels, double u) {
    if (!(u >= 0.0)) throw InputError("u must be >= 0");
    return (192.0 * std::numbers::e + 1.0) * u * u *
           static_cast<double>(pseudo_dim_bound(layers, sets, kernels));
}

double equivalent_ffn_width(int layers, int sets, int kernels) {
    check(layers, sets, kernels);
    if (layers < 2) throw InputError("equivalent_ffn_width requires at least two layers");
    return std::sqrt(static_cast<double>(pseudo_dim_bound(layers, sets, kernels)) / (layers - 1));
}

}  // namespace deepmkl::bounds
