#pragma once

#include <cstdint>

namespace deepmkl::bounds {

/// Free-weight count of an l-layer architecture with h sets of m kernels,
/// which bounds its pseudo-dimension: m for one layer, (l-2)h^2 m + 2hm otherwise.
std::int64_t pseudo_dim_bound(int layers, int sets, int kernels);

/// Rademacher chaos upper bound (192e + 1) u^2 pdim, with u the supremum of sqrt(K(x, x)).
double rademacher_bound(int layers, int sets, int kernels, double u);

/// Width d of a large-margin feed-forward network with the same free-parameter
/// count: d^2 (l - 1) = pdim. Requires l >= 2.
double equivalent_ffn_width(int layers, int sets, int kernels);

}  // namespace deepmkl::bounds
