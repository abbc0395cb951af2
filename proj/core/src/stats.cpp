#include "deepmkl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "deepmkl/error.hpp"

namespace deepmkl::stats {

namespace {

/// Ascending ranks (1-based) of `values`.
std::vector<double> ascending_ranks(std::span<const double> values, TieRule rule, double tie_tol) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    double dense = 0.0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] - values[order[i]] <= tie_tol) ++j;
        dense += 1.0;
        double r = dense;
        if (rule == TieRule::Average) r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        if (rule == TieRule::Min) r = static_cast<double>(i + 1);
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
        i = j;
    }
    return ranks;
}

}  // namespace

TieRule parse_tie_rule(std::string_view name) {
    if (name == "average") return TieRule::Average;
    if (name == "min") return TieRule::Min;
    if (name == "dense") return TieRule::Dense;
    throw InputError("unknown tie rule '" + std::string(name) + "' (expected average, min or dense)");
}

const char* to_string(TieRule rule) {
    switch (rule) {
        case TieRule::Min: return "min";
        case TieRule::Dense: return "dense";
        default: return "average";
    }
}

std::vector<double> descending_ranks(std::span<const double> values, TieRule rule, double tie_tol) {
    std::vector<double> negated(values.size());
    std::transform(values.begin(), values.end(), negated.begin(), [](double v) { return -v; });
    return ascending_ranks(negated, rule, tie_tol);
}

std::vector<double> mean_ranks(const std::vector<std::vector<double>>& acc, TieRule rule) {
    if (acc.empty()) throw InputError("mean_ranks: no datasets");
    const std::size_t M = acc.front().size();
    if (M == 0) throw InputError("mean_ranks: no methods");
    std::vector<double> total(M, 0.0);
    for (const auto& row : acc) {
        if (row.size() != M) throw InputError("mean_ranks: ragged accuracy matrix");
        for (double v : row) {
            if (std::isnan(v)) throw InputError("mean_ranks: missing accuracy cell");
        }
        const auto r = descending_ranks(row, rule);
        for (std::size_t m = 0; m < M; ++m) total[m] += r[m];
    }
    for (double& t : total) t /= static_cast<double>(acc.size());
    return total;
}

double wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b, int exact_limit) {
    if (a.size() != b.size()) throw InputError("wilcoxon_signed_rank: length mismatch");
    if (a.size() < 2) throw InputError("wilcoxon_signed_rank: need at least two pairs");

    std::vector<double> diff;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (std::abs(d) > 1e-12) diff.push_back(d);
    }
    const std::size_t n = diff.size();
    if (n == 0) return 1.0;

    std::vector<double> magnitude(n);
    std::transform(diff.begin(), diff.end(), magnitude.begin(), [](double d) { return std::abs(d); });
    const auto ranks = ascending_ranks(magnitude, TieRule::Average, 1e-12);
    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (diff[i] > 0) w_plus += ranks[i];
    }

    if (static_cast<int>(n) <= exact_limit) {
        // Average ranks are multiples of 1/2, so doubled ranks are integers and the
        // null distribution of 2 W+ over all 2^n sign patterns is a subset-sum count.
        std::vector<int> doubled(n);
        int total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            doubled[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
            total += doubled[i];
        }
        std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
        count[0] = 1.0;
        for (int r : doubled) {
            for (int s = total; s >= r; --s) count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - r)];
        }
        const int w = static_cast<int>(std::lround(2.0 * w_plus));
        double lower = 0.0, upper = 0.0;
        for (int s = 0; s <= total; ++s) {
            if (s <= w) lower += count[static_cast<std::size_t>(s)];
            if (s >= w) upper += count[static_cast<std::size_t>(s)];
        }
        const double all = std::ldexp(1.0, static_cast<int>(n));
        return std::min(1.0, 2.0 * std::min(lower, upper) / all);
    }

    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double tie_term = 0.0;
    {
        std::vector<double> sorted = ranks;
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i + 1;
            while (j < n && sorted[j] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i);
            tie_term += t * t * t - t;
            i = j;
        }
    }
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0.0) return 1.0;
    const double z = std::max(0.0, std::abs(w_plus - mean) - 0.5) / std::sqrt(var);
    return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

}  // namespace deepmkl::stats
