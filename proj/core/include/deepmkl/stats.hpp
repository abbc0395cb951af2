#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace deepmkl::stats {

/// How tied values are ranked. Average: mean of the covered ranks (rank sums
/// stay n(n+1)/2). Min: lowest covered rank. Dense: ties share a rank and the
/// next distinct value takes the next integer.
enum class TieRule { Average, Min, Dense };

TieRule parse_tie_rule(std::string_view name);
const char* to_string(TieRule rule);

/// Rank of each value, 1 for the largest. Values within `tie_tol` of each
/// other are tied.
std::vector<double> descending_ranks(std::span<const double> values, TieRule rule = TieRule::Average,
                                     double tie_tol = 1e-12);

/// `acc` is datasets x methods. Ranks the methods within each dataset
/// (best = 1) and returns each method's mean rank.
std::vector<double> mean_ranks(const std::vector<std::vector<double>>& acc, TieRule rule = TieRule::Average);

/// Two-sided paired Wilcoxon signed-rank p-value. Zero differences are dropped;
/// exact null distribution for up to `exact_limit` remaining pairs, normal
/// approximation with tie and continuity corrections beyond that.
double wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b, int exact_limit = 20);

}  // namespace deepmkl::stats
