#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace equifl::fairness {

enum class PenaltyKind { kSoftDp, kNone };

// Per-group tallies underlying the hard-decision metrics.
struct GroupOutcomes {
  std::vector<std::size_t> total;
  std::vector<std::size_t> positive_pred;
  std::vector<std::size_t> actual_positive;
  std::vector<std::size_t> true_positive;

  std::size_t num_groups() const { return total.size(); }

  // labels may be empty when only prediction rates are needed.
  static GroupOutcomes tally(const std::vector<int>& predictions,
                             const std::vector<int>& labels,
                             const std::vector<int>& sensitive);
};

// Max pairwise gap in positive-prediction rates across groups present in the
// sample. 0 when fewer than two groups are present.
double delta_dp(const std::vector<int>& predictions,
                const std::vector<int>& sensitive);

// Max pairwise gap in true-positive rates. Groups without any actual
// positives are excluded; 0 when fewer than two groups remain.
double delta_eo(const std::vector<int>& predictions,
                const std::vector<int>& labels,
                const std::vector<int>& sensitive);

struct SoftDpResult {
  double value = 0.0;
  Eigen::VectorXd grad;  // same length as the input probabilities
};

// Differentiable surrogate of delta_dp: the max pairwise absolute gap of
// group-mean predicted probabilities. The gradient is the subgradient of
// that max: +1/|hi| on rows of the higher-mean group of the selected pair,
// -1/|lo| on the lower, 0 elsewhere. Ties select the lowest-index pair; a
// zero gap yields a zero gradient.
SoftDpResult soft_dp_penalty(const Eigen::VectorXd& probabilities,
                             const std::vector<int>& sensitive);

}  // namespace equifl::fairness
