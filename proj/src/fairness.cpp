#include "equifl/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "equifl/errors.hpp"

namespace equifl::fairness {

namespace {

std::size_t group_count(const std::vector<int>& sensitive) {
  int max_index = -1;
  for (int g : sensitive) {
    if (g < 0) throw InputError("group indices must be non-negative");
    max_index = std::max(max_index, g);
  }
  return static_cast<std::size_t>(max_index + 1);
}

void check_binary(const std::vector<int>& values, const char* what) {
  for (int v : values) {
    if (v != 0 && v != 1) throw InputError(std::string(what) + " must be 0 or 1");
  }
}

}  // namespace

GroupOutcomes GroupOutcomes::tally(const std::vector<int>& predictions,
                                   const std::vector<int>& labels,
                                   const std::vector<int>& sensitive) {
  if (predictions.size() != sensitive.size()) {
    throw DimensionError("tally: predictions and sensitive lengths differ");
  }
  if (!labels.empty() && labels.size() != predictions.size()) {
    throw DimensionError("tally: labels length differs");
  }
  const std::size_t groups = group_count(sensitive);
  GroupOutcomes out;
  out.total.assign(groups, 0);
  out.positive_pred.assign(groups, 0);
  out.actual_positive.assign(groups, 0);
  out.true_positive.assign(groups, 0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int g = sensitive[i];
    out.total[g] += 1;
    if (predictions[i] == 1) out.positive_pred[g] += 1;
    if (!labels.empty() && labels[i] == 1) {
      out.actual_positive[g] += 1;
      if (predictions[i] == 1) out.true_positive[g] += 1;
    }
  }
  return out;
}

double delta_dp(const std::vector<int>& predictions,
                const std::vector<int>& sensitive) {
  if (predictions.empty()) throw InputError("delta_dp: empty input");
  check_binary(predictions, "predictions");
  const GroupOutcomes t = GroupOutcomes::tally(predictions, {}, sensitive);
  double best = 0.0;
  for (std::size_t s = 0; s < t.num_groups(); ++s) {
    if (t.total[s] == 0) continue;
    const double rate_s =
        static_cast<double>(t.positive_pred[s]) / static_cast<double>(t.total[s]);
    for (std::size_t s2 = s + 1; s2 < t.num_groups(); ++s2) {
      if (t.total[s2] == 0) continue;
      const double rate_s2 = static_cast<double>(t.positive_pred[s2]) /
                             static_cast<double>(t.total[s2]);
      best = std::max(best, std::abs(rate_s - rate_s2));
    }
  }
  return best;
}

double delta_eo(const std::vector<int>& predictions,
                const std::vector<int>& labels,
                const std::vector<int>& sensitive) {
  if (predictions.empty()) throw InputError("delta_eo: empty input");
  if (labels.size() != predictions.size()) {
    throw DimensionError("delta_eo: labels length differs");
  }
  check_binary(predictions, "predictions");
  check_binary(labels, "labels");
  const GroupOutcomes t = GroupOutcomes::tally(predictions, labels, sensitive);
  double best = 0.0;
  for (std::size_t s = 0; s < t.num_groups(); ++s) {
    if (t.actual_positive[s] == 0) continue;
    const double tpr_s = static_cast<double>(t.true_positive[s]) /
                         static_cast<double>(t.actual_positive[s]);
    for (std::size_t s2 = s + 1; s2 < t.num_groups(); ++s2) {
      if (t.actual_positive[s2] == 0) continue;
      const double tpr_s2 = static_cast<double>(t.true_positive[s2]) /
                            static_cast<double>(t.actual_positive[s2]);
      best = std::max(best, std::abs(tpr_s - tpr_s2));
    }
  }
  return best;
}

SoftDpResult soft_dp_penalty(const Eigen::VectorXd& probabilities,
                             const std::vector<int>& sensitive) {
  if (probabilities.size() == 0) throw InputError("soft_dp_penalty: empty input");
  if (static_cast<std::size_t>(probabilities.size()) != sensitive.size()) {
    throw DimensionError("soft_dp_penalty: probabilities and sensitive lengths differ");
  }
  const std::size_t groups = group_count(sensitive);
  std::vector<double> sum(groups, 0.0);
  std::vector<std::size_t> count(groups, 0);
  for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
    sum[sensitive[i]] += probabilities[i];
    count[sensitive[i]] += 1;
  }
  std::vector<double> mean(groups, 0.0);
  for (std::size_t g = 0; g < groups; ++g) {
    if (count[g] > 0) mean[g] = sum[g] / static_cast<double>(count[g]);
  }

  double best = 0.0;
  int hi = -1;
  int lo = -1;
  for (std::size_t s = 0; s < groups; ++s) {
    if (count[s] == 0) continue;
    for (std::size_t s2 = s + 1; s2 < groups; ++s2) {
      if (count[s2] == 0) continue;
      const double gap = std::abs(mean[s] - mean[s2]);
      if (gap > best) {
        best = gap;
        hi = mean[s] >= mean[s2] ? static_cast<int>(s) : static_cast<int>(s2);
        lo = mean[s] >= mean[s2] ? static_cast<int>(s2) : static_cast<int>(s);
      }
    }
  }

  SoftDpResult result;
  result.value = best;
  result.grad = Eigen::VectorXd::Zero(probabilities.size());
  if (hi >= 0 && best > 0.0) {
    const double up = 1.0 / static_cast<double>(count[hi]);
    const double down = -1.0 / static_cast<double>(count[lo]);
    for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
      if (sensitive[i] == hi) {
        result.grad[i] = up;
      } else if (sensitive[i] == lo) {
        result.grad[i] = down;
      }
    }
  }
  return result;
}

}  // namespace equifl::fairness
