#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "equifl/nn.hpp"

namespace equifl::report {

struct ClientMetrics {
  int client_id = 0;
  std::size_t test_size = 0;
  double accuracy = 0.0;
  double delta_dp = 0.0;
  double delta_eo = 0.0;
  bool present = true;  // false when the client's test split is empty
};

struct DistStats {
  double mean = 0.0;
  double stddev = 0.0;  // population convention (divide by N)
  double min = 0.0;
  double max = 0.0;
};

struct GlobalMetrics {
  std::size_t pool_size = 0;
  double accuracy = 0.0;
  double delta_dp = 0.0;
  double delta_eo = 0.0;
};

struct MetricsReport {
  int round = 0;
  std::string mode;
  double mu = 0.0;
  std::vector<ClientMetrics> clients;
  // Unweighted means over present clients.
  double local_accuracy = 0.0;
  double local_delta_dp = 0.0;
  double local_delta_eo = 0.0;
  GlobalMetrics global;            // aggregated model on the pooled test set
  GlobalMetrics global_selective;  // per-client selectively initialized variant
  DistStats accuracy_stats;        // across present clients
  DistStats delta_dp_stats;
  std::vector<std::string> warnings;
};

// Hard decisions at the 0.5 threshold (p >= 0.5 maps to 1).
std::vector<int> hard_decisions(const nn::ModelParams& model,
                                const Eigen::MatrixXd& features);

ClientMetrics evaluate_client(int id, const nn::ModelParams& model,
                              const nn::Batch& test);

struct LocalEval {
  std::vector<ClientMetrics> clients;
  double accuracy = 0.0;
  double delta_dp = 0.0;
  double delta_eo = 0.0;
  std::vector<std::string> warnings;
};

// Each client's own model on its own test split; averages are unweighted over
// present clients. Clients with empty test splits are reported absent.
LocalEval evaluate_local(const std::vector<int>& ids,
                         const std::vector<const nn::ModelParams*>& models,
                         const std::vector<const nn::Batch*>& tests);

// One model over the concatenation of all test splits.
GlobalMetrics evaluate_global(const nn::ModelParams& global,
                              const std::vector<const nn::Batch*>& tests);

// Metrics over already-pooled hard decisions.
GlobalMetrics pooled_metrics(const std::vector<int>& predictions,
                             const std::vector<int>& labels,
                             const std::vector<int>& sensitive);

DistStats performance_fairness_stats(const std::vector<double>& values);

nlohmann::json report_to_json(const MetricsReport& report);

// One CSV row per client per round plus local/global summary rows.
std::string history_to_csv(const std::vector<MetricsReport>& history);

}  // namespace equifl::report
