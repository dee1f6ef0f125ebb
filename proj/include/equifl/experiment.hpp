#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "equifl/config.hpp"
#include "equifl/data.hpp"
#include "equifl/fedsim.hpp"

namespace equifl {

// Everything derived from (config, master seed) before training starts.
struct PreparedData {
  data::Dataset dataset;
  std::uint64_t partition_seed = 0;
  data::Partition partition;
  std::vector<data::SplitIndices> splits;  // indexed by client id; empty if excluded
  std::vector<bool> active;                // clients with >= 3 records
  std::vector<fed::ClientData> clients;    // tensorized active clients
  std::vector<std::string> warnings;
};

PreparedData prepare_data(const ExperimentConfig& cfg, std::uint64_t master_seed);

struct RunResult {
  std::uint64_t seed = 0;
  std::uint64_t partition_seed = 0;
  std::uint64_t model_seed = 0;
  PreparedData prepared;
  fed::ExperimentResult outcome;

  const report::MetricsReport& final_report() const { return outcome.history.back(); }
};

// One full experiment for one master seed: load, partition, split, train.
RunResult run_single(const ExperimentConfig& cfg, std::uint64_t master_seed);

struct SweepRow {
  double value = 0.0;
  std::size_t seed_count = 0;
  double accuracy_median = 0.0, accuracy_mean = 0.0, accuracy_std = 0.0;
  double delta_dp_median = 0.0, delta_dp_mean = 0.0, delta_dp_std = 0.0;
  double delta_eo_median = 0.0, delta_eo_mean = 0.0, delta_eo_std = 0.0;
};

// parameter is "mu" or "num_clients". One run per value per seed; the row
// carries the median and mean +/- std of the final local averages.
std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::string& parameter,
                            const std::vector<double>& values);

std::string sweep_to_csv(const std::string& parameter, const std::vector<SweepRow>& rows,
                         const std::string& config_echo);

double median(std::vector<double> values);

}  // namespace equifl
