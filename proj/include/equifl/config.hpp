#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "equifl/data.hpp"
#include "equifl/fedsim.hpp"

namespace equifl {

struct ModelConfig {
  std::vector<int> hidden_dims{64, 64};
  std::optional<std::uint64_t> seed;  // derived from the run seed when absent
};

struct PartitionConfig {
  std::vector<double> alphas{0.1, 0.2, 1.0, 10.0, 0.5};
  std::optional<std::uint64_t> seed;  // derived from the run seed when absent
};

struct ExperimentConfig {
  std::string dataset_path;
  data::DatasetSchema schema;
  PartitionConfig partition;
  ModelConfig model;
  fed::FedConfig federation;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string output_dir = "out";

  std::size_t num_clients() const { return partition.alphas.size(); }

  // Total up-front validation: value ranges, schema consistency, dataset path
  // existence and header coverage. A config that passes cannot fail on
  // schema/shape grounds mid-run.
  void validate() const;

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static ExperimentConfig load(const std::string& path);
};

// Cycles `base` to exactly n entries (used by --clients and client sweeps).
std::vector<double> cycle_alphas(const std::vector<double>& base, std::size_t n);

}  // namespace equifl
