#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace equifl::data {

enum class FeatureKind { kNumeric, kCategorical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
};

struct DatasetSchema {
  std::vector<FeatureSpec> features;
  std::string sensitive_column;
  std::vector<std::string> sensitive_values;  // declared set; order fixes group indices
  std::string label_column;
  std::string positive_label;
  bool include_sensitive_feature = false;  // append sensitive one-hot to features

  void validate() const;
  std::vector<std::string> declared_columns() const;
};

struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::size_t dropped_rows = 0;
};

// Parses the file, drops (and counts) rows with missing/unparseable values in
// declared columns or an undeclared sensitive value. Empty fields and "?" are
// treated as missing.
RawTable load_csv(const std::string& path, const DatasetSchema& schema);

struct Record {
  Eigen::VectorXd features;
  int sensitive = 0;
  int label = 0;
};

// Fitted transform: categorical value sets and numeric moments from the full
// table, so held-out rows are encoded identically.
struct EncoderSummary {
  struct FeatureEncoder {
    std::string column;
    FeatureKind kind = FeatureKind::kNumeric;
    std::size_t col_index = 0;
    double mean = 0.0;
    double stddev = 0.0;                   // population convention
    std::vector<std::string> categories;   // sorted, categorical only
  };
  std::vector<FeatureEncoder> features;
  std::size_t sensitive_col = 0;
  std::size_t label_col = 0;
  std::vector<std::string> sensitive_values;
  std::string positive_label;
  bool sensitive_as_feature = false;
  Eigen::Index feature_dim = 0;
  std::vector<std::string> warnings;
};

EncoderSummary fit_encoder(const RawTable& table, const DatasetSchema& schema);
std::vector<Record> apply_encoder(const EncoderSummary& encoder, const RawTable& table);

struct Dataset {
  std::vector<Record> records;
  EncoderSummary encoder;
  std::size_t dropped_rows = 0;
};

Dataset preprocess(const RawTable& table, const DatasetSchema& schema);

struct PartitionSpec {
  std::vector<double> client_alphas;  // one concentration per client
  std::uint64_t seed = 0;

  std::size_t num_clients() const { return client_alphas.size(); }
  void validate() const;
};

struct Partition {
  std::vector<std::vector<std::size_t>> clients;  // record indices per client
  std::vector<std::string> warnings;
};

// For each sensitive value, one Dirichlet draw over clients decides the
// fractions; records of that value are shuffled and handed out in contiguous
// blocks sized by largest-remainder rounding, so per-value counts are
// conserved exactly. Deterministic in spec.seed.
Partition dirichlet_partition(const std::vector<Record>& records,
                              const PartitionSpec& spec);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// Seeded shuffle, then contiguous 70:15:15 cuts at round(0.70n)/round(0.85n).
SplitIndices split(std::vector<std::size_t> items, std::uint64_t seed);

// Largest-remainder apportionment of n into |proportions| buckets.
std::vector<std::size_t> largest_remainder_counts(const std::vector<double>& proportions,
                                                  std::size_t n);

}  // namespace equifl::data
