#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "equifl/data.hpp"
#include "equifl/errors.hpp"
#include "equifl/rng.hpp"
#include "equifl/synth.hpp"

using namespace equifl::data;

namespace {

struct TempCsv {
  std::filesystem::path path;
  explicit TempCsv(const std::string& contents) {
    path = std::filesystem::temp_directory_path() /
           ("equifl_test_" + std::to_string(std::rand()) + ".csv");
    std::ofstream out(path);
    out << contents;
  }
  ~TempCsv() { std::filesystem::remove(path); }
};

DatasetSchema tiny_schema() {
  DatasetSchema schema;
  schema.features = {{"x", FeatureKind::kNumeric}, {"c", FeatureKind::kCategorical}};
  schema.sensitive_column = "s";
  schema.sensitive_values = {"a", "b"};
  schema.label_column = "y";
  schema.positive_label = "yes";
  return schema;
}

}  // namespace

TEST_CASE("load_csv keeps valid rows") {
  TempCsv file("x,c,s,y\n1,u,a,yes\n2,v,b,no\n3,u,a,yes\n");
  const RawTable t = load_csv(file.path.string(), tiny_schema());
  CHECK(t.rows.size() == 3);
  CHECK(t.dropped_rows == 0);
}

TEST_CASE("load_csv drops and counts rows with missing declared values") {
  TempCsv file("x,c,s,y\n1,u,a,yes\n2,v,b,\n3,u,a,yes\n");
  const RawTable t = load_csv(file.path.string(), tiny_schema());
  CHECK(t.rows.size() == 2);
  CHECK(t.dropped_rows == 1);
}

TEST_CASE("load_csv drops unparseable numerics and undeclared sensitive values") {
  TempCsv file("x,c,s,y\noops,u,a,yes\n2,v,q,no\n3,u,b,yes\n");
  const RawTable t = load_csv(file.path.string(), tiny_schema());
  CHECK(t.rows.size() == 1);
  CHECK(t.dropped_rows == 2);
}

TEST_CASE("load_csv rejects a header missing a declared column") {
  TempCsv file("x,c,y\n1,u,yes\n");
  CHECK_THROWS_AS(load_csv(file.path.string(), tiny_schema()), equifl::SchemaError);
}

TEST_CASE("schema validation rejects sensitive-as-feature overlap") {
  DatasetSchema schema = tiny_schema();
  schema.features.push_back({"s", FeatureKind::kCategorical});
  CHECK_THROWS_AS(schema.validate(), equifl::ConfigError);
}

TEST_CASE("preprocess one-hot encodes and z-scores from full-table statistics") {
  TempCsv file("x,c,s,y\n1,u,a,yes\n2,v,b,no\n3,u,a,yes\n");
  const DatasetSchema schema = tiny_schema();
  const RawTable t = load_csv(file.path.string(), schema);
  const Dataset d = preprocess(t, schema);
  REQUIRE(d.records.size() == 3);
  REQUIRE(d.encoder.feature_dim == 3);  // numeric + 2 categories

  // population z-scores of [1,2,3]
  CHECK(d.records[0].features[0] == doctest::Approx(-1.2247448).epsilon(1e-6));
  CHECK(d.records[1].features[0] == doctest::Approx(0.0));
  CHECK(d.records[2].features[0] == doctest::Approx(1.2247448).epsilon(1e-6));
  // categories sorted: u -> [1,0], v -> [0,1]
  CHECK(d.records[0].features[1] == 1.0);
  CHECK(d.records[0].features[2] == 0.0);
  CHECK(d.records[1].features[1] == 0.0);
  CHECK(d.records[1].features[2] == 1.0);
  // sensitive indices follow the declared order, labels compare to positive
  CHECK(d.records[0].sensitive == 0);
  CHECK(d.records[1].sensitive == 1);
  CHECK(d.records[0].label == 1);
  CHECK(d.records[1].label == 0);
}

TEST_CASE("encoder application is idempotent across calls") {
  TempCsv file("x,c,s,y\n1,u,a,yes\n2,v,b,no\n5,w,a,yes\n");
  const DatasetSchema schema = tiny_schema();
  const RawTable t = load_csv(file.path.string(), schema);
  const EncoderSummary enc = fit_encoder(t, schema);
  const std::vector<Record> first = apply_encoder(enc, t);
  const std::vector<Record> second = apply_encoder(enc, t);
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK((first[i].features.array() == second[i].features.array()).all());
  }
}

TEST_CASE("zero-variance numeric column becomes constant zero with a warning") {
  TempCsv file("x,c,s,y\n4,u,a,yes\n4,v,b,no\n4,u,a,no\n");
  const DatasetSchema schema = tiny_schema();
  const Dataset d = preprocess(load_csv(file.path.string(), schema), schema);
  for (const Record& r : d.records) CHECK(r.features[0] == 0.0);
  REQUIRE(d.encoder.warnings.size() == 1);
}

TEST_CASE("split honors the 70:15:15 rounding rule") {
  std::vector<std::size_t> items(100);
  for (std::size_t i = 0; i < items.size(); ++i) items[i] = i;
  const SplitIndices s = split(items, 9);
  CHECK(s.train.size() == 70);
  CHECK(s.validation.size() == 15);
  CHECK(s.test.size() == 15);

  std::vector<std::size_t> ten(10);
  for (std::size_t i = 0; i < ten.size(); ++i) ten[i] = i;
  const SplitIndices s10 = split(ten, 9);
  // cuts at round(7.0)=7 and round(8.5)=9
  CHECK(s10.train.size() == 7);
  CHECK(s10.validation.size() == 2);
  CHECK(s10.test.size() == 1);
}

TEST_CASE("split is deterministic, disjoint and exhaustive") {
  std::vector<std::size_t> items(37);
  for (std::size_t i = 0; i < items.size(); ++i) items[i] = i * 3;
  const SplitIndices a = split(items, 1234);
  const SplitIndices b = split(items, 1234);
  CHECK(a.train == b.train);
  CHECK(a.validation == b.validation);
  CHECK(a.test == b.test);

  std::vector<std::size_t> all;
  all.insert(all.end(), a.train.begin(), a.train.end());
  all.insert(all.end(), a.validation.begin(), a.validation.end());
  all.insert(all.end(), a.test.begin(), a.test.end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expected = items;
  std::sort(expected.begin(), expected.end());
  CHECK(all == expected);

  CHECK_THROWS_AS(split({1, 2}, 0), equifl::InputError);
}

TEST_CASE("largest remainder conserves the total") {
  const std::vector<std::size_t> counts =
      largest_remainder_counts({0.305, 0.305, 0.39}, 10);
  CHECK(counts[0] + counts[1] + counts[2] == 10);
  CHECK(counts[2] == 4);
}

namespace {

std::vector<Record> records_of_groups(const std::vector<int>& groups) {
  std::vector<Record> records;
  for (int g : groups) {
    Record r;
    r.features = Eigen::VectorXd::Zero(1);
    r.sensitive = g;
    r.label = 0;
    records.push_back(r);
  }
  return records;
}

}  // namespace

TEST_CASE("single-client partition takes everything") {
  const std::vector<Record> records = records_of_groups({0, 1, 0, 1, 1});
  const Partition p = dirichlet_partition(records, {{3.0}, 42});
  REQUIRE(p.clients.size() == 1);
  CHECK(p.clients[0].size() == records.size());
}

TEST_CASE("huge symmetric alphas split one value near-evenly") {
  std::vector<Record> records = records_of_groups(std::vector<int>(1000, 0));
  const Partition p = dirichlet_partition(records, {{1e6, 1e6}, 7});
  REQUIRE(p.clients.size() == 2);
  CHECK(p.clients[0].size() >= 498);
  CHECK(p.clients[0].size() <= 502);
  CHECK(p.clients[0].size() + p.clients[1].size() == 1000);
}

TEST_CASE("partition conserves records exactly, per value") {
  equifl::DetRng mix(4);
  std::vector<int> groups;
  for (int i = 0; i < 500; ++i) groups.push_back(static_cast<int>(mix.below(3)));
  const std::vector<Record> records = records_of_groups(groups);
  const PartitionSpec spec{{0.1, 0.2, 1.0, 10.0, 0.5}, 99};
  const Partition p = dirichlet_partition(records, spec);

  std::vector<std::size_t> seen;
  std::map<int, std::size_t> per_value;
  for (const auto& client : p.clients) {
    for (std::size_t idx : client) {
      seen.push_back(idx);
      per_value[records[idx].sensitive] += 1;
    }
  }
  std::sort(seen.begin(), seen.end());
  for (std::size_t i = 0; i < seen.size(); ++i) CHECK(seen[i] == i);
  CHECK(seen.size() == records.size());
  std::map<int, std::size_t> expected;
  for (int g : groups) expected[g] += 1;
  CHECK(per_value == expected);
}

TEST_CASE("partition is deterministic in the seed") {
  std::vector<int> groups;
  for (int i = 0; i < 200; ++i) groups.push_back(i % 2);
  const std::vector<Record> records = records_of_groups(groups);
  const PartitionSpec spec{{0.1, 0.2, 1.0}, 11};
  const Partition a = dirichlet_partition(records, spec);
  const Partition b = dirichlet_partition(records, spec);
  CHECK(a.clients == b.clients);
  const Partition c = dirichlet_partition(records, {{0.1, 0.2, 1.0}, 12});
  CHECK(a.clients != c.clients);
}

TEST_CASE("partition rejects bad inputs") {
  const std::vector<Record> records = records_of_groups({0, 1});
  CHECK_THROWS_AS(dirichlet_partition({}, {{1.0}, 0}), equifl::InputError);
  CHECK_THROWS_AS(dirichlet_partition(records, {{0.0, 1.0}, 0}), equifl::ConfigError);
  CHECK_THROWS_AS(dirichlet_partition(records, {{}, 0}), equifl::ConfigError);
}

TEST_CASE("skewed alphas produce visibly different group mixes on synthetic data") {
  TempCsv file(equifl::synth::income_csv(4000, 3));
  const DatasetSchema schema = equifl::synth::income_schema();
  const Dataset d = preprocess(load_csv(file.path.string(), schema), schema);
  const Partition p = dirichlet_partition(d.records, {{0.1, 0.2, 1.0, 10.0, 0.5}, 21});
  double lo = 1.0, hi = 0.0;
  for (const auto& client : p.clients) {
    if (client.size() < 20) continue;  // tiny draws carry no signal
    std::size_t male = 0;
    for (std::size_t idx : client) male += d.records[idx].sensitive == 0 ? 1 : 0;
    const double frac = static_cast<double>(male) / static_cast<double>(client.size());
    lo = std::min(lo, frac);
    hi = std::max(hi, frac);
  }
  CHECK(hi - lo >= 0.2);
}
