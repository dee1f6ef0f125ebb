#include "equifl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "equifl/errors.hpp"
#include "equifl/rng.hpp"

namespace equifl::data {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && (s[begin] == ' ' || s[begin] == '\t' || s[begin] == '\r')) ++begin;
  while (end > begin && (s[end - 1] == ' ' || s[end - 1] == '\t' || s[end - 1] == '\r')) --end;
  return s.substr(begin, end - begin);
}

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

bool is_missing(const std::string& value) { return value.empty() || value == "?"; }

bool parse_double(const std::string& text, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(text, &used);
    return used == text.size();
  } catch (const std::exception&) {
    return false;
  }
}

std::size_t column_index(const std::vector<std::string>& columns, const std::string& name) {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) {
    throw SchemaError("column '" + name + "' not found in CSV header");
  }
  return static_cast<std::size_t>(it - columns.begin());
}

}  // namespace

void DatasetSchema::validate() const {
  if (features.empty()) throw ConfigError("schema declares no feature columns");
  if (sensitive_column.empty()) throw ConfigError("schema lacks a sensitive column");
  if (label_column.empty()) throw ConfigError("schema lacks a label column");
  if (sensitive_values.empty()) throw ConfigError("schema declares no sensitive values");
  std::set<std::string> seen;
  for (const FeatureSpec& f : features) {
    if (f.name.empty()) throw ConfigError("schema has an unnamed feature");
    if (!seen.insert(f.name).second) {
      throw ConfigError("duplicate feature column '" + f.name + "'");
    }
    if (f.name == sensitive_column) {
      throw ConfigError("sensitive column '" + f.name + "' cannot also be a feature");
    }
    if (f.name == label_column) {
      throw ConfigError("label column '" + f.name + "' cannot also be a feature");
    }
  }
  if (sensitive_column == label_column) {
    throw ConfigError("sensitive and label columns must differ");
  }
  std::set<std::string> values(sensitive_values.begin(), sensitive_values.end());
  if (values.size() != sensitive_values.size()) {
    throw ConfigError("duplicate declared sensitive values");
  }
}

std::vector<std::string> DatasetSchema::declared_columns() const {
  std::vector<std::string> out;
  out.reserve(features.size() + 2);
  for (const FeatureSpec& f : features) out.push_back(f.name);
  out.push_back(sensitive_column);
  out.push_back(label_column);
  return out;
}

RawTable load_csv(const std::string& path, const DatasetSchema& schema) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw SchemaError("'" + path + "' is empty");
  RawTable table;
  table.columns = parse_csv_line(line);

  std::unordered_map<std::string, std::size_t> col_of;
  for (std::size_t i = 0; i < table.columns.size(); ++i) col_of[table.columns[i]] = i;
  std::vector<std::size_t> declared;
  for (const std::string& name : schema.declared_columns()) {
    declared.push_back(column_index(table.columns, name));
  }
  std::vector<std::size_t> numeric_cols;
  for (const FeatureSpec& f : schema.features) {
    if (f.kind == FeatureKind::kNumeric) numeric_cols.push_back(col_of.at(f.name));
  }
  const std::size_t sensitive_col = col_of.at(schema.sensitive_column);
  const std::set<std::string> sensitive_values(schema.sensitive_values.begin(),
                                               schema.sensitive_values.end());

  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> row = parse_csv_line(line);
    bool keep = row.size() == table.columns.size();
    if (keep) {
      for (std::size_t c : declared) {
        if (is_missing(row[c])) {
          keep = false;
          break;
        }
      }
    }
    if (keep) {
      double unused;
      for (std::size_t c : numeric_cols) {
        if (!parse_double(row[c], unused)) {
          keep = false;
          break;
        }
      }
    }
    if (keep && sensitive_values.count(row[sensitive_col]) == 0) keep = false;
    if (keep) {
      table.rows.push_back(std::move(row));
    } else {
      table.dropped_rows += 1;
    }
  }
  return table;
}

EncoderSummary fit_encoder(const RawTable& table, const DatasetSchema& schema) {
  schema.validate();
  if (table.rows.empty()) throw InputError("cannot fit an encoder on an empty table");

  EncoderSummary enc;
  enc.sensitive_col = column_index(table.columns, schema.sensitive_column);
  enc.label_col = column_index(table.columns, schema.label_column);
  enc.sensitive_values = schema.sensitive_values;
  enc.positive_label = schema.positive_label;
  enc.sensitive_as_feature = schema.include_sensitive_feature;

  const double n = static_cast<double>(table.rows.size());
  Eigen::Index dim = 0;
  for (const FeatureSpec& f : schema.features) {
    EncoderSummary::FeatureEncoder fe;
    fe.column = f.name;
    fe.kind = f.kind;
    fe.col_index = column_index(table.columns, f.name);
    if (f.kind == FeatureKind::kNumeric) {
      double sum = 0.0;
      for (const auto& row : table.rows) sum += std::stod(row[fe.col_index]);
      fe.mean = sum / n;
      double sq = 0.0;
      for (const auto& row : table.rows) {
        const double d = std::stod(row[fe.col_index]) - fe.mean;
        sq += d * d;
      }
      fe.stddev = std::sqrt(sq / n);
      if (fe.stddev == 0.0) {
        enc.warnings.push_back("numeric column '" + f.name +
                               "' has zero variance; encoded as constant 0");
      }
      dim += 1;
    } else {
      std::set<std::string> values;
      for (const auto& row : table.rows) values.insert(row[fe.col_index]);
      fe.categories.assign(values.begin(), values.end());
      dim += static_cast<Eigen::Index>(fe.categories.size());
    }
    enc.features.push_back(std::move(fe));
  }
  if (enc.sensitive_as_feature) {
    dim += static_cast<Eigen::Index>(enc.sensitive_values.size());
  }
  enc.feature_dim = dim;
  return enc;
}

std::vector<Record> apply_encoder(const EncoderSummary& enc, const RawTable& table) {
  std::vector<Record> records;
  records.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Record rec;
    rec.features = Eigen::VectorXd::Zero(enc.feature_dim);
    Eigen::Index at = 0;
    for (const auto& fe : enc.features) {
      if (fe.kind == FeatureKind::kNumeric) {
        const double v = std::stod(row[fe.col_index]);
        rec.features[at++] = fe.stddev > 0.0 ? (v - fe.mean) / fe.stddev : 0.0;
      } else {
        const auto it =
            std::find(fe.categories.begin(), fe.categories.end(), row[fe.col_index]);
        if (it != fe.categories.end()) {
          rec.features[at + (it - fe.categories.begin())] = 1.0;
        }
        at += static_cast<Eigen::Index>(fe.categories.size());
      }
    }
    const auto sv = std::find(enc.sensitive_values.begin(), enc.sensitive_values.end(),
                              row[enc.sensitive_col]);
    if (sv == enc.sensitive_values.end()) {
      throw InputError("sensitive value '" + row[enc.sensitive_col] +
                       "' is not in the declared set");
    }
    rec.sensitive = static_cast<int>(sv - enc.sensitive_values.begin());
    if (enc.sensitive_as_feature) {
      rec.features[at + rec.sensitive] = 1.0;
      at += static_cast<Eigen::Index>(enc.sensitive_values.size());
    }
    rec.label = row[enc.label_col] == enc.positive_label ? 1 : 0;
    records.push_back(std::move(rec));
  }
  return records;
}

Dataset preprocess(const RawTable& table, const DatasetSchema& schema) {
  Dataset out;
  out.encoder = fit_encoder(table, schema);
  out.records = apply_encoder(out.encoder, table);
  out.dropped_rows = table.dropped_rows;
  return out;
}

void PartitionSpec::validate() const {
  if (client_alphas.empty()) throw ConfigError("partition needs at least one client");
  for (double a : client_alphas) {
    if (!(a > 0.0)) throw ConfigError("partition alphas must be positive");
  }
}

std::vector<std::size_t> largest_remainder_counts(const std::vector<double>& proportions,
                                                  std::size_t n) {
  std::vector<std::size_t> counts(proportions.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;  // (fraction, index)
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < proportions.size(); ++i) {
    const double target = proportions[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(target));
    assigned += counts[i];
    remainders.push_back({target - std::floor(target), i});
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::size_t leftover = n - assigned;
  for (std::size_t k = 0; k < leftover; ++k) {
    counts[remainders[k % remainders.size()].second] += 1;
  }
  return counts;
}

Partition dirichlet_partition(const std::vector<Record>& records,
                              const PartitionSpec& spec) {
  spec.validate();
  if (records.empty()) throw InputError("cannot partition an empty record set");

  int max_group = 0;
  for (const Record& r : records) max_group = std::max(max_group, r.sensitive);
  const std::size_t groups = static_cast<std::size_t>(max_group + 1);
  std::vector<std::vector<std::size_t>> by_value(groups);
  for (std::size_t i = 0; i < records.size(); ++i) {
    by_value[records[i].sensitive].push_back(i);
  }

  Partition out;
  out.clients.assign(spec.num_clients(), {});
  for (std::size_t v = 0; v < groups; ++v) {
    std::vector<std::size_t>& members = by_value[v];
    if (members.empty()) continue;
    if (members.size() < spec.num_clients()) {
      std::ostringstream msg;
      msg << "sensitive value " << v << " has only " << members.size()
          << " records for " << spec.num_clients() << " clients; allocating best effort";
      out.warnings.push_back(msg.str());
    }
    DetRng rng(derive_seed(spec.seed, "partition-value", v));
    const std::vector<double> fractions = rng.dirichlet(spec.client_alphas);
    rng.shuffle(members);
    const std::vector<std::size_t> counts =
        largest_remainder_counts(fractions, members.size());
    std::size_t cursor = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      for (std::size_t k = 0; k < counts[c]; ++k) {
        out.clients[c].push_back(members[cursor++]);
      }
    }
  }
  return out;
}

SplitIndices split(std::vector<std::size_t> items, std::uint64_t seed) {
  if (items.size() < 3) throw InputError("split needs at least 3 records");
  DetRng rng(seed);
  rng.shuffle(items);
  const std::size_t n = items.size();
  auto cut = [n](double ratio) {
    const long long c = std::llround(ratio * static_cast<double>(n));
    return static_cast<std::size_t>(std::clamp<long long>(c, 0, static_cast<long long>(n)));
  };
  std::size_t c1 = cut(0.70);
  std::size_t c2 = std::max(cut(0.85), c1);
  SplitIndices out;
  out.train.assign(items.begin(), items.begin() + c1);
  out.validation.assign(items.begin() + c1, items.begin() + c2);
  out.test.assign(items.begin() + c2, items.end());
  return out;
}

}  // namespace equifl::data
