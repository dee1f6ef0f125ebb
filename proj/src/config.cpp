#include "equifl/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "equifl/errors.hpp"

namespace equifl {

namespace {

data::FeatureKind kind_from_string(const std::string& text) {
  if (text == "numeric") return data::FeatureKind::kNumeric;
  if (text == "categorical") return data::FeatureKind::kCategorical;
  throw ConfigError("unknown feature kind '" + text + "'");
}

std::string kind_to_string(data::FeatureKind kind) {
  return kind == data::FeatureKind::kNumeric ? "numeric" : "categorical";
}

void check_header_covers_schema(const std::string& path,
                                const data::DatasetSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ConfigError("dataset '" + path + "' cannot be opened");
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("dataset '" + path + "' is empty");
  // Reuse the loader's header check by parsing just the header row.
  std::vector<std::string> columns;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      columns.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  columns.push_back(cur);
  for (const std::string& name : schema.declared_columns()) {
    if (std::find(columns.begin(), columns.end(), name) == columns.end()) {
      throw SchemaError("column '" + name + "' not found in header of '" + path + "'");
    }
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dataset_path.empty()) throw ConfigError("dataset path is required");
  if (!std::filesystem::exists(dataset_path)) {
    throw ConfigError("dataset '" + dataset_path + "' does not exist");
  }
  schema.validate();
  check_header_covers_schema(dataset_path, schema);
  data::PartitionSpec{partition.alphas, 0}.validate();
  if (model.hidden_dims.empty()) throw ConfigError("model needs at least one hidden layer");
  for (int d : model.hidden_dims) {
    if (d <= 0) throw ConfigError("hidden dims must be positive");
  }
  federation.validate();
  if (seeds.empty()) throw ConfigError("seeds must be nonempty");
  if (output_dir.empty()) throw ConfigError("output_dir is required");
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    const nlohmann::json& ds = j.at("dataset");
    cfg.dataset_path = ds.at("path").get<std::string>();
    for (const nlohmann::json& f : ds.value("numeric_features", nlohmann::json::array())) {
      cfg.schema.features.push_back({f.get<std::string>(), data::FeatureKind::kNumeric});
    }
    for (const nlohmann::json& f :
         ds.value("categorical_features", nlohmann::json::array())) {
      cfg.schema.features.push_back(
          {f.get<std::string>(), data::FeatureKind::kCategorical});
    }
    if (ds.contains("features")) {  // explicit ordered form
      cfg.schema.features.clear();
      for (const nlohmann::json& f : ds.at("features")) {
        cfg.schema.features.push_back({f.at("name").get<std::string>(),
                                       kind_from_string(f.at("kind").get<std::string>())});
      }
    }
    cfg.schema.sensitive_column = ds.at("sensitive_column").get<std::string>();
    cfg.schema.sensitive_values =
        ds.at("sensitive_values").get<std::vector<std::string>>();
    cfg.schema.label_column = ds.at("label_column").get<std::string>();
    cfg.schema.positive_label = ds.at("positive_label").get<std::string>();
    cfg.schema.include_sensitive_feature = ds.value("include_sensitive_feature", false);

    if (j.contains("partition")) {
      const nlohmann::json& p = j.at("partition");
      cfg.partition.alphas = p.value("alphas", cfg.partition.alphas);
      if (p.contains("seed") && !p.at("seed").is_null()) {
        cfg.partition.seed = p.at("seed").get<std::uint64_t>();
      }
    }
    if (j.contains("model")) {
      const nlohmann::json& m = j.at("model");
      cfg.model.hidden_dims = m.value("hidden_dims", cfg.model.hidden_dims);
      if (m.contains("seed") && !m.at("seed").is_null()) {
        cfg.model.seed = m.at("seed").get<std::uint64_t>();
      }
    }
    if (j.contains("federation")) {
      const nlohmann::json& f = j.at("federation");
      fed::FedConfig& fc = cfg.federation;
      fc.mode = fed::mode_from_string(f.value("mode", std::string("equifl")));
      fc.rounds = f.value("rounds", fc.rounds);
      fc.local_epochs = f.value("local_epochs", fc.local_epochs);
      fc.batch_size = f.value("batch_size", fc.batch_size);
      fc.mu = f.value("mu", fc.mu);
      fc.participation_fraction =
          f.value("participation_fraction", fc.participation_fraction);
      fc.optimizer.learning_rate = f.value("learning_rate", fc.optimizer.learning_rate);
      fc.optimizer.beta1 = f.value("beta1", fc.optimizer.beta1);
      fc.optimizer.beta2 = f.value("beta2", fc.optimizer.beta2);
      fc.optimizer.epsilon = f.value("epsilon", fc.optimizer.epsilon);
      fc.reset_optimizer_each_round =
          f.value("reset_optimizer_each_round", fc.reset_optimizer_each_round);
      fc.evaluate_every = f.value("evaluate_every", fc.evaluate_every);
    }
    cfg.seeds = j.value("seeds", cfg.seeds);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json features = nlohmann::json::array();
  for (const data::FeatureSpec& f : schema.features) {
    features.push_back({{"name", f.name}, {"kind", kind_to_string(f.kind)}});
  }
  nlohmann::json j;
  j["dataset"] = {{"path", dataset_path},
                  {"features", features},
                  {"sensitive_column", schema.sensitive_column},
                  {"sensitive_values", schema.sensitive_values},
                  {"label_column", schema.label_column},
                  {"positive_label", schema.positive_label},
                  {"include_sensitive_feature", schema.include_sensitive_feature}};
  j["partition"] = {{"alphas", partition.alphas}};
  if (partition.seed) j["partition"]["seed"] = *partition.seed;
  j["model"] = {{"hidden_dims", model.hidden_dims}};
  if (model.seed) j["model"]["seed"] = *model.seed;
  j["federation"] = {{"mode", fed::to_string(federation.mode)},
                     {"rounds", federation.rounds},
                     {"local_epochs", federation.local_epochs},
                     {"batch_size", federation.batch_size},
                     {"mu", federation.mu},
                     {"participation_fraction", federation.participation_fraction},
                     {"learning_rate", federation.optimizer.learning_rate},
                     {"beta1", federation.optimizer.beta1},
                     {"beta2", federation.optimizer.beta2},
                     {"epsilon", federation.optimizer.epsilon},
                     {"reset_optimizer_each_round", federation.reset_optimizer_each_round},
                     {"evaluate_every", federation.evaluate_every}};
  j["seeds"] = seeds;
  j["output_dir"] = output_dir;
  return j;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

std::vector<double> cycle_alphas(const std::vector<double>& base, std::size_t n) {
  if (base.empty()) throw ConfigError("cannot cycle an empty alpha list");
  if (n == 0) throw ConfigError("client count must be positive");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = base[i % base.size()];
  return out;
}

}  // namespace equifl
