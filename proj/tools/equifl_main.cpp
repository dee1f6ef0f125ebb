#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "equifl/checkpoint.hpp"
#include "equifl/config.hpp"
#include "equifl/errors.hpp"
#include "equifl/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> mode;
  std::optional<double> mu;
  std::optional<int> clients;
  std::optional<int> rounds;
  std::optional<int> evaluate_every;
};

equifl::ExperimentConfig load_config(const std::string& path, const Overrides& ov) {
  equifl::ExperimentConfig cfg = equifl::ExperimentConfig::load(path);
  if (ov.seed) cfg.seeds = {*ov.seed};
  if (ov.out_dir) cfg.output_dir = *ov.out_dir;
  if (ov.mode) cfg.federation.mode = equifl::fed::mode_from_string(*ov.mode);
  if (ov.mu) cfg.federation.mu = *ov.mu;
  if (ov.clients) {
    if (*ov.clients < 1) throw equifl::ConfigError("--clients must be >= 1");
    cfg.partition.alphas = equifl::cycle_alphas(cfg.partition.alphas,
                                                static_cast<std::size_t>(*ov.clients));
  }
  if (ov.rounds) cfg.federation.rounds = *ov.rounds;
  if (ov.evaluate_every) cfg.federation.evaluate_every = *ov.evaluate_every;
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw equifl::IoError("cannot write '" + path.string() + "'");
  out << text;
}

std::string format_mu(double mu) {
  std::ostringstream s;
  s << mu;
  return s.str();
}

json partition_manifest(const equifl::ExperimentConfig& cfg,
                        const equifl::PreparedData& prep) {
  json clients = json::array();
  for (std::size_t c = 0; c < prep.partition.clients.size(); ++c) {
    json entry;
    entry["id"] = c;
    entry["active"] = static_cast<bool>(prep.active[c]);
    entry["num_records"] = prep.partition.clients[c].size();
    entry["train"] = prep.splits[c].train;
    entry["validation"] = prep.splits[c].validation;
    entry["test"] = prep.splits[c].test;
    std::vector<std::size_t> counts(cfg.schema.sensitive_values.size(), 0);
    for (std::size_t idx : prep.partition.clients[c]) {
      counts[prep.dataset.records[idx].sensitive] += 1;
    }
    json proportions = json::array();
    for (std::size_t g = 0; g < counts.size(); ++g) {
      const double total = static_cast<double>(prep.partition.clients[c].size());
      proportions.push_back(total > 0 ? static_cast<double>(counts[g]) / total : 0.0);
    }
    entry["sensitive_proportions"] = proportions;
    clients.push_back(entry);
  }
  json manifest;
  manifest["config"] = cfg.to_json();
  manifest["partition_seed"] = prep.partition_seed;
  manifest["num_records"] = prep.dataset.records.size();
  manifest["dropped_rows"] = prep.dataset.dropped_rows;
  manifest["warnings"] = prep.warnings;
  manifest["clients"] = clients;
  return manifest;
}

void print_proportions(const equifl::ExperimentConfig& cfg,
                       const equifl::PreparedData& prep) {
  std::cout << "client  records";
  for (const std::string& v : cfg.schema.sensitive_values) std::cout << "  " << v;
  std::cout << '\n';
  for (std::size_t c = 0; c < prep.partition.clients.size(); ++c) {
    std::vector<std::size_t> counts(cfg.schema.sensitive_values.size(), 0);
    for (std::size_t idx : prep.partition.clients[c]) {
      counts[prep.dataset.records[idx].sensitive] += 1;
    }
    const double total = static_cast<double>(prep.partition.clients[c].size());
    std::cout << std::setw(6) << c << "  " << std::setw(7)
              << prep.partition.clients[c].size();
    for (std::size_t g = 0; g < counts.size(); ++g) {
      std::cout << "  " << std::fixed << std::setprecision(3)
                << (total > 0 ? static_cast<double>(counts[g]) / total : 0.0);
    }
    std::cout << '\n';
  }
  std::cout.unsetf(std::ios::fixed);
}

int cmd_partition(const equifl::ExperimentConfig& cfg) {
  const std::uint64_t seed_source = cfg.partition.seed
                                        ? *cfg.partition.seed
                                        : equifl::derive_seed(cfg.seeds.front(), "partition");
  equifl::ExperimentConfig pinned = cfg;
  pinned.partition.seed = seed_source;
  const equifl::PreparedData prep = equifl::prepare_data(pinned, cfg.seeds.front());

  fs::create_directories(cfg.output_dir);
  std::ostringstream name;
  name << "partition-seed" << prep.partition_seed << ".json";
  const fs::path out_path = fs::path(cfg.output_dir) / name.str();
  write_text(out_path, partition_manifest(pinned, prep).dump(2) + "\n");

  std::cout << "partition seed " << prep.partition_seed << ", "
            << prep.dataset.records.size() << " records ("
            << prep.dataset.dropped_rows << " dropped)\n";
  print_proportions(cfg, prep);
  for (const std::string& w : prep.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "wrote " << out_path.string() << '\n';
  return 0;
}

void write_run_outputs(const equifl::ExperimentConfig& cfg, const equifl::RunResult& run,
                       const fs::path& run_dir) {
  fs::create_directories(run_dir / "checkpoints");

  equifl::ExperimentConfig resolved = cfg;
  resolved.seeds = {run.seed};
  resolved.partition.seed = run.partition_seed;
  resolved.model.seed = run.model_seed;
  const json config_echo = resolved.to_json();

  json report;
  report["config"] = config_echo;
  report["seed"] = run.seed;
  report["partition_seed"] = run.partition_seed;
  report["model_seed"] = run.model_seed;
  report["warnings"] = run.prepared.warnings;
  json history = json::array();
  for (const equifl::report::MetricsReport& r : run.outcome.history) {
    history.push_back(equifl::report::report_to_json(r));
  }
  report["history"] = history;
  report["final"] = equifl::report::report_to_json(run.final_report());
  write_text(run_dir / "report.json", report.dump(2) + "\n");

  std::ostringstream csv;
  csv << "# config: " << config_echo.dump() << '\n';
  csv << "# seed: " << run.seed << '\n';
  csv << equifl::report::history_to_csv(run.outcome.history);
  write_text(run_dir / "report.csv", csv.str());

  write_text(run_dir / "partition.json",
             partition_manifest(resolved, run.prepared).dump(2) + "\n");

  json provenance;
  provenance["config"] = config_echo;
  provenance["seed"] = run.seed;
  equifl::checkpoint::save_params(run.outcome.global,
                                  (run_dir / "checkpoints" / "global").string(),
                                  provenance);
  for (const equifl::fed::ClientState& client : run.outcome.clients) {
    std::ostringstream name;
    name << "client_" << std::setw(3) << std::setfill('0') << client.id;
    equifl::checkpoint::save_params(
        client.params, (run_dir / "checkpoints" / name.str()).string(), provenance);
  }
}

int cmd_train(const equifl::ExperimentConfig& cfg) {
  for (std::uint64_t seed : cfg.seeds) {
    const equifl::RunResult run = equifl::run_single(cfg, seed);
    std::ostringstream dir_name;
    dir_name << equifl::fed::to_string(cfg.federation.mode) << "-mu"
             << format_mu(cfg.federation.mu) << "-seed" << seed;
    const fs::path run_dir = fs::path(cfg.output_dir) / dir_name.str();
    write_run_outputs(cfg, run, run_dir);

    const equifl::report::MetricsReport& last = run.final_report();
    std::cout << dir_name.str() << ": local acc " << std::fixed << std::setprecision(4)
              << last.local_accuracy << ", local dp " << last.local_delta_dp
              << ", local eo " << last.local_delta_eo << ", global acc "
              << last.global.accuracy << ", global dp " << last.global.delta_dp << '\n';
    std::cout.unsetf(std::ios::fixed);
    for (const std::string& w : run.prepared.warnings) std::cerr << "warning: " << w << '\n';
  }
  std::cout << "outputs under " << cfg.output_dir << '\n';
  return 0;
}

int cmd_evaluate(const equifl::ExperimentConfig& cfg, const std::string& run_dir_arg) {
  const fs::path run_dir(run_dir_arg);
  std::ifstream manifest_in(run_dir / "partition.json");
  if (!manifest_in) {
    throw equifl::InputError("no partition.json under '" + run_dir_arg + "'");
  }
  json manifest;
  manifest_in >> manifest;

  // Replay the exact row assignment recorded by the training run.
  const equifl::data::RawTable table =
      equifl::data::load_csv(cfg.dataset_path, cfg.schema);
  const equifl::data::Dataset dataset = equifl::data::preprocess(table, cfg.schema);

  std::vector<equifl::fed::ClientData> clients;
  std::vector<equifl::fed::ClientState> states;
  for (const json& entry : manifest.at("clients")) {
    if (!entry.at("active").get<bool>()) continue;
    equifl::data::SplitIndices splits;
    splits.train = entry.at("train").get<std::vector<std::size_t>>();
    splits.validation = entry.at("validation").get<std::vector<std::size_t>>();
    splits.test = entry.at("test").get<std::vector<std::size_t>>();
    const int id = entry.at("id").get<int>();
    clients.push_back(equifl::fed::make_client_data(id, dataset.records, splits));
    std::ostringstream name;
    name << "client_" << std::setw(3) << std::setfill('0') << id;
    equifl::fed::ClientState state;
    state.id = id;
    state.params = equifl::checkpoint::load_params(
        (run_dir / "checkpoints" / name.str()).string());
    states.push_back(std::move(state));
  }
  const equifl::nn::ModelParams global =
      equifl::checkpoint::load_params((run_dir / "checkpoints" / "global").string());

  const equifl::report::MetricsReport result = equifl::fed::compile_report(
      -1, cfg.federation, states, clients, global);

  json out;
  out["config"] = cfg.to_json();
  out["run_dir"] = run_dir_arg;
  out["metrics"] = equifl::report::report_to_json(result);
  write_text(run_dir / "evaluation.json", out.dump(2) + "\n");
  std::cout << out["metrics"].dump(2) << '\n';
  return 0;
}

int cmd_sweep(const equifl::ExperimentConfig& cfg, const std::string& parameter,
              const std::string& values_csv) {
  std::vector<double> values;
  std::stringstream ss(values_csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw equifl::ConfigError("sweep value '" + item + "' is not a number");
    }
  }
  std::cerr << "sweeping " << parameter << " over " << values.size() << " values x "
            << cfg.seeds.size() << " seeds\n";
  const std::vector<equifl::SweepRow> rows = equifl::sweep(cfg, parameter, values);

  fs::create_directories(cfg.output_dir);
  const fs::path out_path = fs::path(cfg.output_dir) / ("sweep-" + parameter + ".csv");
  write_text(out_path, equifl::sweep_to_csv(parameter, rows, cfg.to_json().dump()));
  for (const equifl::SweepRow& r : rows) {
    std::cout << parameter << "=" << r.value << ": acc " << std::fixed
              << std::setprecision(4) << r.accuracy_median << " (median), dp "
              << r.delta_dp_median << ", eo " << r.delta_eo_median << '\n';
    std::cout.unsetf(std::ios::fixed);
  }
  std::cout << "wrote " << out_path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-aware federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;
  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--seed", ov.seed, "replace the config's seed list with one seed");
  app.add_option("--out-dir", ov.out_dir, "output directory override");
  app.add_option("--mode", ov.mode, "equifl or fedavg")
      ->check(CLI::IsMember({"equifl", "fedavg"}));
  app.add_option("--mu", ov.mu, "fairness penalty weight override");
  app.add_option("--clients", ov.clients, "client count override (alphas cycled)");
  app.add_option("--rounds", ov.rounds, "communication rounds override");
  app.add_option("--evaluate-every", ov.evaluate_every,
                 "evaluation interval override (0 = final only)");

  CLI::App* partition = app.add_subcommand("partition", "write a partition manifest");
  CLI::App* train = app.add_subcommand("train", "run training for every seed");
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "re-evaluate a finished run from its checkpoints");
  std::string run_dir;
  evaluate->add_option("--run-dir", run_dir, "training run directory")->required();
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "sweep mu or num_clients");
  std::string sweep_parameter;
  std::string sweep_values;
  sweep_cmd->add_option("parameter", sweep_parameter, "mu or num_clients")->required();
  sweep_cmd->add_option("values", sweep_values, "comma-separated values")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (sweep_cmd->parsed() && sweep_parameter != "mu" &&
        sweep_parameter != "num_clients") {
      throw equifl::ConfigError("sweep parameter must be 'mu' or 'num_clients'");
    }
    const equifl::ExperimentConfig cfg = load_config(config_path, ov);
    if (partition->parsed()) return cmd_partition(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (evaluate->parsed()) return cmd_evaluate(cfg, run_dir);
    if (sweep_cmd->parsed()) return cmd_sweep(cfg, sweep_parameter, sweep_values);
    return 1;
  } catch (const equifl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
