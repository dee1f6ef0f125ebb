#include "equifl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "equifl/errors.hpp"
#include "equifl/rng.hpp"

namespace equifl {

PreparedData prepare_data(const ExperimentConfig& cfg, std::uint64_t master_seed) {
  PreparedData out;
  const data::RawTable table = data::load_csv(cfg.dataset_path, cfg.schema);
  out.dataset = data::preprocess(table, cfg.schema);
  for (const std::string& w : out.dataset.encoder.warnings) out.warnings.push_back(w);

  out.partition_seed =
      cfg.partition.seed ? *cfg.partition.seed : derive_seed(master_seed, "partition");
  data::PartitionSpec spec{cfg.partition.alphas, out.partition_seed};
  out.partition = data::dirichlet_partition(out.dataset.records, spec);
  for (const std::string& w : out.partition.warnings) out.warnings.push_back(w);

  const std::size_t n_clients = out.partition.clients.size();
  out.splits.resize(n_clients);
  out.active.assign(n_clients, false);
  for (std::size_t c = 0; c < n_clients; ++c) {
    const std::vector<std::size_t>& rows = out.partition.clients[c];
    if (rows.size() < 3) {
      std::ostringstream msg;
      msg << "client " << c << " drew only " << rows.size()
          << " records; excluded from the run";
      out.warnings.push_back(msg.str());
      continue;
    }
    out.splits[c] =
        data::split(rows, derive_seed(out.partition_seed, "split",
                                      static_cast<std::uint64_t>(c)));
    out.active[c] = true;
    out.clients.push_back(fed::make_client_data(static_cast<int>(c),
                                                out.dataset.records, out.splits[c]));
  }
  if (out.clients.empty()) {
    throw InputError("no client received enough records to train");
  }
  return out;
}

RunResult run_single(const ExperimentConfig& cfg, std::uint64_t master_seed) {
  RunResult result;
  result.seed = master_seed;
  result.prepared = prepare_data(cfg, master_seed);
  result.partition_seed = result.prepared.partition_seed;
  result.model_seed =
      cfg.model.seed ? *cfg.model.seed : derive_seed(master_seed, "init");

  nn::NetConfig net;
  net.layer_dims.push_back(static_cast<int>(result.prepared.dataset.encoder.feature_dim));
  for (int h : cfg.model.hidden_dims) net.layer_dims.push_back(h);
  net.layer_dims.push_back(1);
  net.seed = result.model_seed;

  fed::FedConfig fc = cfg.federation;
  fc.master_seed = master_seed;
  result.outcome = fed::run_experiment(fc, net, result.prepared.clients);
  return result;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InputError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

struct Summary {
  double median_v = 0.0, mean_v = 0.0, std_v = 0.0;
};

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.median_v = median(values);
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean_v = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean_v) * (v - s.mean_v);
  s.std_v = std::sqrt(sq / static_cast<double>(values.size()));
  return s;
}

}  // namespace

std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::string& parameter,
                            const std::vector<double>& values) {
  if (parameter != "mu" && parameter != "num_clients") {
    throw ConfigError("sweep parameter must be 'mu' or 'num_clients'");
  }
  if (values.empty()) throw ConfigError("sweep needs at least one value");

  std::vector<SweepRow> rows;
  for (double value : values) {
    ExperimentConfig patched = cfg;
    if (parameter == "mu") {
      if (value < 0.0) throw ConfigError("mu values must be >= 0");
      patched.federation.mu = value;
    } else {
      if (value < 1.0 || value != std::floor(value)) {
        throw ConfigError("num_clients values must be positive integers");
      }
      patched.partition.alphas =
          cycle_alphas(cfg.partition.alphas, static_cast<std::size_t>(value));
    }
    std::vector<double> accs, dps, eos;
    for (std::uint64_t seed : patched.seeds) {
      const RunResult run = run_single(patched, seed);
      const report::MetricsReport& last = run.final_report();
      accs.push_back(last.local_accuracy);
      dps.push_back(last.local_delta_dp);
      eos.push_back(last.local_delta_eo);
    }
    SweepRow row;
    row.value = value;
    row.seed_count = patched.seeds.size();
    const Summary a = summarize(accs);
    row.accuracy_median = a.median_v;
    row.accuracy_mean = a.mean_v;
    row.accuracy_std = a.std_v;
    const Summary d = summarize(dps);
    row.delta_dp_median = d.median_v;
    row.delta_dp_mean = d.mean_v;
    row.delta_dp_std = d.std_v;
    const Summary e = summarize(eos);
    row.delta_eo_median = e.median_v;
    row.delta_eo_mean = e.mean_v;
    row.delta_eo_std = e.std_v;
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_to_csv(const std::string& parameter, const std::vector<SweepRow>& rows,
                         const std::string& config_echo) {
  std::ostringstream out;
  out.precision(17);
  if (!config_echo.empty()) out << "# config: " << config_echo << '\n';
  out << parameter
      << ",seed_count,accuracy_median,accuracy_mean,accuracy_std,"
         "delta_dp_median,delta_dp_mean,delta_dp_std,"
         "delta_eo_median,delta_eo_mean,delta_eo_std\n";
  for (const SweepRow& r : rows) {
    out << r.value << ',' << r.seed_count << ',' << r.accuracy_median << ','
        << r.accuracy_mean << ',' << r.accuracy_std << ',' << r.delta_dp_median << ','
        << r.delta_dp_mean << ',' << r.delta_dp_std << ',' << r.delta_eo_median << ','
        << r.delta_eo_mean << ',' << r.delta_eo_std << '\n';
  }
  return out.str();
}

}  // namespace equifl
