#include "equifl/fedsim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "equifl/errors.hpp"

namespace equifl::fed {

std::string to_string(Mode mode) {
  return mode == Mode::kEquiFL ? "equifl" : "fedavg";
}

Mode mode_from_string(const std::string& text) {
  if (text == "equifl") return Mode::kEquiFL;
  if (text == "fedavg") return Mode::kFedAvg;
  throw ConfigError("unknown mode '" + text + "' (expected equifl or fedavg)");
}

void FedConfig::validate() const {
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (local_epochs < 1) throw ConfigError("local_epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (mu < 0.0) throw ConfigError("mu must be >= 0");
  if (!(participation_fraction > 0.0) || participation_fraction > 1.0) {
    throw ConfigError("participation_fraction must be in (0, 1]");
  }
  if (!(optimizer.learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (optimizer.beta1 < 0.0 || optimizer.beta1 >= 1.0 || optimizer.beta2 < 0.0 ||
      optimizer.beta2 >= 1.0) {
    throw ConfigError("Adam betas must be in [0, 1)");
  }
  if (!(optimizer.epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
  if (evaluate_every < 0) throw ConfigError("evaluate_every must be >= 0");
  if (threads < 0) throw ConfigError("threads must be >= 0");
}

namespace {

int resolve_threads(const FedConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  if (const char* env = std::getenv("EQUIFL_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

nn::Batch gather(const nn::Batch& full, const std::vector<std::size_t>& order,
                 std::size_t begin, std::size_t end) {
  nn::Batch out;
  const Eigen::Index rows = static_cast<Eigen::Index>(end - begin);
  out.features.resize(rows, full.features.cols());
  out.labels.resize(rows);
  out.sensitive.resize(static_cast<std::size_t>(rows));
  for (std::size_t k = begin; k < end; ++k) {
    const Eigen::Index src = static_cast<Eigen::Index>(order[k]);
    const Eigen::Index dst = static_cast<Eigen::Index>(k - begin);
    out.features.row(dst) = full.features.row(src);
    out.labels[dst] = full.labels[src];
    out.sensitive[static_cast<std::size_t>(dst)] =
        full.sensitive[static_cast<std::size_t>(src)];
  }
  return out;
}

}  // namespace

std::vector<int> select_clients(int num_clients, double fraction, DetRng& round_rng) {
  if (num_clients < 1) throw InputError("select_clients: no clients");
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw InputError("select_clients: fraction must be in (0, 1]");
  }
  std::vector<int> ids(static_cast<std::size_t>(num_clients));
  std::iota(ids.begin(), ids.end(), 0);
  if (fraction == 1.0) return ids;
  const int take = static_cast<int>(
      std::ceil(fraction * static_cast<double>(num_clients)));
  for (int i = 0; i < take; ++i) {
    const std::uint64_t j =
        static_cast<std::uint64_t>(i) +
        round_rng.below(static_cast<std::uint64_t>(num_clients - i));
    std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
  }
  ids.resize(static_cast<std::size_t>(take));
  std::sort(ids.begin(), ids.end());
  return ids;
}

nn::ModelParams selective_init(const nn::ModelParams& local,
                               const nn::ModelParams& global, Mode mode) {
  if (!local.same_shape(global)) {
    throw DimensionError("selective_init: local and global shapes differ");
  }
  if (mode == Mode::kFedAvg) return global;
  nn::ModelParams out = local;
  for (std::size_t l = 0; l + 1 < out.layers.size(); ++l) {
    out.layers[l].weights = global.layers[l].weights;
  }
  return out;
}

ClientState local_training(ClientState client, const ClientData& data,
                           const nn::ModelParams& global, const FedConfig& cfg,
                           int round) {
  if (data.train.size() == 0) {
    std::ostringstream msg;
    msg << "client " << client.id << " has no training data";
    throw InputError(msg.str());
  }
  client.params = selective_init(client.params, global, cfg.mode);
  if (cfg.reset_optimizer_each_round) {
    client.adam = nn::AdamState::zeros_like(client.params, cfg.optimizer);
  }
  if (cfg.on_local_init) cfg.on_local_init(round, client.id, client.params);

  std::vector<std::size_t> order(static_cast<std::size_t>(data.train.size()));
  std::iota(order.begin(), order.end(), 0);
  const std::size_t n = order.size();
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    client.rng.shuffle(order);
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < n; begin += batch, ++batch_index) {
      const std::size_t end = std::min(begin + batch, n);
      const nn::Batch mini = gather(data.train, order, begin, end);
      try {
        const nn::LossGrad lg =
            nn::loss_and_grad(client.params, mini, cfg.mu,
                              fairness::PenaltyKind::kSoftDp);
        std::tie(client.params, client.adam) =
            nn::adam_step(client.params, lg.grads, client.adam);
      } catch (const NumericError& e) {
        std::ostringstream msg;
        msg << "round " << round << ", client " << client.id << ", epoch " << epoch
            << ", batch " << batch_index << ": " << e.what();
        throw NumericError(msg.str());
      }
    }
  }
  return client;
}

nn::ModelParams aggregate(const std::vector<const nn::ModelParams*>& contributions,
                          const std::vector<double>& sizes) {
  if (contributions.empty()) throw InputError("aggregate: no contributors");
  if (contributions.size() != sizes.size()) {
    throw DimensionError("aggregate: contributor/size count mismatch");
  }
  double total = 0.0;
  for (double n : sizes) {
    if (!(n >= 1.0)) throw InputError("aggregate: contributor sizes must be >= 1");
    total += n;
  }
  const nn::ModelParams& first = *contributions.front();
  for (const nn::ModelParams* p : contributions) {
    if (!p->same_shape(first)) throw DimensionError("aggregate: shape mismatch");
  }

  nn::ModelParams out;
  out.layers.resize(first.layers.size());
  for (std::size_t l = 0; l < first.layers.size(); ++l) {
    out.layers[l].weights =
        Eigen::MatrixXd::Zero(first.layers[l].weights.rows(), first.layers[l].weights.cols());
    out.layers[l].bias = Eigen::VectorXd::Zero(first.layers[l].bias.size());
  }
  for (std::size_t i = 0; i < contributions.size(); ++i) {
    const double coef = sizes[i] / total;
    for (std::size_t l = 0; l < out.layers.size(); ++l) {
      out.layers[l].weights += coef * contributions[i]->layers[l].weights;
      out.layers[l].bias += coef * contributions[i]->layers[l].bias;
    }
  }
  return out;
}

RoundState run_round(const RoundState& state, std::vector<ClientState>& clients,
                     const std::vector<ClientData>& data, const FedConfig& cfg) {
  if (clients.size() != data.size()) {
    throw DimensionError("run_round: clients/data count mismatch");
  }
  DetRng roster_rng(derive_seed(cfg.master_seed, "roster", state.round));
  const std::vector<int> roster = select_clients(
      static_cast<int>(clients.size()), cfg.participation_fraction, roster_rng);

  // Each roster slot is trained independently; results land by slot index so
  // the outcome does not depend on completion order.
  std::vector<ClientState> results(roster.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  const int workers = std::min<int>(resolve_threads(cfg),
                                    static_cast<int>(roster.size()));
  auto work = [&]() {
    for (;;) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= roster.size()) return;
      const int cid = roster[slot];
      try {
        results[slot] = local_training(clients[cid], data[cid], state.global, cfg,
                                       state.round);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  std::vector<const nn::ModelParams*> contributions;
  std::vector<double> sizes;
  contributions.reserve(roster.size());
  sizes.reserve(roster.size());
  for (std::size_t slot = 0; slot < roster.size(); ++slot) {
    clients[roster[slot]] = std::move(results[slot]);
    contributions.push_back(&clients[roster[slot]].params);
    sizes.push_back(data[roster[slot]].n());
  }

  RoundState out;
  out.round = state.round + 1;
  out.global = aggregate(contributions, sizes);
  out.roster = roster;
  return out;
}

report::MetricsReport compile_report(int round, const FedConfig& cfg,
                                     const std::vector<ClientState>& clients,
                                     const std::vector<ClientData>& data,
                                     const nn::ModelParams& global) {
  std::vector<int> ids;
  std::vector<const nn::ModelParams*> models;
  std::vector<const nn::Batch*> tests;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    ids.push_back(clients[i].id);
    models.push_back(&clients[i].params);
    tests.push_back(&data[i].test);
  }

  report::MetricsReport out;
  out.round = round;
  out.mode = to_string(cfg.mode);
  out.mu = cfg.mu;

  report::LocalEval local = report::evaluate_local(ids, models, tests);
  out.clients = std::move(local.clients);
  out.local_accuracy = local.accuracy;
  out.local_delta_dp = local.delta_dp;
  out.local_delta_eo = local.delta_eo;
  out.warnings = std::move(local.warnings);

  out.global = report::evaluate_global(global, tests);

  // Pooled predictions where each client first re-initializes from the global
  // model the same way a new round would.
  {
    std::vector<int> preds;
    std::vector<int> labels;
    std::vector<int> groups;
    for (std::size_t i = 0; i < clients.size(); ++i) {
      if (data[i].test.size() == 0) continue;
      const nn::ModelParams local_model =
          selective_init(clients[i].params, global, cfg.mode);
      const std::vector<int> p =
          report::hard_decisions(local_model, data[i].test.features);
      preds.insert(preds.end(), p.begin(), p.end());
      for (Eigen::Index r = 0; r < data[i].test.size(); ++r) {
        labels.push_back(data[i].test.labels[r] > 0.5 ? 1 : 0);
        groups.push_back(data[i].test.sensitive[static_cast<std::size_t>(r)]);
      }
    }
    out.global_selective = report::pooled_metrics(preds, labels, groups);
  }

  std::vector<double> accs;
  std::vector<double> dps;
  for (const report::ClientMetrics& c : out.clients) {
    if (!c.present) continue;
    accs.push_back(c.accuracy);
    dps.push_back(c.delta_dp);
  }
  if (!accs.empty()) {
    out.accuracy_stats = report::performance_fairness_stats(accs);
    out.delta_dp_stats = report::performance_fairness_stats(dps);
  }
  return out;
}

ExperimentResult run_experiment(const FedConfig& cfg, const nn::NetConfig& net,
                                const std::vector<ClientData>& data) {
  cfg.validate();
  net.validate();
  if (data.empty()) throw InputError("run_experiment: no clients");
  for (const ClientData& d : data) {
    if (d.train.size() == 0) {
      std::ostringstream msg;
      msg << "run_experiment: client " << d.id << " has no training data";
      throw InputError(msg.str());
    }
  }

  ExperimentResult result;
  result.global = nn::init_params(net);
  result.clients.reserve(data.size());
  for (const ClientData& d : data) {
    ClientState state;
    state.id = d.id;
    state.params = result.global;
    state.adam = nn::AdamState::zeros_like(result.global, cfg.optimizer);
    state.rng = DetRng(derive_seed(cfg.master_seed, "client-stream",
                                   static_cast<std::uint64_t>(d.id)));
    result.clients.push_back(std::move(state));
  }

  RoundState rs;
  rs.round = 0;
  rs.global = result.global;
  for (int t = 0; t < cfg.rounds; ++t) {
    rs = run_round(rs, result.clients, data, cfg);
    const bool last = t + 1 == cfg.rounds;
    const bool due =
        cfg.evaluate_every > 0 && ((t + 1) % cfg.evaluate_every == 0);
    if (due || last) {
      result.history.push_back(
          compile_report(rs.round, cfg, result.clients, data, rs.global));
    }
  }
  result.global = rs.global;
  return result;
}

ClientData make_client_data(int id, const std::vector<data::Record>& records,
                            const data::SplitIndices& splits) {
  const auto build = [&records](const std::vector<std::size_t>& idx) {
    nn::Batch batch;
    const Eigen::Index rows = static_cast<Eigen::Index>(idx.size());
    const Eigen::Index dim = records.empty() ? 0 : records.front().features.size();
    batch.features.resize(rows, dim);
    batch.labels.resize(rows);
    batch.sensitive.resize(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const data::Record& rec = records[idx[k]];
      batch.features.row(static_cast<Eigen::Index>(k)) = rec.features.transpose();
      batch.labels[static_cast<Eigen::Index>(k)] = rec.label;
      batch.sensitive[k] = rec.sensitive;
    }
    return batch;
  };
  ClientData out;
  out.id = id;
  out.train = build(splits.train);
  out.validation = build(splits.validation);
  out.test = build(splits.test);
  return out;
}

}  // namespace equifl::fed
