#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "equifl/data.hpp"
#include "equifl/nn.hpp"
#include "equifl/report.hpp"
#include "equifl/rng.hpp"

namespace equifl::fed {

enum class Mode { kEquiFL, kFedAvg };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& text);

struct FedConfig {
  int rounds = 100;
  int local_epochs = 5;
  int batch_size = 256;
  double mu = 1.0;
  double participation_fraction = 1.0;
  Mode mode = Mode::kEquiFL;
  nn::AdamConfig optimizer;
  bool reset_optimizer_each_round = false;
  int evaluate_every = 1;  // 0 = final round only
  std::uint64_t master_seed = 0;
  int threads = 0;  // 0 = EQUIFL_THREADS env var, else hardware concurrency

  // Diagnostic hook invoked right after a roster client re-initializes from
  // the global model. Must be thread-safe when training runs multi-threaded.
  std::function<void(int round, int client_id, const nn::ModelParams& initialized)>
      on_local_init;

  void validate() const;
};

// Tensorized per-client splits; clients[i] trains on data[i].
struct ClientData {
  int id = 0;
  nn::Batch train;
  nn::Batch validation;
  nn::Batch test;

  double n() const { return static_cast<double>(train.size()); }
};

struct ClientState {
  int id = 0;
  nn::ModelParams params;
  nn::AdamState adam;
  DetRng rng{0};
};

struct RoundState {
  int round = 0;              // t
  nn::ModelParams global;     // aggregated parameters entering round t
  std::vector<int> roster;    // clients selected in the round just executed
};

// ceil(fraction * N) distinct ids, uniform without replacement; fraction == 1
// short-circuits to id order without consuming randomness.
std::vector<int> select_clients(int num_clients, double fraction, DetRng& round_rng);

// kEquiFL: hidden-layer weight matrices come from the global model; every
// bias vector and the whole last layer stay local. kFedAvg: full copy.
nn::ModelParams selective_init(const nn::ModelParams& local,
                               const nn::ModelParams& global, Mode mode);

// Selective init followed by E epochs of seeded mini-batch Adam on the
// penalized objective. Consumes and returns the client state.
ClientState local_training(ClientState client, const ClientData& data,
                           const nn::ModelParams& global, const FedConfig& cfg,
                           int round);

// n_i-weighted elementwise mean of every weight matrix and bias vector.
nn::ModelParams aggregate(const std::vector<const nn::ModelParams*>& contributions,
                          const std::vector<double>& sizes);

// One communication round: roster selection, concurrent local training,
// aggregation. Non-roster clients are left untouched.
RoundState run_round(const RoundState& state, std::vector<ClientState>& clients,
                     const std::vector<ClientData>& data, const FedConfig& cfg);

report::MetricsReport compile_report(int round, const FedConfig& cfg,
                                     const std::vector<ClientState>& clients,
                                     const std::vector<ClientData>& data,
                                     const nn::ModelParams& global);

struct ExperimentResult {
  nn::ModelParams global;
  std::vector<ClientState> clients;
  std::vector<report::MetricsReport> history;
};

ExperimentResult run_experiment(const FedConfig& cfg, const nn::NetConfig& net,
                                const std::vector<ClientData>& data);

// Builds tensor batches for each client from a partition + per-client splits.
ClientData make_client_data(int id, const std::vector<data::Record>& records,
                            const data::SplitIndices& splits);

}  // namespace equifl::fed
