#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <vector>

#include "equifl/errors.hpp"
#include "equifl/fedsim.hpp"
#include "equifl/nn.hpp"
#include "equifl/rng.hpp"
#include "support/oracles.hpp"

using namespace equifl;
using namespace equifl::fed;

namespace {

nn::ModelParams random_params(std::vector<int> dims, std::uint64_t seed) {
  nn::NetConfig cfg;
  cfg.layer_dims = std::move(dims);
  cfg.seed = seed;
  return nn::init_params(cfg);
}

nn::ModelParams scalar_params(double w) {
  nn::ModelParams p;
  nn::LayerParams layer;
  layer.weights = Eigen::MatrixXd::Constant(1, 1, w);
  layer.bias = Eigen::VectorXd::Zero(1);
  p.layers.push_back(layer);
  return p;
}

FedConfig small_fed(Mode mode, double mu) {
  FedConfig cfg;
  cfg.mode = mode;
  cfg.mu = mu;
  cfg.rounds = 3;
  cfg.local_epochs = 2;
  cfg.batch_size = 16;
  cfg.optimizer.learning_rate = 1e-2;
  cfg.master_seed = 99;
  cfg.evaluate_every = 1;
  cfg.threads = 1;
  return cfg;
}

std::vector<ClientData> small_population(int n_clients, std::uint64_t seed,
                                         Eigen::Index rows = 40, int groups = 2) {
  DetRng rng(seed);
  std::vector<ClientData> data;
  for (int i = 0; i < n_clients; ++i) {
    data.push_back(oracles::synthetic_client(rng, i, rows, 12, 4, groups));
  }
  return data;
}

}  // namespace

TEST_CASE("select_clients full participation is id order without randomness") {
  DetRng rng(1);
  const auto before = rng.save_state();
  CHECK(select_clients(5, 1.0, rng) == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(rng.save_state() == before);
}

TEST_CASE("select_clients samples ceil(fraction*N) distinct ids deterministically") {
  DetRng a(7);
  const std::vector<int> roster = select_clients(5, 0.4, a);
  REQUIRE(roster.size() == 2);
  CHECK(roster[0] != roster[1]);
  for (int id : roster) {
    CHECK(id >= 0);
    CHECK(id < 5);
  }
  DetRng b(7);
  CHECK(select_clients(5, 0.4, b) == roster);
}

TEST_CASE("selective_init copies hidden weights only") {
  const nn::ModelParams local = random_params({4, 6, 5, 1}, 1);
  const nn::ModelParams global = random_params({4, 6, 5, 1}, 2);
  const nn::ModelParams out = selective_init(local, global, Mode::kEquiFL);

  // hidden-layer weights come from the global model
  CHECK((out.layers[0].weights.array() == global.layers[0].weights.array()).all());
  CHECK((out.layers[1].weights.array() == global.layers[1].weights.array()).all());
  // biases and the whole last layer stay local
  CHECK((out.layers[0].bias.array() == local.layers[0].bias.array()).all());
  CHECK((out.layers[1].bias.array() == local.layers[1].bias.array()).all());
  CHECK((out.layers[2].weights.array() == local.layers[2].weights.array()).all());
  CHECK((out.layers[2].bias.array() == local.layers[2].bias.array()).all());
}

TEST_CASE("selective_init on a single-layer net keeps everything local") {
  const nn::ModelParams local = random_params({4, 1}, 3);
  const nn::ModelParams global = random_params({4, 1}, 4);
  CHECK(nn::bitwise_equal(selective_init(local, global, Mode::kEquiFL), local));
}

TEST_CASE("selective_init in fedavg mode is a full copy") {
  const nn::ModelParams local = random_params({4, 6, 1}, 5);
  const nn::ModelParams global = random_params({4, 6, 1}, 6);
  CHECK(nn::bitwise_equal(selective_init(local, global, Mode::kFedAvg), global));
}

TEST_CASE("selective_init rejects shape mismatch") {
  const nn::ModelParams local = random_params({4, 6, 1}, 5);
  const nn::ModelParams global = random_params({4, 5, 1}, 6);
  CHECK_THROWS_AS(selective_init(local, global, Mode::kEquiFL), equifl::DimensionError);
}

TEST_CASE("aggregate weighted mean hand case") {
  const nn::ModelParams a = scalar_params(0.0);
  const nn::ModelParams b = scalar_params(4.0);
  const nn::ModelParams out = aggregate({&a, &b}, {1.0, 3.0});
  CHECK(out.layers[0].weights(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("aggregate of identical contributors returns the common value") {
  const nn::ModelParams p = random_params({3, 4, 1}, 8);
  const nn::ModelParams out = aggregate({&p, &p}, {5.0, 3.0});
  // weights 5/8 and 3/8 are exact binary fractions, so equality is exact
  CHECK(nn::bitwise_equal(out, p));
}

TEST_CASE("aggregate is invariant to a common scaling of the sizes") {
  const nn::ModelParams a = random_params({3, 4, 1}, 9);
  const nn::ModelParams b = random_params({3, 4, 1}, 10);
  const nn::ModelParams c = random_params({3, 4, 1}, 11);
  const nn::ModelParams base = aggregate({&a, &b, &c}, {2.0, 5.0, 9.0});
  const nn::ModelParams scaled = aggregate({&a, &b, &c}, {14.0, 35.0, 63.0});
  CHECK(nn::bitwise_equal(base, scaled));
}

TEST_CASE("aggregate is linear in the contributions") {
  const nn::ModelParams a = random_params({3, 4, 1}, 12);
  const nn::ModelParams b = random_params({3, 4, 1}, 13);
  nn::ModelParams a2 = a;
  nn::ModelParams b2 = b;
  for (std::size_t l = 0; l < a2.layers.size(); ++l) {
    a2.layers[l].weights *= 2.5;
    a2.layers[l].bias *= 2.5;
    b2.layers[l].weights *= 2.5;
    b2.layers[l].bias *= 2.5;
  }
  const nn::ModelParams base = aggregate({&a, &b}, {3.0, 4.0});
  nn::ModelParams scaled_base = base;
  for (std::size_t l = 0; l < base.layers.size(); ++l) {
    scaled_base.layers[l].weights *= 2.5;
    scaled_base.layers[l].bias *= 2.5;
  }
  CHECK(oracles::max_abs_diff(aggregate({&a2, &b2}, {3.0, 4.0}), scaled_base) <= 1e-14);
}

TEST_CASE("aggregate input validation") {
  const nn::ModelParams a = random_params({3, 4, 1}, 14);
  const nn::ModelParams b = random_params({3, 5, 1}, 15);
  CHECK_THROWS_AS(aggregate({}, {}), equifl::InputError);
  CHECK_THROWS_AS(aggregate({&a, &b}, {1.0, 1.0}), equifl::DimensionError);
  CHECK_THROWS_AS(aggregate({&a}, {0.5}), equifl::InputError);
}

TEST_CASE("local_training with zero learning rate reduces to selective_init") {
  const std::vector<ClientData> data = small_population(1, 101);
  FedConfig cfg = small_fed(Mode::kEquiFL, 1.0);
  cfg.optimizer.learning_rate = 0.0;
  const nn::ModelParams global = random_params({4, 6, 1}, 21);

  ClientState client;
  client.id = 0;
  client.params = random_params({4, 6, 1}, 22);
  client.adam = nn::AdamState::zeros_like(client.params, cfg.optimizer);
  client.rng = DetRng(1);
  const nn::ModelParams expected = selective_init(client.params, global, cfg.mode);
  const ClientState out = local_training(std::move(client), data[0], global, cfg, 0);
  CHECK(nn::bitwise_equal(out.params, expected));
}

TEST_CASE("single-group client trains exactly as if mu were zero") {
  const std::vector<ClientData> data = small_population(1, 103, 40, /*groups=*/1);
  const nn::ModelParams global = random_params({4, 6, 1}, 23);
  FedConfig with_mu = small_fed(Mode::kEquiFL, 3.0);
  FedConfig no_mu = small_fed(Mode::kEquiFL, 0.0);

  auto make_client = [&]() {
    ClientState c;
    c.id = 0;
    c.params = global;
    c.adam = nn::AdamState::zeros_like(global, with_mu.optimizer);
    c.rng = DetRng(derive_seed(with_mu.master_seed, "client-stream", 0));
    return c;
  };
  const ClientState a = local_training(make_client(), data[0], global, with_mu, 0);
  const ClientState b = local_training(make_client(), data[0], global, no_mu, 0);
  CHECK(nn::bitwise_equal(a.params, b.params));
}

TEST_CASE("run_round with one client adopts that client's parameters") {
  const std::vector<ClientData> data = small_population(1, 105);
  const FedConfig cfg = small_fed(Mode::kEquiFL, 1.0);
  const nn::ModelParams global = random_params({4, 6, 1}, 25);

  std::vector<ClientState> clients(1);
  clients[0].id = 0;
  clients[0].params = global;
  clients[0].adam = nn::AdamState::zeros_like(global, cfg.optimizer);
  clients[0].rng = DetRng(derive_seed(cfg.master_seed, "client-stream", 0));

  RoundState state;
  state.round = 0;
  state.global = global;
  const RoundState next = run_round(state, clients, data, cfg);
  CHECK(next.round == 1);
  CHECK(next.roster == std::vector<int>{0});
  CHECK(nn::bitwise_equal(next.global, clients[0].params));
}

TEST_CASE("non-roster clients are bitwise untouched") {
  const std::vector<ClientData> data = small_population(5, 107);
  FedConfig cfg = small_fed(Mode::kEquiFL, 1.0);
  cfg.participation_fraction = 0.4;
  const nn::ModelParams global = random_params({4, 6, 1}, 27);

  std::vector<ClientState> clients(5);
  for (int i = 0; i < 5; ++i) {
    clients[i].id = i;
    clients[i].params = random_params({4, 6, 1}, 30 + i);
    clients[i].adam = nn::AdamState::zeros_like(global, cfg.optimizer);
    clients[i].rng = DetRng(derive_seed(cfg.master_seed, "client-stream", i));
  }
  std::vector<nn::ModelParams> snapshot;
  for (const auto& c : clients) snapshot.push_back(c.params);

  RoundState state;
  state.round = 0;
  state.global = global;
  const RoundState next = run_round(state, clients, data, cfg);
  REQUIRE(next.roster.size() == 2);
  for (int i = 0; i < 5; ++i) {
    const bool rostered =
        std::find(next.roster.begin(), next.roster.end(), i) != next.roster.end();
    if (rostered) {
      CHECK_FALSE(nn::bitwise_equal(clients[i].params, snapshot[i]));
    } else {
      CHECK(nn::bitwise_equal(clients[i].params, snapshot[i]));
    }
  }
}

TEST_CASE("run_experiment end-to-end determinism across thread counts") {
  const std::vector<ClientData> data = small_population(4, 109);
  nn::NetConfig net;
  net.layer_dims = {4, 6, 1};
  net.seed = 55;

  FedConfig cfg = small_fed(Mode::kEquiFL, 1.0);
  cfg.rounds = 2;
  cfg.threads = 1;
  const ExperimentResult a = run_experiment(cfg, net, data);
  const ExperimentResult b = run_experiment(cfg, net, data);
  cfg.threads = 3;
  const ExperimentResult c = run_experiment(cfg, net, data);

  CHECK(nn::bitwise_equal(a.global, b.global));
  CHECK(nn::bitwise_equal(a.global, c.global));
  for (std::size_t i = 0; i < a.clients.size(); ++i) {
    CHECK(nn::bitwise_equal(a.clients[i].params, c.clients[i].params));
  }
  CHECK(a.history.size() == 2);
}

TEST_CASE("run_experiment validates the round count") {
  const std::vector<ClientData> data = small_population(2, 111);
  nn::NetConfig net;
  net.layer_dims = {4, 6, 1};
  net.seed = 1;
  FedConfig cfg = small_fed(Mode::kEquiFL, 1.0);
  cfg.rounds = 0;
  CHECK_THROWS_AS(run_experiment(cfg, net, data), equifl::ConfigError);

  cfg.rounds = 1;
  const ExperimentResult r = run_experiment(cfg, net, data);
  CHECK(r.history.size() == 1);
  CHECK(r.history.back().round == 1);
}

TEST_CASE("selective-update freeze holds at every init during a run") {
  const std::vector<ClientData> data = small_population(5, 113);
  nn::NetConfig net;
  net.layer_dims = {4, 6, 5, 1};  // three layers
  net.seed = 77;

  FedConfig cfg = small_fed(Mode::kEquiFL, 1.0);
  cfg.rounds = 5;
  cfg.threads = 1;

  // drive rounds manually so each round's inputs are visible to the hook
  std::vector<ClientState> clients;
  nn::ModelParams global = nn::init_params(net);
  for (const ClientData& d : data) {
    ClientState c;
    c.id = d.id;
    c.params = global;
    c.adam = nn::AdamState::zeros_like(global, cfg.optimizer);
    c.rng = DetRng(derive_seed(cfg.master_seed, "client-stream", d.id));
    clients.push_back(std::move(c));
  }

  RoundState state;
  state.round = 0;
  state.global = global;
  int checks = 0;
  for (int t = 0; t < cfg.rounds; ++t) {
    std::vector<nn::ModelParams> pre_round;
    for (const auto& c : clients) pre_round.push_back(c.params);
    const nn::ModelParams incoming = state.global;

    cfg.on_local_init = [&](int, int client_id, const nn::ModelParams& initialized) {
      const nn::ModelParams& pre = pre_round[client_id];
      const std::size_t m = initialized.depth();
      for (std::size_t l = 0; l + 1 < m; ++l) {
        CHECK((initialized.layers[l].weights.array() ==
               incoming.layers[l].weights.array())
                  .all());
        CHECK((initialized.layers[l].bias.array() == pre.layers[l].bias.array()).all());
      }
      CHECK((initialized.layers[m - 1].weights.array() ==
             pre.layers[m - 1].weights.array())
                .all());
      CHECK(
          (initialized.layers[m - 1].bias.array() == pre.layers[m - 1].bias.array()).all());
      ++checks;
    };
    state = run_round(state, clients, data, cfg);
  }
  CHECK(checks == 5 * 5);
}

TEST_CASE("fedavg mode with mu=0 matches the reference loop within 1e-12") {
  DetRng mix(115);
  std::vector<ClientData> data;
  for (int i = 0; i < 3; ++i) {
    data.push_back(oracles::synthetic_client(mix, i, 30 + 10 * i, 10, 4, 2));
  }
  nn::NetConfig net;
  net.layer_dims = {4, 8, 1};
  net.seed = 2024;

  FedConfig cfg = small_fed(Mode::kFedAvg, 0.0);
  cfg.rounds = 4;
  cfg.local_epochs = 2;
  cfg.batch_size = 16;
  cfg.evaluate_every = 0;
  const ExperimentResult engine = run_experiment(cfg, net, data);
  const std::vector<nn::ModelParams> reference = oracles::reference_fedavg(
      net, data, cfg.rounds, cfg.local_epochs, cfg.batch_size, cfg.optimizer,
      cfg.master_seed);
  CHECK(oracles::max_abs_diff(engine.global, reference.back()) <= 1e-12);
}

TEST_CASE("numeric failure during local training names the client") {
  std::vector<ClientData> data = small_population(1, 117);
  data[0].train.features.array() = std::nan("");  // poisons the forward pass
  const nn::ModelParams global = random_params({4, 6, 1}, 91);
  FedConfig cfg = small_fed(Mode::kEquiFL, 1.0);

  ClientState client;
  client.id = 0;
  client.params = global;
  client.adam = nn::AdamState::zeros_like(global, cfg.optimizer);
  client.rng = DetRng(1);
  try {
    local_training(std::move(client), data[0], global, cfg, 3);
    FAIL("expected NumericError");
  } catch (const equifl::NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("client 0") != std::string::npos);
    CHECK(msg.find("round 3") != std::string::npos);
    CHECK(msg.find("batch") != std::string::npos);
  }
}
