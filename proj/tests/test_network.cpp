#include <doctest.h>

#include <sstream>

#include "mixbound/network.hpp"
#include "mixbound/norms.hpp"
#include "mixbound/process.hpp"
#include "oracles.hpp"

using namespace mixbound;
using oracle::mat;
using oracle::vec;

namespace {

NetworkParams single_layer(const Eigen::MatrixXd& a, ActivationKind kind) {
  NetworkParams net;
  net.layers.push_back(a);
  net.activations.push_back(Activation{kind});
  return net;
}

LabeledDataset dataset(const Eigen::MatrixXd& inputs, std::vector<int> labels, int k = 2) {
  LabeledDataset d;
  d.inputs = inputs;
  d.labels = std::move(labels);
  d.num_classes = k;
  return d;
}

}  // namespace

TEST_CASE("activations") {
  CounterRng rng(1, 0);
  for (auto kind : {ActivationKind::relu, ActivationKind::leaky_relu, ActivationKind::tanh, ActivationKind::identity}) {
    Activation act{kind, 0.1};
    CHECK(act.apply(0.0) == 0.0);
    for (int i = 0; i < 1000; ++i) {
      const double x = rng.uniform(-5, 5);
      const double y = rng.uniform(-5, 5);
      CHECK(std::abs(act.apply(x) - act.apply(y)) <= act.lipschitz() * std::abs(x - y) + 1e-15);
    }
    CHECK(parse_activation(to_string(act)) == act);
  }
  CHECK_THROWS_AS(parse_activation("leaky_relu:1.5"), Error);
  CHECK_THROWS_AS(parse_activation("sigmoid"), Error);
}

TEST_CASE("forward examples") {
  const NetworkParams relu = single_layer(Eigen::MatrixXd::Identity(2, 2), ActivationKind::relu);
  CHECK(forward(relu, vec({1.0, -1.0})) == vec({1.0, 0.0}));

  CounterRng rng(2, 0);
  const NetworkParams net = oracle::random_network({3, 8, 8, 2}, rng, ActivationKind::relu);
  CHECK(forward(net, Eigen::VectorXd::Zero(3)) == Eigen::VectorXd::Zero(2));

  NetworkParams scale;
  scale.layers = {2.0 * Eigen::MatrixXd::Identity(2, 2), 3.0 * Eigen::MatrixXd::Identity(2, 2)};
  scale.activations = {Activation{ActivationKind::identity}, Activation{ActivationKind::identity}};
  CHECK(forward(scale, vec({1.0, 0.0})) == vec({6.0, 0.0}));

  CHECK_THROWS_AS(forward(relu, vec({1.0, 2.0, 3.0})), Error);
}

TEST_CASE("global Lipschitz bound") {
  CounterRng rng(3, 0);
  const NetworkParams net = oracle::random_network({4, 8, 8, 3}, rng);
  const LayerNorms norms = layer_norms(net);
  const double lip = norms.lipschitz_product();
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd x = oracle::random_matrix(4, 1, rng);
    const Eigen::VectorXd y = oracle::random_matrix(4, 1, rng);
    CHECK((forward(net, x) - forward(net, y)).norm() <= lip * (x - y).norm() + 1e-9);
  }
}

TEST_CASE("margin") {
  CHECK(margin(vec({3, 1, 0}), 1) == 2.0);
  CHECK(margin(vec({1, 1, 0}), 1) == 0.0);
  CHECK(margin(vec({0, 2, 1}), 1) == -2.0);
  CHECK_THROWS_AS(margin(vec({0, 2, 1}), 4), Error);
  CHECK_THROWS_AS(margin(vec({0, 2, 1}), 0), Error);
  CHECK_THROWS_AS(margin(vec({1}), 1), Error);
}

TEST_CASE("ramp loss") {
  CHECK(ramp_loss(0.0, 1.0) == 1.0);
  CHECK(ramp_loss(-2.0, 1.0) == 0.0);
  CHECK(ramp_loss(-1.0, 2.0) == 0.5);
  CHECK(ramp_loss(3.0, 0.5) == 1.0);
  CHECK_THROWS_AS(ramp_loss(0.0, 0.0), Error);
  CounterRng rng(4, 0);
  for (int i = 0; i < 1000; ++i) {
    const double g = rng.uniform(0.1, 3.0);
    const double r = rng.uniform(-5, 5);
    const double s = rng.uniform(-5, 5);
    CHECK(std::abs(ramp_loss(r, g) - ramp_loss(s, g)) <= std::abs(r - s) / g + 1e-15);
  }
}

TEST_CASE("empirical and zero-one losses") {
  const NetworkParams id = single_layer(Eigen::MatrixXd::Identity(2, 2), ActivationKind::identity);
  const LabeledDataset good = dataset(mat({{2, 0}, {0, 2}}), {1, 2});
  CHECK(empirical_loss(id, good, 1.0) == 0.0);
  CHECK(zero_one_loss(id, good) == 0.0);

  const LabeledDataset bad = dataset(mat({{0, 2}, {2, 0}}), {1, 2});
  CHECK(empirical_loss(id, bad, 1.0) == 1.0);
  CHECK(zero_one_loss(id, bad) == 1.0);

  const LabeledDataset half_margin = dataset(mat({{0.5, 0}}), {1});
  CHECK(empirical_loss(id, half_margin, 1.0) == 0.5);

  const NetworkParams zero = single_layer(Eigen::MatrixXd::Zero(2, 2), ActivationKind::identity);
  CHECK(zero_one_loss(zero, good) == 1.0);

  const LabeledDataset mixed = dataset(mat({{2, 0}, {0, 2}, {2, 0}, {0, 2}}), {1, 2, 2, 1});
  CHECK(zero_one_loss(id, mixed) == 0.5);

  CHECK_THROWS_AS(empirical_loss(id, LabeledDataset{}, 1.0), Error);
  CHECK_THROWS_AS(zero_one_loss(id, LabeledDataset{}), Error);

  CounterRng rng(6, 0);
  const NetworkParams net = oracle::random_network({2, 6, 2}, rng);
  const LabeledDataset data = sample_sequence(oracle::default_gaussian(), 300, 6);
  for (double g : {0.1, 0.5, 2.0}) {
    const double ramp = empirical_loss(net, data, g);
    CHECK(ramp >= 0.0);
    CHECK(ramp <= 1.0);
    CHECK(zero_one_loss(net, data) <= ramp);
  }
}

TEST_CASE("population estimate") {
  CHECK(std::abs(hoeffding_halfwidth(10000, 0.01) - 0.016276236307187293) < 1e-15);
  const ProcessSpec spec = oracle::default_gaussian();
  const LabeledDataset target = sample_target(spec, 500, 1);
  const NetworkParams zero = single_layer(Eigen::MatrixXd::Zero(2, 2), ActivationKind::identity);
  const PopulationEstimate est = population_estimate(zero, target, 1.0);
  CHECK(est.ramp_loss == 1.0);
  CHECK(est.zero_one_loss == 1.0);

  CounterRng rng(8, 0);
  const NetworkParams net = oracle::random_network({2, 4, 2}, rng);
  CHECK(population_estimate(net, target, 0.7).ramp_loss == empirical_loss(net, target, 0.7));

  CHECK_THROWS_AS(population_estimate(net, sample_sequence(spec, 10, 1), 1.0), Error);
}

TEST_CASE("gradient matches central differences") {
  CounterRng rng(10, 0);
  for (int trial = 0; trial < 4; ++trial) {
    const std::vector<int> dims = trial % 2 == 0 ? std::vector<int>{3, 8, 3} : std::vector<int>{3, 8, 8, 3};
    NetworkParams net = oracle::random_network(dims, rng, ActivationKind::tanh);
    const Eigen::MatrixXd x = oracle::random_matrix(6, 3, rng);
    std::vector<int> y;
    for (int i = 0; i < 6; ++i) y.push_back(1 + static_cast<int>(rng.below(3)));
    const auto grad = gradient(net, x, y);
    const double h = 1e-5;
    double max_err = 0.0;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      for (Eigen::Index i = 0; i < net.layers[l].size(); ++i) {
        const double saved = net.layers[l](i);
        net.layers[l](i) = saved + h;
        const double up = surrogate_loss(net, x, y);
        net.layers[l](i) = saved - h;
        const double down = surrogate_loss(net, x, y);
        net.layers[l](i) = saved;
        const double fd = (up - down) / (2 * h);
        max_err = std::max(max_err, std::abs(fd - grad[l](i)) / std::max(1.0, std::abs(fd)));
      }
    }
    CHECK(max_err <= 1e-5);
  }
}

TEST_CASE("gradient symmetry and linearity") {
  NetworkParams zero;
  zero.layers = {Eigen::MatrixXd::Zero(4, 2), Eigen::MatrixXd::Zero(2, 4)};
  zero.activations = {Activation{ActivationKind::tanh}, Activation{ActivationKind::identity}};
  const Eigen::MatrixXd x = mat({{1, 2}, {-1, -2}});
  const auto g0 = gradient(zero, x, {1, 2});
  CHECK(g0[1].cwiseAbs().maxCoeff() == 0.0);

  CounterRng rng(12, 0);
  const NetworkParams net = oracle::random_network({2, 5, 2}, rng);
  const auto g1 = gradient(net, x, {1, 2});
  const auto g2 = gradient(net, x, {1, 2}, Surrogate{SurrogateKind::softmax_cross_entropy, 2.0});
  for (std::size_t l = 0; l < g1.size(); ++l) CHECK((g2[l] - 2.0 * g1[l]).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("training") {
  const ProcessSpec spec = oracle::default_gaussian();
  ProcessSpec blobs = spec;
  blobs.markov.transition = mat({{0.5, 0.5}, {0.5, 0.5}});
  blobs.markov.initial = vec({0.5, 0.5});
  blobs.emission.means = mat({{3, 3}, {-3, -3}});
  blobs.emission.drift.amplitude = 0.0;
  const LabeledDataset data = sample_sequence(blobs, 500, 1);
  Architecture arch;
  arch.dims = {2, 16, 2};
  arch.activations = {Activation{ActivationKind::relu}, Activation{ActivationKind::identity}};
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.seed = 3;
  const TrainResult trained = train_sgd(data, arch, cfg);
  CHECK(zero_one_loss(trained.params, data) <= 0.05);
  CHECK(trained.loss_trajectory.size() == 50);

  const TrainResult again = train_sgd(data, arch, cfg);
  for (std::size_t l = 0; l < arch.dims.size() - 1; ++l) CHECK(again.params.layers[l] == trained.params.layers[l]);

  TrainConfig frozen = cfg;
  frozen.learning_rate = 0.0;
  frozen.epochs = 3;
  const TrainResult still = train_sgd(data, arch, frozen);
  const NetworkParams init = initialize(arch, frozen);
  for (std::size_t l = 0; l < init.layers.size(); ++l) CHECK(still.params.layers[l] == init.layers[l]);

  std::stringstream io;
  write_network(io, trained.params);
  const NetworkParams back = read_network(io);
  for (std::size_t l = 0; l < back.layers.size(); ++l) CHECK(back.layers[l] == trained.params.layers[l]);
  CHECK(back.activations == trained.params.activations);
}
