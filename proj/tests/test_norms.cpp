#include <doctest.h>

#include "mixbound/norms.hpp"
#include "oracles.hpp"

using namespace mixbound;
using oracle::mat;

TEST_CASE("spectral norm examples") {
  CHECK(std::abs(spectral_norm(mat({{3, 0}, {0, 1}})).value - 3.0) < 1e-12);
  CHECK(std::abs(spectral_norm(mat({{0, 2}, {0, 0}})).value - 2.0) < 1e-12);
  const auto zero = spectral_norm(Eigen::MatrixXd::Zero(3, 4));
  CHECK(zero.value == 0.0);
  CHECK(zero.converged);
}

TEST_CASE("spectral norm against the Jacobi oracle") {
  CounterRng rng(21, 0);
  for (int size : {4, 16}) {
    for (int i = 0; i < 20; ++i) {
      const Eigen::MatrixXd a = oracle::random_matrix(size, size + i % 3, rng);
      const double truth = oracle::jacobi_singular_values(a)(0);
      const auto est = spectral_norm(a);
      CHECK(est.converged);
      CHECK(std::abs(est.value - truth) <= 1e-9 * truth);
    }
  }
}

TEST_CASE("spectral norm on rank-deficient input") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(5, 5);
  a(0, 4) = 7.0;
  CHECK(std::abs(spectral_norm(a).value - 7.0) < 1e-12);
  const Eigen::MatrixXf f = a.cast<float>();
  CHECK(std::abs(spectral_norm(f).value - 7.0f) < 1e-5f);
}

TEST_CASE("two-one norm of the transpose") {
  CHECK(norm_2_1_of_transpose(mat({{3, 4}, {0, 0}})) == 5.0);
  CHECK(norm_2_1_of_transpose(Eigen::MatrixXd::Identity(6, 6)) == 6.0);
  CHECK(norm_2_1_of_transpose(Eigen::MatrixXd::Zero(3, 2)) == 0.0);
  CounterRng rng(22, 0);
  for (int i = 0; i < 50; ++i) {
    const Eigen::MatrixXd a = oracle::random_matrix(1 + i % 7, 1 + i % 5, rng);
    CHECK(spectral_norm(a).value <= norm_2_1_of_transpose(a) * (1 + 1e-12));
  }
}

TEST_CASE("spectral complexity") {
  NetworkParams id;
  id.layers = {Eigen::MatrixXd::Identity(2, 2)};
  id.activations = {Activation{ActivationKind::identity}};
  CHECK(std::abs(spectral_complexity(id) - 2.0) < 1e-12);

  CounterRng rng(23, 0);
  NetworkParams net = oracle::random_network({3, 6, 4, 2}, rng);
  const double base = spectral_complexity(net);
  CHECK(base > 0.0);
  for (double c : {0.5, 3.0}) {
    NetworkParams scaled = net;
    scaled.layers[1] *= c;
    CHECK(std::abs(spectral_complexity(scaled) - c * base) <= 1e-9 * c * base);
  }
  net.layers[2].setZero();
  CHECK(spectral_complexity(net) == 0.0);

  const LayerNorms norms = layer_norms(oracle::random_network({3, 6, 2}, rng));
  CHECK((norms.spectral.array() <= norms.two_one.array()).all());
  CHECK((norms.lipschitz.array() == 1.0).all());
}
