#pragma once

// Finite hidden Markov processes with drifting emissions: simulation and exact
// (or certified upper-bound) mixing quantities.

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "mixbound/dataset.hpp"
#include "mixbound/error.hpp"
#include "mixbound/random.hpp"

namespace mixbound {

/// Absolute tolerance for stochasticity and normalization checks.
inline constexpr double kProbabilityTolerance = 1e-12;

struct MarkovSpec {
  int num_states = 0;
  Eigen::MatrixXd transition;  // row-stochastic, num_states x num_states
  Eigen::VectorXd initial;     // pi_0

  void validate() const;
};

enum class EmissionMode { discrete, gaussian };

/// Weight c * t^(-alpha) given to the perturbation at time t >= 1.
struct DriftSchedule {
  double amplitude = 0.0;
  double exponent = 0.5;

  double weight(std::int64_t t) const {
    if (amplitude == 0.0) return 0.0;
    return amplitude * std::pow(static_cast<double>(t), -exponent);
  }
};

struct EmissionSpec {
  EmissionMode mode = EmissionMode::discrete;

  // discrete: alphabet rows are points in R^d; table / perturbation are
  // per-state probability vectors over the alphabet (num_states x A).
  Eigen::MatrixXd alphabet;
  Eigen::MatrixXd table;
  Eigen::MatrixXd perturbation;

  // gaussian: per-state means (num_states x d), shared isotropic sigma.
  Eigen::MatrixXd means;
  Eigen::MatrixXd perturbation_means;
  double sigma = 1.0;

  DriftSchedule drift;
};

struct ProcessSpec {
  MarkovSpec markov;
  EmissionSpec emission;
  std::vector<int> label_map;  // state -> class label in 1..num_classes
  int num_classes = 2;
  int input_dim = 1;

  /// Throws Error(InvalidSpec) on any violated invariant.
  void validate() const;

  int num_states() const { return markov.num_states; }
  int label_of(Eigen::Index state) const { return label_map[static_cast<std::size_t>(state)]; }

  bool has_drift() const;
  /// Every per-time emission row is a point mass.
  bool deterministic_emission() const;
  /// Deterministic emissions whose (point, label) pairs are distinct across
  /// states, so the observed process is a relabelling of the hidden chain.
  bool injective_observation() const;
};

/// Emission table E_t (num_states x A) for discrete specs.
Eigen::MatrixXd emission_table_at(const ProcessSpec& spec, std::int64_t t);
/// Emission means at time t (num_states x d) for gaussian specs.
Eigen::MatrixXd emission_means_at(const ProcessSpec& spec, std::int64_t t);

/// Joint law of (alphabet index, label) at time t given the hidden-state law;
/// alphabet size x K, discrete specs only. t = 0 selects the limit table E_inf.
Eigen::MatrixXd observation_law(const ProcessSpec& spec, const Eigen::VectorXd& hidden, std::int64_t t);

/// Unique stationary distribution; requires some power P^m, m <= S^2, to be
/// entrywise positive. Throws NonUniqueStationary otherwise.
Eigen::VectorXd stationary_distribution(const MarkovSpec& markov);

/// True when some P^m with m <= S^2 is entrywise positive.
bool is_primitive(const Eigen::MatrixXd& transition);

/// Law of the hidden state at time t: pi_0 P^t.
Eigen::VectorXd marginal_at(const ProcessSpec& spec, std::int64_t t);

template <typename DerivedP, typename DerivedQ>
double tv_distance(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q) {
  if (p.size() != q.size()) {
    throw Error(ErrorCode::DimensionMismatch, "tv_distance: vectors differ in length");
  }
  return 0.5 * (p.derived().template cast<double>() - q.derived().template cast<double>())
                   .cwiseAbs()
                   .sum();
}

/// phi(k) of the hidden chain: max over n in [0, horizon] and reachable states
/// b of TV(delta_b P^k, pi_0 P^(n+k)); with `include_limit` the stationary
/// limit point is tested as well. Exact for injective deterministic
/// observations, an upper bound for the observed process otherwise.
double phi_coefficient(const ProcessSpec& spec, std::int64_t k, std::int64_t horizon,
                       bool include_limit = true);

/// Default operation budget for brute_force_phi.
inline constexpr std::uint64_t kBruteForceBudget = 200'000'000ULL;

/// Literal evaluation of sup |P[A|B] - P[A]| over past cylinder events
/// B in sigma(Z_0..Z_n), n <= n_max, and every subset A of future
/// trajectories of length future_len starting at time n + k. Requires a tiny
/// spec with deterministic discrete emissions.
double brute_force_phi(const ProcessSpec& spec, int k, int n_max, int future_len,
                       std::uint64_t budget = kBruteForceBudget);

/// TV between the law of (X_i, Y_i) and the target law Pi. Exact for
/// discrete emissions; an upper bound for gaussian emissions.
double mu_at(const ProcessSpec& spec, std::int64_t i);

/// Gaussian mean-shift total variation, erf(|shift| / (2 sqrt(2) sigma)).
double gaussian_shift_tv(double shift_norm, double sigma);

bool phi_is_exact(const ProcessSpec& spec);
bool mu_is_exact(const ProcessSpec& spec);

struct MixingProfile {
  std::int64_t horizon = 0;
  Eigen::VectorXd phi;  // phi[k-1] = phi(k)
  Eigen::VectorXd mu;   // mu[i-1] = mu_i
  double delta_inf = 1.0;
  bool phi_exact = true;
  bool mu_exact = true;

  double mu_mean() const { return horizon > 0 ? mu.sum() / static_cast<double>(horizon) : 0.0; }

  /// All-zero profile of an iid sample drawn from the target law.
  static MixingProfile iid(std::int64_t n);
};

MixingProfile mixing_profile(const ProcessSpec& spec, std::int64_t n);

/// Streams (X_i, Y_i) for i = 1, 2, ... from one seeded substream.
class SequenceSampler {
 public:
  SequenceSampler(const ProcessSpec& spec, CounterRng rng);

  /// Advances one step; writes X_i into `x` and returns Y_i.
  int next(Eigen::Ref<Eigen::VectorXd> x);

  Eigen::Index state() const { return state_; }
  std::int64_t time() const { return time_; }

 private:
  void emit(Eigen::Ref<Eigen::VectorXd> x);

  const ProcessSpec* spec_;
  CounterRng rng_;
  Eigen::Index state_ = 0;
  std::int64_t time_ = 0;
  Eigen::VectorXd emission_row_;
};

LabeledDataset sample_sequence(const ProcessSpec& spec, std::int64_t n, std::uint64_t seed);
LabeledDataset sample_target(const ProcessSpec& spec, std::int64_t m, std::uint64_t seed);

}  // namespace mixbound
