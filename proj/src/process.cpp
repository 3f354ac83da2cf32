#include "mixbound/process.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>

#include <Eigen/LU>

#include "mixbound/io.hpp"

namespace mixbound {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidSpec, what);
}

void check_probability_vector(const Eigen::Ref<const Eigen::RowVectorXd>& row, const std::string& name) {
  require(row.allFinite(), name + " has non-finite entries");
  require((row.array() >= 0.0).all() && (row.array() <= 1.0).all(), name + " has entries outside [0,1]");
  require(std::abs(row.sum() - 1.0) <= kProbabilityTolerance, name + " does not sum to 1");
}

void check_stochastic_rows(const Eigen::MatrixXd& m, const std::string& name) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    check_probability_vector(m.row(r), name + " row " + std::to_string(r));
  }
}

// Evolves a hidden-state law one step: p <- p P.
Eigen::VectorXd step(const Eigen::MatrixXd& transition, const Eigen::VectorXd& p) {
  return transition.transpose() * p;
}

// pi_0 P^t for t = 0..last.
std::vector<Eigen::VectorXd> marginal_path(const ProcessSpec& spec, std::int64_t last) {
  std::vector<Eigen::VectorXd> path;
  path.reserve(static_cast<std::size_t>(last + 1));
  path.push_back(spec.markov.initial);
  for (std::int64_t t = 1; t <= last; ++t) path.push_back(step(spec.markov.transition, path.back()));
  return path;
}

// max_b TV(delta_b P^k, target) over b with support(b) > 0.
double worst_row_tv(const Eigen::MatrixXd& k_step, const Eigen::VectorXd& support, const Eigen::VectorXd& target) {
  double worst = 0.0;
  for (Eigen::Index b = 0; b < k_step.rows(); ++b) {
    if (support(b) <= 0.0) continue;
    worst = std::max(worst, tv_distance(k_step.row(b).transpose(), target));
  }
  return worst;
}

double phi_from_path(const Eigen::MatrixXd& k_step, const std::vector<Eigen::VectorXd>& path, std::int64_t k,
                     std::int64_t horizon, const Eigen::VectorXd* stationary) {
  double worst = 0.0;
  for (std::int64_t n = 0; n <= horizon; ++n) {
    worst = std::max(worst, worst_row_tv(k_step, path[static_cast<std::size_t>(n)],
                                         path[static_cast<std::size_t>(n + k)]));
  }
  if (stationary != nullptr) worst = std::max(worst, worst_row_tv(k_step, *stationary, *stationary));
  return std::min(worst, 1.0);
}

double mu_from_marginal(const ProcessSpec& spec, const Eigen::VectorXd& hidden, std::int64_t i,
                        const Eigen::VectorXd& stationary) {
  if (spec.emission.mode == EmissionMode::discrete) {
    const Eigen::MatrixXd now = observation_law(spec, hidden, i);
    const Eigen::MatrixXd limit = observation_law(spec, stationary, 0);
    return std::min(0.5 * (now - limit).cwiseAbs().sum(), 1.0);
  }
  const double w = spec.emission.drift.weight(i);
  double emission_gap = 0.0;
  if (w > 0.0) {
    const Eigen::VectorXd shift = (spec.emission.perturbation_means - spec.emission.means).rowwise().norm();
    emission_gap = gaussian_shift_tv(w * shift.maxCoeff(), spec.emission.sigma);
  }
  return std::min(tv_distance(hidden, stationary) + emission_gap, 1.0);
}

}  // namespace

void MarkovSpec::validate() const {
  require(num_states >= 1, "num_states must be positive");
  require(transition.rows() == num_states && transition.cols() == num_states, "transition must be S x S");
  require(initial.size() == num_states, "initial must have length S");
  check_stochastic_rows(transition, "transition");
  check_probability_vector(initial.transpose(), "initial");
}

void ProcessSpec::validate() const {
  markov.validate();
  const int s = markov.num_states;
  require(input_dim >= 1, "input_dim must be positive");
  require(num_classes >= 1, "num_classes must be positive");
  require(static_cast<int>(label_map.size()) == s, "label_map must have one entry per state");
  for (int label : label_map) require(label >= 1 && label <= num_classes, "label_map entries must lie in 1..K");

  const DriftSchedule& drift = emission.drift;
  require(std::isfinite(drift.amplitude) && drift.amplitude >= 0.0, "drift amplitude must be >= 0");
  require(std::isfinite(drift.exponent) && drift.exponent > 0.0, "drift exponent must be > 0");
  // c t^-alpha is largest at t = 1
  require(drift.amplitude <= 1.0, "drift weight c * t^-alpha must stay in [0,1]");

  if (emission.mode == EmissionMode::discrete) {
    const auto& e = emission;
    require(e.alphabet.rows() >= 1 && e.alphabet.cols() == input_dim, "alphabet must be A x input_dim");
    require(e.alphabet.allFinite(), "alphabet has non-finite entries");
    for (Eigen::Index a = 0; a < e.alphabet.rows(); ++a) {
      for (Eigen::Index b = a + 1; b < e.alphabet.rows(); ++b) {
        require(e.alphabet.row(a) != e.alphabet.row(b), "alphabet points must be distinct");
      }
    }
    require(e.table.rows() == s && e.table.cols() == e.alphabet.rows(), "table must be S x A");
    require(e.perturbation.rows() == s && e.perturbation.cols() == e.alphabet.rows(), "perturbation must be S x A");
    check_stochastic_rows(e.table, "table");
    check_stochastic_rows(e.perturbation, "perturbation");
  } else {
    const auto& e = emission;
    require(e.means.rows() == s && e.means.cols() == input_dim, "means must be S x input_dim");
    require(e.perturbation_means.rows() == s && e.perturbation_means.cols() == input_dim,
            "perturbation_means must be S x input_dim");
    require(e.means.allFinite() && e.perturbation_means.allFinite(), "means have non-finite entries");
    require(std::isfinite(e.sigma) && e.sigma > 0.0, "sigma must be > 0");
  }
}

bool ProcessSpec::has_drift() const {
  if (emission.drift.amplitude == 0.0) return false;
  if (emission.mode == EmissionMode::discrete) return emission.perturbation != emission.table;
  return emission.perturbation_means != emission.means;
}

bool ProcessSpec::deterministic_emission() const {
  if (emission.mode != EmissionMode::discrete || has_drift()) return false;
  for (Eigen::Index s = 0; s < emission.table.rows(); ++s) {
    if (emission.table.row(s).maxCoeff() != 1.0) return false;
  }
  return true;
}

bool ProcessSpec::injective_observation() const {
  if (!deterministic_emission()) return false;
  std::set<std::pair<Eigen::Index, int>> seen;
  for (Eigen::Index s = 0; s < emission.table.rows(); ++s) {
    Eigen::Index atom = 0;
    emission.table.row(s).maxCoeff(&atom);
    if (!seen.emplace(atom, label_of(s)).second) return false;
  }
  return true;
}

Eigen::MatrixXd emission_table_at(const ProcessSpec& spec, std::int64_t t) {
  const double w = spec.emission.drift.weight(t);
  if (w == 0.0) return spec.emission.table;
  return (1.0 - w) * spec.emission.table + w * spec.emission.perturbation;
}

Eigen::MatrixXd emission_means_at(const ProcessSpec& spec, std::int64_t t) {
  const double w = spec.emission.drift.weight(t);
  if (w == 0.0) return spec.emission.means;
  return (1.0 - w) * spec.emission.means + w * spec.emission.perturbation_means;
}

Eigen::MatrixXd observation_law(const ProcessSpec& spec, const Eigen::VectorXd& hidden, std::int64_t t) {
  if (spec.emission.mode != EmissionMode::discrete) {
    throw Error(ErrorCode::NotDiscrete, "observation law needs discrete emissions");
  }
  const Eigen::MatrixXd table = t > 0 ? emission_table_at(spec, t) : spec.emission.table;
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(table.cols(), spec.num_classes);
  for (Eigen::Index s = 0; s < hidden.size(); ++s) {
    joint.col(spec.label_of(s) - 1) += hidden(s) * table.row(s).transpose();
  }
  return joint;
}

bool is_primitive(const Eigen::MatrixXd& transition) {
  const Eigen::Index s = transition.rows();
  const Eigen::MatrixXi pattern = (transition.array() > 0.0).cast<int>();
  Eigen::MatrixXi power = pattern;
  for (Eigen::Index m = 1; m <= s * s; ++m) {
    if ((power.array() > 0).all()) return true;
    power = ((power * pattern).array() > 0).cast<int>();
  }
  return false;
}

Eigen::VectorXd stationary_distribution(const MarkovSpec& markov) {
  markov.validate();
  if (!is_primitive(markov.transition)) {
    throw Error(ErrorCode::NonUniqueStationary, "no power P^m with m <= S^2 is entrywise positive");
  }
  const Eigen::Index s = markov.num_states;
  // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
  Eigen::MatrixXd system = markov.transition.transpose() - Eigen::MatrixXd::Identity(s, s);
  system.row(s - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s);
  rhs(s - 1) = 1.0;
  Eigen::VectorXd pi = system.fullPivLu().solve(rhs);
  pi = pi.cwiseMax(0.0);
  return pi / pi.sum();
}

Eigen::VectorXd marginal_at(const ProcessSpec& spec, std::int64_t t) {
  Eigen::VectorXd p = spec.markov.initial;
  for (std::int64_t i = 0; i < t; ++i) p = step(spec.markov.transition, p);
  return p;
}

double phi_coefficient(const ProcessSpec& spec, std::int64_t k, std::int64_t horizon, bool include_limit) {
  if (k < 1 || horizon < 0) throw Error(ErrorCode::InvalidSpec, "phi_coefficient needs k >= 1, horizon >= 0");
  spec.markov.validate();
  const Eigen::MatrixXd& p = spec.markov.transition;
  Eigen::MatrixXd k_step = p;
  for (std::int64_t i = 1; i < k; ++i) k_step = k_step * p;

  const auto path = marginal_path(spec, horizon + k);
  std::optional<Eigen::VectorXd> stationary;
  if (include_limit && is_primitive(p)) stationary = stationary_distribution(spec.markov);
  return phi_from_path(k_step, path, k, horizon, stationary ? &*stationary : nullptr);
}

double brute_force_phi(const ProcessSpec& spec, int k, int n_max, int future_len, std::uint64_t budget) {
  spec.validate();
  const int s = spec.num_states();
  if (k < 1 || n_max < 0 || future_len < 1) throw Error(ErrorCode::InvalidSpec, "brute_force_phi arguments");
  if (s > 3 || n_max > 4 || future_len > 3) {
    throw Error(ErrorCode::TooLarge, "brute_force_phi is limited to S <= 3, n_max <= 4, future_len <= 3");
  }
  if (!spec.deterministic_emission()) {
    throw Error(ErrorCode::NotDiscrete, "brute_force_phi needs deterministic discrete emissions");
  }

  auto ipow = [](std::uint64_t base, int e) {
    std::uint64_t r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
  };
  const std::uint64_t atoms = ipow(static_cast<std::uint64_t>(s), future_len);
  if (atoms >= 63) throw Error(ErrorCode::TooLarge, "too many future trajectories to enumerate subsets");
  std::uint64_t cost = 0;
  for (int n = 0; n <= n_max; ++n) {
    cost += ipow(s, n + k + future_len) * static_cast<std::uint64_t>(n + k + future_len);
    cost += ipow(s, n + 1) * (std::uint64_t{1} << atoms);
  }
  if (cost > budget) throw Error(ErrorCode::TooLarge, "enumeration exceeds the configured budget");

  const Eigen::MatrixXd& p = spec.markov.transition;
  const Eigen::VectorXd& init = spec.markov.initial;
  double worst = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    const int length = n + k + future_len;  // times 0..length-1
    const std::uint64_t pasts = ipow(s, n + 1);
    Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pasts), static_cast<Eigen::Index>(atoms));
    std::vector<int> digits(static_cast<std::size_t>(length));
    const std::uint64_t paths = ipow(s, length);
    for (std::uint64_t code = 0; code < paths; ++code) {
      std::uint64_t rest = code;
      for (int t = 0; t < length; ++t) {
        digits[static_cast<std::size_t>(t)] = static_cast<int>(rest % s);
        rest /= s;
      }
      double prob = init(digits[0]);
      for (int t = 1; t < length && prob > 0.0; ++t) prob *= p(digits[t - 1], digits[t]);
      if (prob == 0.0) continue;
      std::uint64_t past = 0;
      for (int t = n; t >= 0; --t) past = past * s + digits[t];
      std::uint64_t future = 0;
      for (int t = length - 1; t >= n + k; --t) future = future * s + digits[t];
      joint(static_cast<Eigen::Index>(past), static_cast<Eigen::Index>(future)) += prob;
    }

    const Eigen::RowVectorXd future_law = joint.colwise().sum();
    const Eigen::VectorXd past_law = joint.rowwise().sum();
    for (Eigen::Index b = 0; b < joint.rows(); ++b) {
      if (past_law(b) <= 0.0) continue;
      const Eigen::RowVectorXd diff = joint.row(b) / past_law(b) - future_law;
      // Every subset A of future atoms, visited in Gray-code order.
      double sum = 0.0;
      std::uint64_t gray = 0;
      for (std::uint64_t i = 1; i < (std::uint64_t{1} << atoms); ++i) {
        const int bit = std::countr_zero(i);
        const std::uint64_t mask = std::uint64_t{1} << bit;
        sum += (gray & mask) ? -diff(bit) : diff(bit);
        gray ^= mask;
        worst = std::max(worst, std::abs(sum));
      }
    }
  }
  return worst;
}

double gaussian_shift_tv(double shift_norm, double sigma) {
  return std::erf(std::abs(shift_norm) / (2.0 * std::sqrt(2.0) * sigma));
}

double mu_at(const ProcessSpec& spec, std::int64_t i) {
  if (i < 1) throw Error(ErrorCode::InvalidSpec, "mu_at needs i >= 1");
  spec.validate();
  const Eigen::VectorXd stationary = stationary_distribution(spec.markov);
  return mu_from_marginal(spec, marginal_at(spec, i), i, stationary);
}

bool phi_is_exact(const ProcessSpec& spec) { return spec.injective_observation(); }

bool mu_is_exact(const ProcessSpec& spec) { return spec.emission.mode == EmissionMode::discrete; }

MixingProfile MixingProfile::iid(std::int64_t n) {
  MixingProfile profile;
  profile.horizon = n;
  profile.phi = Eigen::VectorXd::Zero(n);
  profile.mu = Eigen::VectorXd::Zero(n);
  profile.delta_inf = 1.0;
  return profile;
}

MixingProfile mixing_profile(const ProcessSpec& spec, std::int64_t n) {
  if (n < 1) throw Error(ErrorCode::InvalidSpec, "mixing_profile needs n >= 1");
  spec.validate();
  const Eigen::VectorXd stationary = stationary_distribution(spec.markov);
  const auto path = marginal_path(spec, 2 * n);
  const Eigen::MatrixXd& p = spec.markov.transition;

  MixingProfile profile;
  profile.horizon = n;
  profile.phi.resize(n);
  profile.mu.resize(n);
  Eigen::MatrixXd k_step = p;
  for (std::int64_t k = 1; k <= n; ++k) {
    double phi = phi_from_path(k_step, path, k, n, &stationary);
    // nonincreasing in exact arithmetic; drop rounding noise
    if (k > 1) phi = std::min(phi, profile.phi(k - 2));
    profile.phi(k - 1) = phi;
    k_step = k_step * p;
  }
  for (std::int64_t i = 1; i <= n; ++i) {
    profile.mu(i - 1) = mu_from_marginal(spec, path[static_cast<std::size_t>(i)], i, stationary);
  }
  profile.delta_inf = 1.0 + 2.0 * profile.phi.sum();
  profile.phi_exact = phi_is_exact(spec);
  profile.mu_exact = mu_is_exact(spec);
  return profile;
}

SequenceSampler::SequenceSampler(const ProcessSpec& spec, CounterRng rng) : spec_(&spec), rng_(rng) {
  state_ = rng_.categorical(spec.markov.initial);
}

void SequenceSampler::emit(Eigen::Ref<Eigen::VectorXd> x) {
  const EmissionSpec& e = spec_->emission;
  const double w = e.drift.weight(time_);
  if (e.mode == EmissionMode::discrete) {
    Eigen::Index atom;
    if (w == 0.0) {
      atom = rng_.categorical(e.table.row(state_));
    } else {
      emission_row_ = (1.0 - w) * e.table.row(state_).transpose() + w * e.perturbation.row(state_).transpose();
      atom = rng_.categorical(emission_row_);
    }
    x = e.alphabet.row(atom).transpose();
    return;
  }
  if (w == 0.0) {
    x = e.means.row(state_).transpose();
  } else {
    x = (1.0 - w) * e.means.row(state_).transpose() + w * e.perturbation_means.row(state_).transpose();
  }
  for (Eigen::Index j = 0; j < x.size(); ++j) x(j) += e.sigma * rng_.normal();
}

int SequenceSampler::next(Eigen::Ref<Eigen::VectorXd> x) {
  ++time_;
  state_ = rng_.categorical(spec_->markov.transition.row(state_));
  emit(x);
  return spec_->label_of(state_);
}

LabeledDataset sample_sequence(const ProcessSpec& spec, std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::Usage, "sample_sequence needs n >= 1");
  spec.validate();
  LabeledDataset data;
  data.inputs.resize(n, spec.input_dim);
  data.labels.resize(static_cast<std::size_t>(n));
  data.num_classes = spec.num_classes;
  data.seed = seed;
  data.spec_digest = spec_digest(spec);
  data.kind = DatasetKind::sequence;

  SequenceSampler sampler(spec, CounterRng(seed, 1));
  Eigen::VectorXd x(spec.input_dim);
  for (std::int64_t i = 0; i < n; ++i) {
    data.labels[static_cast<std::size_t>(i)] = sampler.next(x);
    data.inputs.row(i) = x.transpose();
  }
  return data;
}

LabeledDataset sample_target(const ProcessSpec& spec, std::int64_t m, std::uint64_t seed) {
  if (m < 0) throw Error(ErrorCode::Usage, "sample_target needs m >= 0");
  spec.validate();
  const Eigen::VectorXd stationary = stationary_distribution(spec.markov);

  LabeledDataset data;
  data.inputs.resize(m, spec.input_dim);
  data.labels.resize(static_cast<std::size_t>(m));
  data.num_classes = spec.num_classes;
  data.seed = seed;
  data.spec_digest = spec_digest(spec);
  data.kind = DatasetKind::target_iid;

  CounterRng rng(seed, 2);
  const EmissionSpec& e = spec.emission;
  for (std::int64_t i = 0; i < m; ++i) {
    const Eigen::Index s = rng.categorical(stationary);
    if (e.mode == EmissionMode::discrete) {
      data.inputs.row(i) = e.alphabet.row(rng.categorical(e.table.row(s)));
    } else {
      data.inputs.row(i) = e.means.row(s);
      for (Eigen::Index j = 0; j < spec.input_dim; ++j) data.inputs(i, j) += e.sigma * rng.normal();
    }
    data.labels[static_cast<std::size_t>(i)] = spec.label_of(s);
  }
  return data;
}

}  // namespace mixbound
