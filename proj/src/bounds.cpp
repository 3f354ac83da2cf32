#include "mixbound/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mixbound/error.hpp"
#include "mixbound/norms.hpp"
#include "mixbound/parallel.hpp"

namespace mixbound {

const char* to_string(RademacherSource source) {
  switch (source) {
    case RademacherSource::covering_bound: return "covering_bound";
    case RademacherSource::mc: return "mc";
    case RademacherSource::exact: return "exact";
  }
  return "covering_bound";
}

namespace {

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::BadDelta, "delta must lie in (0,1)");
}

double log_term(double delta, std::int64_t n) { return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n))); }

}  // namespace

double concentration_term(double delta_inf, double delta, std::int64_t n) {
  check_delta(delta);
  if (n < 1) throw Error(ErrorCode::Usage, "n must be positive");
  return 3.0 * delta_inf * log_term(delta, n);
}

double theorem1_bound(double empirical, double rademacher, const MixingProfile& profile, double delta,
                      std::int64_t n) {
  check_delta(delta);
  if (!(empirical >= 0.0 && empirical <= 1.0)) throw Error(ErrorCode::OutOfRange, "empirical loss outside [0,1]");
  if (!(rademacher >= 0.0)) throw Error(ErrorCode::OutOfRange, "rademacher term must be >= 0");
  if (profile.horizon != n) throw Error(ErrorCode::DimensionMismatch, "mixing profile horizon differs from n");
  return empirical + 2.0 * rademacher + profile.mu_mean() + concentration_term(profile.delta_inf, delta, n);
}

BoundReport network_certificate(const LabeledDataset& data, const NetworkParams& params, double gamma,
                                const MixingProfile& profile, double delta) {
  if (data.kind != DatasetKind::sequence) throw Error(ErrorCode::WrongKind, "certificate needs a training sequence");
  if (!(gamma > 0.0)) throw Error(ErrorCode::NonpositiveGamma, "gamma must be > 0");
  check_delta(delta);
  const std::int64_t n = data.size();
  if (profile.horizon != n) throw Error(ErrorCode::DimensionMismatch, "mixing profile horizon differs from n");
  if (n < 2) throw Error(ErrorCode::Usage, "certificate needs n >= 2");

  BoundReport r;
  r.n = n;
  r.gamma = gamma;
  r.delta = delta;
  r.seed = data.seed;
  r.empirical_ramp_loss = empirical_loss(params, data, gamma);
  r.empirical_zero_one = zero_one_loss(params, data);
  r.mu_mean = profile.mu_mean();
  r.delta_inf = profile.delta_inf;
  r.concentration_term = concentration_term(profile.delta_inf, delta, n);
  r.concentration_term_unsquared = 3.0 * std::sqrt(profile.delta_inf) * log_term(delta, n);
  r.phi_exact = profile.phi_exact;
  r.mu_exact = profile.mu_exact;

  const LayerNorms norms = layer_norms(params);
  r.input_norm = data.input_norm();
  r.max_width = static_cast<double>(params.max_width());
  r.spectral_complexity = spectral_complexity(norms);
  r.rademacher_source = RademacherSource::covering_bound;

  if (norms.any_zero_spectral()) {
    // The norm ball holds only the zero network: a single function.
    r.degenerate = true;
    r.rademacher_term = 0.0;
    r.small_term = 0.0;
    r.complexity_term = 0.0;
  } else {
    const auto nd = static_cast<double>(n);
    r.small_term = 8.0 / std::pow(nd, 1.5);
    r.complexity_term = 72.0 * r.input_norm * std::log(2.0 * r.max_width) * std::log(nd) / (gamma * nd) *
                        norms.ratio_aggregate() * norms.lipschitz_product();

    const CoveringTerms covering = covering_rademacher_terms(r.input_norm, gamma, r.max_width, n, norms);
    r.rademacher_term = covering.small + covering.complexity;
    const double twice = 2.0 * covering.small + 2.0 * covering.complexity;
    if (std::abs(twice - (r.small_term + r.complexity_term)) > 1e-12 * std::max(1.0, twice)) {
      throw std::logic_error("certificate complexity terms disagree with twice the covering bound");
    }
  }

  r.total_bound = r.empirical_ramp_loss + r.mu_mean + r.concentration_term + r.small_term + r.complexity_term;
  r.total_bound_unsquared =
      r.empirical_ramp_loss + r.mu_mean + r.concentration_term_unsquared + r.small_term + r.complexity_term;
  return r;
}

void attach_population(BoundReport& report, const NetworkParams& params, const LabeledDataset& target) {
  const PopulationEstimate est = population_estimate(params, target, report.gamma);
  report.population_ramp_estimate = est.ramp_loss;
  report.population_zero_one_estimate = est.zero_one_loss;
  report.population_halfwidth = est.halfwidth;
  report.bound_holds = report.total_bound >= est.zero_one_loss - est.halfwidth;
}

double mcdiarmid_tail_bound(double epsilon, std::int64_t n, double c, double delta_inf) {
  if (!(epsilon > 0.0) || !(c > 0.0)) throw Error(ErrorCode::Usage, "epsilon and c must be > 0");
  return 2.0 * std::exp(-2.0 * epsilon * epsilon / (static_cast<double>(n) * c * c * delta_inf * delta_inf));
}

std::size_t TailReport::violations() const {
  return static_cast<std::size_t>(std::count(violation.begin(), violation.end(), true));
}

TailReport validate_mcdiarmid(const ProcessSpec& spec, const PointFunction& f, std::int64_t n, std::int64_t trials,
                              std::uint64_t seed, const McDiarmidOptions& options) {
  if (trials < 10000) throw Error(ErrorCode::Usage, "McDiarmid validation needs at least 1e4 trials");
  if (n < 1) throw Error(ErrorCode::Usage, "n must be positive");
  spec.validate();

  TailReport report;
  report.n = n;
  report.trials = trials;
  report.delta_inf = options.delta_inf_override ? *options.delta_inf_override : mixing_profile(spec, n).delta_inf;

  std::vector<double> stats(static_cast<std::size_t>(trials));
  Eigen::VectorXd x(spec.input_dim);
  for (std::int64_t t = 0; t < trials; ++t) {
    SequenceSampler sampler(spec, CounterRng(seed, static_cast<std::uint64_t>(t)));
    double sum = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const int y = sampler.next(x);
      const double v = f(x, y);
      if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::OutOfRange, "statistic summand left [0,1]");
      sum += v;
    }
    stats[static_cast<std::size_t>(t)] = sum / static_cast<double>(n);
  }
  double mean = 0.0;
  for (double s : stats) mean += s;
  mean /= static_cast<double>(trials);
  report.mean_statistic = mean;

  const double c = 1.0 / static_cast<double>(n);
  for (double eps : options.epsilon_grid) {
    std::int64_t hits = 0;
    for (double s : stats) hits += std::abs(s - mean) >= eps ? 1 : 0;
    const double freq = static_cast<double>(hits) / static_cast<double>(trials);
    const double se = std::sqrt(freq * (1.0 - freq) / static_cast<double>(trials));
    const double bound = mcdiarmid_tail_bound(eps, n, c, report.delta_inf);
    report.epsilon.push_back(eps);
    report.empirical_tail.push_back(freq);
    report.std_error.push_back(se);
    report.analytic_bound.push_back(bound);
    report.violation.push_back(freq - 3.0 * se > bound);
  }
  return report;
}

Lemma3Report validate_lemma3(const ProcessSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& f_table,
                             std::int64_t n) {
  spec.validate();
  if (spec.emission.mode != EmissionMode::discrete) throw Error(ErrorCode::NotDiscrete, "marginal gap check needs discrete emissions");
  if (f_table.rows() != spec.emission.alphabet.rows() || f_table.cols() != spec.num_classes) {
    throw Error(ErrorCode::DimensionMismatch, "f table must be alphabet size x K");
  }
  if (!((f_table.array() >= 0.0).all() && (f_table.array() <= 1.0).all())) {
    throw Error(ErrorCode::OutOfRange, "f table entries must lie in [0,1]");
  }

  const MixingProfile profile = mixing_profile(spec, n);
  const Eigen::VectorXd stationary = stationary_distribution(spec.markov);
  const double target_mean = observation_law(spec, stationary, 0).cwiseProduct(f_table).sum();

  Lemma3Report report;
  report.gap.resize(n);
  report.mu = profile.mu;
  Eigen::VectorXd hidden = spec.markov.initial;
  double mean_of_means = 0.0;
  for (std::int64_t i = 1; i <= n; ++i) {
    hidden = spec.markov.transition.transpose() * hidden;
    const double expectation = observation_law(spec, hidden, i).cwiseProduct(f_table).sum();
    mean_of_means += expectation;
    report.gap(i - 1) = std::abs(expectation - target_mean);
  }
  mean_of_means /= static_cast<double>(n);
  report.mean_gap = std::abs(mean_of_means - target_mean);
  report.mu_mean = profile.mu_mean();
  report.max_slack_violation = std::max({0.0, (report.gap - report.mu).maxCoeff(), report.mean_gap - report.mu_mean});
  report.passed = report.max_slack_violation <= kLemma3Tolerance;
  return report;
}

Eigen::VectorXd expected_class_means(const FunctionClass& cls, const ProcessSpec& spec, std::int64_t n) {
  spec.validate();
  const auto size = static_cast<Eigen::Index>(cls.size());
  Eigen::VectorXd means = Eigen::VectorXd::Zero(size);
  if (spec.emission.mode == EmissionMode::discrete) {
    const Eigen::MatrixXd& alphabet = spec.emission.alphabet;
    // value(f)(a, y)
    std::vector<Eigen::MatrixXd> values(cls.size(), Eigen::MatrixXd(alphabet.rows(), spec.num_classes));
    for (std::size_t f = 0; f < cls.size(); ++f) {
      for (Eigen::Index a = 0; a < alphabet.rows(); ++a) {
        for (int y = 1; y <= spec.num_classes; ++y) values[f](a, y - 1) = cls.members[f](alphabet.row(a).transpose(), y);
      }
    }
    Eigen::VectorXd hidden = spec.markov.initial;
    for (std::int64_t i = 1; i <= n; ++i) {
      hidden = spec.markov.transition.transpose() * hidden;
      const Eigen::MatrixXd law = observation_law(spec, hidden, i);
      for (std::size_t f = 0; f < cls.size(); ++f) means(static_cast<Eigen::Index>(f)) += law.cwiseProduct(values[f]).sum();
    }
    return means / static_cast<double>(n);
  }

  // No closed form for gaussian emissions: average over independent draws.
  constexpr std::int64_t kDraws = 200000;
  const std::uint64_t key = substream_key(0xC1A55ULL, static_cast<std::uint64_t>(n));
  Eigen::VectorXd x(spec.input_dim);
  for (std::int64_t t = 0; t < kDraws; ++t) {
    SequenceSampler sampler(spec, CounterRng(key, static_cast<std::uint64_t>(t)));
    for (std::int64_t i = 0; i < n; ++i) {
      const int y = sampler.next(x);
      for (std::size_t f = 0; f < cls.size(); ++f) means(static_cast<Eigen::Index>(f)) += cls.members[f](x, y);
    }
  }
  return means / static_cast<double>(kDraws * n);
}

SymmetrizationReport validate_symmetrization(const FunctionClass& cls, const ProcessSpec& spec, std::int64_t n,
                                             std::int64_t trials, std::uint64_t seed) {
  if (trials < 1000) throw Error(ErrorCode::Usage, "symmetrization check needs at least 1e3 trials");
  if (n < 1) throw Error(ErrorCode::Usage, "n must be positive");
  if (cls.size() == 0) throw Error(ErrorCode::InvalidSpec, "function class is empty");

  const Eigen::VectorXd means = expected_class_means(cls, spec, n);
  const std::uint64_t sign_key = substream_key(seed, 0x51A7ULL);

  LabeledDataset sample;
  sample.inputs.resize(n, spec.input_dim);
  sample.labels.resize(static_cast<std::size_t>(n));
  sample.num_classes = spec.num_classes;
  Eigen::VectorXd x(spec.input_dim);
  Eigen::VectorXd signs(n);

  double lhs_sum = 0.0, lhs_sq = 0.0, rhs_sum = 0.0, rhs_sq = 0.0;
  for (std::int64_t t = 0; t < trials; ++t) {
    SequenceSampler sampler(spec, CounterRng(seed, static_cast<std::uint64_t>(t)));
    for (std::int64_t i = 0; i < n; ++i) {
      sample.labels[static_cast<std::size_t>(i)] = sampler.next(x);
      sample.inputs.row(i) = x.transpose();
    }
    const Eigen::MatrixXd values = cls.evaluate(sample);
    const double lhs = (values.rowwise().mean() - means).maxCoeff();

    CounterRng sign_rng(sign_key, static_cast<std::uint64_t>(t));
    for (Eigen::Index i = 0; i < n; ++i) signs(i) = sign_rng.sign();
    const double rhs = 2.0 * rademacher_sup(values, signs);

    lhs_sum += lhs;
    lhs_sq += lhs * lhs;
    rhs_sum += rhs;
    rhs_sq += rhs * rhs;
  }
  const auto count = static_cast<double>(trials);
  auto std_error = [count](double sum, double sq) {
    const double mean = sum / count;
    return std::sqrt(std::max(0.0, (sq - count * mean * mean) / (count - 1.0)) / count);
  };
  SymmetrizationReport report;
  report.trials = trials;
  report.lhs = lhs_sum / count;
  report.lhs_std_error = std_error(lhs_sum, lhs_sq);
  report.rhs = rhs_sum / count;
  report.rhs_std_error = std_error(rhs_sum, rhs_sq);
  report.violation = report.lhs - 3.0 * report.lhs_std_error > report.rhs + 3.0 * report.rhs_std_error;
  return report;
}

Lemma4Report validate_lemma4(std::int64_t samples, std::uint64_t seed) {
  Lemma4Report report;
  report.samples = samples;
  for (std::int64_t t = 0; t < samples; ++t) {
    CounterRng rng(seed, static_cast<std::uint64_t>(t));
    const int k = 2 + static_cast<int>(rng.below(5));
    Eigen::VectorXd v(k);
    // Small integer grids make exact ties common.
    const bool grid = rng.uniform() < 0.5;
    for (int i = 0; i < k; ++i) v(i) = grid ? static_cast<double>(rng.below(3)) - 1.0 : 3.0 * rng.normal();
    const int y = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    const double gamma = std::exp(rng.uniform(-5.0, 3.0));
    const double indicator = misclassified(v, y) ? 1.0 : 0.0;
    if (indicator > ramp_loss(-margin(v, y), gamma)) ++report.failures;
  }
  return report;
}

SeedRun train_for_seed(const CertificationPlan& plan, std::uint64_t seed) {
  SeedRun run;
  run.train_data = sample_sequence(plan.process, plan.n_train, seed);
  TrainConfig config = plan.train;
  config.seed = substream_key(seed, plan.train.seed);
  run.trained = train_sgd(run.train_data, plan.arch, config);
  return run;
}

std::vector<BoundReport> run_certification(const CertificationPlan& plan, int jobs) {
  if (plan.gamma_list.empty()) throw Error(ErrorCode::Usage, "gamma list is empty");
  const MixingProfile profile = mixing_profile(plan.process, plan.n_train);
  const std::size_t per_seed = plan.gamma_list.size();
  std::vector<BoundReport> reports(plan.seeds.size() * per_seed);

  parallel_for(plan.seeds.size(), jobs, [&](std::size_t s) {
    const std::uint64_t seed = plan.seeds[s];
    const SeedRun run = train_for_seed(plan, seed);
    const LabeledDataset target = sample_target(plan.process, plan.m_target, substream_key(seed, 4));
    for (std::size_t g = 0; g < per_seed; ++g) {
      BoundReport report = network_certificate(run.train_data, run.trained.params, plan.gamma_list[g], profile, plan.delta);
      attach_population(report, run.trained.params, target);
      reports[s * per_seed + g] = report;
    }
  });
  return reports;
}

}  // namespace mixbound
