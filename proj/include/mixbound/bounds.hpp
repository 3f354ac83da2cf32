#pragma once

// Certificate assembly and Monte Carlo / exact validators for the inequalities the
// certificates rest on.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mixbound/dataset.hpp"
#include "mixbound/network.hpp"
#include "mixbound/process.hpp"
#include "mixbound/rademacher.hpp"

namespace mixbound {

enum class RademacherSource { covering_bound, mc, exact };
const char* to_string(RademacherSource source);

struct BoundReport {
  std::int64_t n = 0;
  double gamma = 0.0;
  double delta = 0.0;
  std::uint64_t seed = 0;
  double empirical_ramp_loss = 0.0;
  double empirical_zero_one = 0.0;
  double rademacher_term = 0.0;
  RademacherSource rademacher_source = RademacherSource::covering_bound;
  double mu_mean = 0.0;
  double delta_inf = 1.0;
  double concentration_term = 0.0;
  double small_term = 0.0;
  double complexity_term = 0.0;
  double total_bound = 0.0;

  // Same certificate with ||Delta_n||^2 read as 1 + 2 sum phi (no squaring).
  double concentration_term_unsquared = 0.0;
  double total_bound_unsquared = 0.0;

  double input_norm = 0.0;        // B
  double max_width = 0.0;         // W
  double spectral_complexity = 0.0;
  bool degenerate = false;        // some layer has zero spectral norm

  double population_ramp_estimate = 0.0;
  double population_zero_one_estimate = 0.0;
  double population_halfwidth = 0.0;
  bool bound_holds = false;

  bool phi_exact = true;
  bool mu_exact = true;

  /// Sum of the additive terms; equals total_bound.
  double recomposed_total() const {
    return empirical_ramp_loss + mu_mean + concentration_term + small_term + complexity_term;
  }
};

/// 3 * ||Delta_n|| * sqrt(ln(2 / delta) / (2 n)).
double concentration_term(double delta_inf, double delta, std::int64_t n);

/// empirical + 2 R + mean(mu) + 3 ||Delta_n|| sqrt(ln(2 / delta) / (2 n)).
double theorem1_bound(double empirical, double rademacher, const MixingProfile& profile, double delta,
                      std::int64_t n);

/// Per-configuration network certificate using the observed layer norms as
/// the norm radii s_i, b_i and B = sqrt(sum ||x_i||^2).
BoundReport network_certificate(const LabeledDataset& data, const NetworkParams& params, double gamma,
                                const MixingProfile& profile, double delta);

/// Fills the population fields and bound_holds from an iid target sample.
void attach_population(BoundReport& report, const NetworkParams& params, const LabeledDataset& target);

/// 2 exp(-2 eps^2 / (n c^2 delta_inf^2)).
double mcdiarmid_tail_bound(double epsilon, std::int64_t n, double c, double delta_inf);

inline const std::vector<double> kDefaultEpsilonGrid{0.02, 0.05, 0.1, 0.2, 0.3};

struct TailReport {
  std::int64_t n = 0;
  std::int64_t trials = 0;
  double delta_inf = 1.0;
  double mean_statistic = 0.0;
  std::vector<double> epsilon;
  std::vector<double> empirical_tail;
  std::vector<double> std_error;
  std::vector<double> analytic_bound;
  std::vector<bool> violation;

  std::size_t violations() const;
};

struct McDiarmidOptions {
  std::vector<double> epsilon_grid = kDefaultEpsilonGrid;
  /// Replaces the computed ||Delta_n|| (negative controls).
  std::optional<double> delta_inf_override;
};

/// Simulates `trials` independent sequences, evaluates (1/n) sum f(Z_i) and
/// compares its tail frequencies with mcdiarmid_tail_bound(eps, n, 1/n, ||Delta_n||).
TailReport validate_mcdiarmid(const ProcessSpec& spec, const PointFunction& f, std::int64_t n,
                              std::int64_t trials, std::uint64_t seed, const McDiarmidOptions& options = {});

struct Lemma3Report {
  Eigen::VectorXd gap;  // |E f(Z_i) - E_Pi f|
  Eigen::VectorXd mu;
  double mean_gap = 0.0;  // |E (1/n) sum f(Z_i) - E_Pi f|
  double mu_mean = 0.0;
  double max_slack_violation = 0.0;  // max(gap - mu, 0) over i and the mean
  bool passed = true;
};

inline constexpr double kLemma3Tolerance = 1e-12;

/// Exact check of |E f(Z_i) - E_Pi f| <= mu_i for a table f (alphabet size x K,
/// entries in [0,1]) on a discrete spec.
Lemma3Report validate_lemma3(const ProcessSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& f_table,
                             std::int64_t n);

struct SymmetrizationReport {
  double lhs = 0.0;
  double lhs_std_error = 0.0;
  double rhs = 0.0;  // 2 R_n(F)
  double rhs_std_error = 0.0;
  std::int64_t trials = 0;
  bool violation = false;
};

/// Estimates E sup_f [(1/n) sum f(Z_i) - E (1/n) sum f(Z'_i)] and 2 R_n(F)
/// over independent sequence draws.
SymmetrizationReport validate_symmetrization(const FunctionClass& cls, const ProcessSpec& spec, std::int64_t n,
                                             std::int64_t trials, std::uint64_t seed);

/// E (1/n) sum_i f(Z_i) for each member of the class, exact on discrete specs.
Eigen::VectorXd expected_class_means(const FunctionClass& cls, const ProcessSpec& spec, std::int64_t n);

struct Lemma4Report {
  std::int64_t samples = 0;
  std::int64_t failures = 0;
};

/// indicator(argmax v != y) <= l_gamma(-M(v, y)) on random triples.
Lemma4Report validate_lemma4(std::int64_t samples, std::uint64_t seed);

struct CertificationPlan {
  ProcessSpec process;
  Architecture arch;
  TrainConfig train;
  std::int64_t n_train = 0;
  std::int64_t m_target = 0;
  std::vector<double> gamma_list;
  double delta = 0.05;
  std::vector<std::uint64_t> seeds;
};

struct SeedRun {
  LabeledDataset train_data;
  TrainResult trained;
};

/// Samples the training sequence and trains the network for one seed.
SeedRun train_for_seed(const CertificationPlan& plan, std::uint64_t seed);

/// sample -> train -> mixing profile -> certificate -> population estimate for
/// every seed x gamma, ordered seed-major. `jobs` threads split the seeds;
/// results do not depend on it.
std::vector<BoundReport> run_certification(const CertificationPlan& plan, int jobs = 1);

}  // namespace mixbound
