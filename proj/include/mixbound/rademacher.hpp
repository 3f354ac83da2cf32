#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mixbound/dataset.hpp"
#include "mixbound/network.hpp"
#include "mixbound/norms.hpp"

namespace mixbound {

/// Real-valued function of a labelled point; members of a FunctionClass
/// must map into [0, 1].
using PointFunction = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&, int)>;

struct FunctionClass {
  std::string label;
  std::vector<PointFunction> members;

  std::size_t size() const { return members.size(); }

  /// |F| x n matrix of f(z_i). Throws OutOfRange if a value leaves [0, 1].
  Eigen::MatrixXd evaluate(const LabeledDataset& data) const;
};

/// Ramp-loss evaluators (x, y) -> l_gamma(-M(F(x), y)) of a finite set of networks.
FunctionClass loss_class(std::vector<NetworkParams> networks, double gamma, std::string label = "ramp_loss");

enum class RademacherMethod { exact, monte_carlo };
const char* to_string(RademacherMethod method);

struct RademacherEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t trials = 0;
  RademacherMethod method = RademacherMethod::exact;
};

inline constexpr int kMaxExactPoints = 20;
inline constexpr std::int64_t kMinMonteCarloTrials = 100;

/// (1 / 2^n) sum over all sign vectors of max_f (1/n) sum_i theta_i f(z_i).
/// `values` is |F| x n. Throws TooLarge for n > 20.
RademacherEstimate rademacher_exact(const Eigen::Ref<const Eigen::MatrixXd>& values);
RademacherEstimate empirical_rademacher_exact(const FunctionClass& cls, const LabeledDataset& data);

/// Monte Carlo over seeded sign draws; the signs of trial t depend only on
/// (seed, t).
RademacherEstimate rademacher_mc(const Eigen::Ref<const Eigen::MatrixXd>& values, std::int64_t trials,
                                 std::uint64_t seed);
RademacherEstimate empirical_rademacher_mc(const FunctionClass& cls, const LabeledDataset& data,
                                           std::int64_t trials, std::uint64_t seed);

/// sup_f (1/n) sum_i theta_i f(z_i) for one sign vector.
double rademacher_sup(const Eigen::Ref<const Eigen::MatrixXd>& values, const Eigen::Ref<const Eigen::VectorXd>& signs);

/// Covering-number bound on the empirical Rademacher complexity of the
/// ramp-loss network class:
///   4 / n^(3/2) + 36 B ln(2W) ln(n) / (gamma n) * (sum (b_i/s_i)^(2/3))^(3/2) * prod s_i p_i.
double covering_rademacher_bound(double input_norm, double gamma, double max_width, std::int64_t n,
                                 const LayerNorms& norms);

/// The two summands of covering_rademacher_bound.
struct CoveringTerms {
  double small = 0.0;
  double complexity = 0.0;
};
CoveringTerms covering_rademacher_terms(double input_norm, double gamma, double max_width, std::int64_t n,
                                        const LayerNorms& norms);

}  // namespace mixbound
