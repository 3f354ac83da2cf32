#include "mixbound/rademacher.hpp"

#include <cmath>
#include <utility>

#include "mixbound/error.hpp"
#include "mixbound/random.hpp"

namespace mixbound {

Eigen::MatrixXd FunctionClass::evaluate(const LabeledDataset& data) const {
  Eigen::MatrixXd values(static_cast<Eigen::Index>(members.size()), data.size());
  for (std::size_t f = 0; f < members.size(); ++f) {
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      const double v = members[f](data.inputs.row(i).transpose(), data.labels[static_cast<std::size_t>(i)]);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorCode::OutOfRange, "class '" + label + "' member " + std::to_string(f) + " left [0,1]");
      }
      values(static_cast<Eigen::Index>(f), i) = v;
    }
  }
  return values;
}

FunctionClass loss_class(std::vector<NetworkParams> networks, double gamma, std::string label) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::NonpositiveGamma, "gamma must be > 0");
  FunctionClass cls;
  cls.label = std::move(label);
  for (auto& net : networks) {
    cls.members.emplace_back([net = std::move(net), gamma](const Eigen::Ref<const Eigen::VectorXd>& x, int y) {
      return ramp_loss(-margin(forward(net, x), y), gamma);
    });
  }
  return cls;
}

const char* to_string(RademacherMethod method) {
  return method == RademacherMethod::exact ? "exact" : "monte_carlo";
}

double rademacher_sup(const Eigen::Ref<const Eigen::MatrixXd>& values, const Eigen::Ref<const Eigen::VectorXd>& signs) {
  return (values * signs).maxCoeff() / static_cast<double>(values.cols());
}

namespace {

void require_nonempty_class(const Eigen::Ref<const Eigen::MatrixXd>& values) {
  if (values.rows() == 0) throw Error(ErrorCode::InvalidSpec, "function class is empty");
  if (values.cols() == 0) throw Error(ErrorCode::EmptyDataset, "dataset is empty");
}

}  // namespace

RademacherEstimate rademacher_exact(const Eigen::Ref<const Eigen::MatrixXd>& values) {
  require_nonempty_class(values);
  const Eigen::Index n = values.cols();
  if (n > kMaxExactPoints) throw Error(ErrorCode::TooLarge, "exact enumeration limited to n <= 20");

  const std::uint64_t count = std::uint64_t{1} << n;
  Eigen::VectorXd signs(n);
  double total = 0.0;
  for (std::uint64_t code = 0; code < count; ++code) {
    for (Eigen::Index i = 0; i < n; ++i) signs(i) = ((code >> i) & 1U) ? 1.0 : -1.0;
    total += rademacher_sup(values, signs);
  }
  RademacherEstimate est;
  est.mean = total / static_cast<double>(count);
  est.std_error = 0.0;
  est.trials = static_cast<std::int64_t>(count);
  est.method = RademacherMethod::exact;
  return est;
}

RademacherEstimate empirical_rademacher_exact(const FunctionClass& cls, const LabeledDataset& data) {
  if (data.size() > kMaxExactPoints) throw Error(ErrorCode::TooLarge, "exact enumeration limited to n <= 20");
  return rademacher_exact(cls.evaluate(data));
}

RademacherEstimate rademacher_mc(const Eigen::Ref<const Eigen::MatrixXd>& values, std::int64_t trials,
                                 std::uint64_t seed) {
  require_nonempty_class(values);
  if (trials < kMinMonteCarloTrials) throw Error(ErrorCode::Usage, "Monte Carlo needs at least 100 trials");
  const Eigen::Index n = values.cols();
  Eigen::VectorXd signs(n);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::int64_t t = 0; t < trials; ++t) {
    CounterRng rng(seed, static_cast<std::uint64_t>(t));
    for (Eigen::Index i = 0; i < n; ++i) signs(i) = rng.sign();
    const double v = rademacher_sup(values, signs);
    sum += v;
    sum_sq += v * v;
  }
  const auto count = static_cast<double>(trials);
  const double mean = sum / count;
  const double var = std::max(0.0, (sum_sq - count * mean * mean) / (count - 1.0));
  RademacherEstimate est;
  est.mean = mean;
  est.std_error = std::sqrt(var / count);
  est.trials = trials;
  est.method = RademacherMethod::monte_carlo;
  return est;
}

RademacherEstimate empirical_rademacher_mc(const FunctionClass& cls, const LabeledDataset& data, std::int64_t trials,
                                           std::uint64_t seed) {
  return rademacher_mc(cls.evaluate(data), trials, seed);
}

CoveringTerms covering_rademacher_terms(double input_norm, double gamma, double max_width, std::int64_t n,
                                        const LayerNorms& norms) {
  if (n < 2) throw Error(ErrorCode::Usage, "covering bound needs n >= 2");
  if (!(gamma > 0.0)) throw Error(ErrorCode::NonpositiveGamma, "gamma must be > 0");
  if (!(input_norm >= 0.0)) throw Error(ErrorCode::Usage, "input norm bound must be >= 0");
  if (!(max_width >= 1.0)) throw Error(ErrorCode::Usage, "max width must be >= 1");
  if (norms.size() == 0 || norms.any_zero_spectral()) {
    throw Error(ErrorCode::ZeroSpectralNorm, "covering bound needs every spectral norm > 0");
  }
  const auto nd = static_cast<double>(n);
  CoveringTerms terms;
  terms.small = 4.0 / std::pow(nd, 1.5);
  terms.complexity = 36.0 * input_norm * std::log(2.0 * max_width) * std::log(nd) / (gamma * nd) *
                     norms.ratio_aggregate() * norms.lipschitz_product();
  return terms;
}

double covering_rademacher_bound(double input_norm, double gamma, double max_width, std::int64_t n,
                                 const LayerNorms& norms) {
  const CoveringTerms terms = covering_rademacher_terms(input_norm, gamma, max_width, n, norms);
  return terms.small + terms.complexity;
}

}  // namespace mixbound
