#pragma once

// Matrix norms entering the spectral complexity of a network.

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "mixbound/network.hpp"
#include "mixbound/random.hpp"

namespace mixbound {

template <typename Scalar>
struct SpectralNormResult {
  Scalar value = Scalar(0);
  int iterations = 0;
  bool converged = false;  // false: cap reached, value is the best estimate
};

inline constexpr int kPowerIterationCap = 10000;
inline constexpr double kSpectralTolerance = 1e-12;

/// Largest singular value by power iteration on A^T A. Stops once successive
/// estimates differ by less than tol * estimate. The start vector is seeded
/// deterministically; a run that collapses into the null space is restarted
/// once from a second seed.
template <typename Derived>
SpectralNormResult<typename Derived::Scalar> spectral_norm(const Eigen::MatrixBase<Derived>& a,
                                                           double tol = kSpectralTolerance,
                                                           int max_iterations = kPowerIterationCap) {
  using Scalar = typename Derived::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  SpectralNormResult<Scalar> result;
  if (a.size() == 0 || a.isZero(Scalar(0))) {
    result.converged = true;
    return result;
  }

  for (std::uint64_t attempt = 0; attempt < 2; ++attempt) {
    CounterRng rng(0x5EC7A1ULL, attempt);
    Vector v(a.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = Scalar(rng.normal());
    v.normalize();

    Scalar estimate = (a * v).norm();
    for (int it = 1; it <= max_iterations; ++it) {
      Vector w = a.transpose() * (a * v);
      const Scalar w_norm = w.norm();
      if (w_norm == Scalar(0)) break;  // start vector annihilated; restart
      v = w / w_norm;
      const Scalar next = (a * v).norm();
      result.iterations = it;
      result.value = next;
      if (std::abs(next - estimate) < Scalar(tol) * next) {
        result.converged = true;
        return result;
      }
      estimate = next;
    }
    if (result.value > Scalar(0)) return result;
  }
  return result;
}

/// ||A^T||_{2,1}: sum of the Euclidean norms of the rows of A.
template <typename Derived>
typename Derived::Scalar norm_2_1_of_transpose(const Eigen::MatrixBase<Derived>& a) {
  return a.rowwise().norm().sum();
}

/// Per-layer spectral norms s_i, (2,1) norms b_i of A_i^T and Lipschitz constants p_i.
struct LayerNorms {
  Eigen::VectorXd spectral;
  Eigen::VectorXd two_one;
  Eigen::VectorXd lipschitz;
  bool converged = true;

  Eigen::Index size() const { return spectral.size(); }
  bool any_zero_spectral() const { return (spectral.array() == 0.0).any(); }

  /// prod_i p_i s_i
  double lipschitz_product() const { return (spectral.array() * lipschitz.array()).prod(); }
  /// (sum_i (b_i / s_i)^(2/3))^(3/2); requires every s_i > 0.
  double ratio_aggregate() const {
    return std::pow((two_one.array() / spectral.array()).pow(2.0 / 3.0).sum(), 1.5);
  }
};

LayerNorms layer_norms(const NetworkParams& params, double tol = kSpectralTolerance);

/// T_A = (prod p_i s_i) (sum (b_i / s_i)^(2/3))^(3/2); 0 when any s_i = 0.
double spectral_complexity(const LayerNorms& norms);
double spectral_complexity(const NetworkParams& params);

}  // namespace mixbound
