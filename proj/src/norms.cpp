#include "mixbound/norms.hpp"

namespace mixbound {

LayerNorms layer_norms(const NetworkParams& params, double tol) {
  params.validate();
  const auto depth = static_cast<Eigen::Index>(params.depth());
  LayerNorms norms;
  norms.spectral.resize(depth);
  norms.two_one.resize(depth);
  norms.lipschitz.resize(depth);
  for (Eigen::Index i = 0; i < depth; ++i) {
    const auto& a = params.layers[static_cast<std::size_t>(i)];
    const auto s = spectral_norm(a, tol);
    norms.converged = norms.converged && s.converged;
    norms.spectral(i) = s.value;
    norms.two_one(i) = norm_2_1_of_transpose(a);
    norms.lipschitz(i) = params.activations[static_cast<std::size_t>(i)].lipschitz();
  }
  return norms;
}

double spectral_complexity(const LayerNorms& norms) {
  if (norms.size() == 0 || norms.any_zero_spectral()) return 0.0;
  return norms.lipschitz_product() * norms.ratio_aggregate();
}

double spectral_complexity(const NetworkParams& params) { return spectral_complexity(layer_norms(params)); }

}  // namespace mixbound
