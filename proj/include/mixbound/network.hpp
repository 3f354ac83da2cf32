#pragma once

// Bias-free feed-forward networks, margin operator, ramp loss and a small
// SGD trainer.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mixbound/dataset.hpp"

namespace mixbound {

enum class ActivationKind { relu, leaky_relu, tanh, identity };

struct Activation {
  ActivationKind kind = ActivationKind::relu;
  double slope = 0.01;  // leaky_relu only, in (0, 1)

  /// Lipschitz constant p; every supported kind is 1-Lipschitz.
  double lipschitz() const { return 1.0; }

  template <typename Scalar>
  Scalar apply(Scalar x) const {
    switch (kind) {
      case ActivationKind::relu: return x > Scalar(0) ? x : Scalar(0);
      case ActivationKind::leaky_relu: return x > Scalar(0) ? x : Scalar(slope) * x;
      case ActivationKind::tanh: return std::tanh(x);
      case ActivationKind::identity: return x;
    }
    return x;
  }

  /// Derivative given the pre-activation; 0 is used at the relu kink.
  template <typename Scalar>
  Scalar derivative(Scalar x) const {
    switch (kind) {
      case ActivationKind::relu: return x > Scalar(0) ? Scalar(1) : Scalar(0);
      case ActivationKind::leaky_relu: return x > Scalar(0) ? Scalar(1) : Scalar(slope);
      case ActivationKind::tanh: {
        const Scalar t = std::tanh(x);
        return Scalar(1) - t * t;
      }
      case ActivationKind::identity: return Scalar(1);
    }
    return Scalar(1);
  }

  friend bool operator==(const Activation& a, const Activation& b) {
    return a.kind == b.kind && (a.kind != ActivationKind::leaky_relu || a.slope == b.slope);
  }
};

/// "relu", "tanh", "identity", "leaky_relu" or "leaky_relu:<slope>".
Activation parse_activation(const std::string& text);
std::string to_string(const Activation& activation);

struct NetworkParams {
  std::vector<Eigen::MatrixXd> layers;  // A_i is d_i x d_{i-1}
  std::vector<Activation> activations;

  std::size_t depth() const { return layers.size(); }
  Eigen::Index input_dim() const { return layers.empty() ? 0 : layers.front().cols(); }
  Eigen::Index output_dim() const { return layers.empty() ? 0 : layers.back().rows(); }
  /// Largest dimension along any axis of any layer.
  Eigen::Index max_width() const;

  void validate() const;
};

/// Layer widths d_0..d_L plus one activation per layer.
struct Architecture {
  std::vector<int> dims;
  std::vector<Activation> activations;

  void validate() const;
};

/// F(x) = sigma_L(A_L ... sigma_1(A_1 x)).
Eigen::VectorXd forward(const NetworkParams& params, const Eigen::Ref<const Eigen::VectorXd>& x);
/// Row-wise forward pass; returns n x K logits.
Eigen::MatrixXd forward_batch(const NetworkParams& params, const Eigen::Ref<const Eigen::MatrixXd>& inputs);

/// M(v, j) = v_j - max_{i != j} v_i for 1-based label j.
double margin(const Eigen::Ref<const Eigen::VectorXd>& v, int label);

/// (1 + min(r, 0) / gamma)^+ clamped to [0, 1].
double ramp_loss(double r, double gamma);

/// Index of the unique maximum (1-based), or 0 when the maximum is tied.
int argmax_label(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Ties count as errors.
inline bool misclassified(const Eigen::Ref<const Eigen::VectorXd>& v, int label) {
  return argmax_label(v) != label;
}

double empirical_loss(const NetworkParams& params, const LabeledDataset& data, double gamma);
double zero_one_loss(const NetworkParams& params, const LabeledDataset& data);

struct PopulationEstimate {
  double ramp_loss = 0.0;
  double zero_one_loss = 0.0;
  double halfwidth = 0.0;
};

inline constexpr double kPopulationDelta = 0.01;

/// Hoeffding half-width sqrt(ln(2 / delta) / (2 m)).
double hoeffding_halfwidth(std::int64_t m, double delta);

PopulationEstimate population_estimate(const NetworkParams& params, const LabeledDataset& target,
                                       double gamma, double delta_est = kPopulationDelta);

enum class SurrogateKind { softmax_cross_entropy };

struct Surrogate {
  SurrogateKind kind = SurrogateKind::softmax_cross_entropy;
  double scale = 1.0;
};

/// Mean surrogate loss over the rows of `inputs`.
double surrogate_loss(const NetworkParams& params, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                      const std::vector<int>& labels, const Surrogate& surrogate = {});

/// Backpropagated gradient of surrogate_loss; one matrix per layer.
std::vector<Eigen::MatrixXd> gradient(const NetworkParams& params,
                                      const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                                      const std::vector<int>& labels, const Surrogate& surrogate = {});

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 20;
  int batch_size = 32;
  std::uint64_t seed = 0;
  std::optional<double> init_scale;  // default 1 / sqrt(fan_in) per layer

  void validate() const;
};

struct TrainResult {
  NetworkParams params;
  std::vector<double> loss_trajectory;  // mean surrogate loss per epoch
};

NetworkParams initialize(const Architecture& arch, const TrainConfig& config);

/// Minibatch SGD on the softmax cross-entropy surrogate. Throws DivergedLoss
/// if the loss becomes non-finite.
TrainResult train_sgd(const LabeledDataset& train, const Architecture& arch, const TrainConfig& config);

/// Text format: "L", then per layer "rows cols" and the rows of the matrix,
/// then one line with the activation names.
void write_network(std::ostream& out, const NetworkParams& params);
NetworkParams read_network(std::istream& in);
void save_network(const std::filesystem::path& path, const NetworkParams& params);
NetworkParams load_network(const std::filesystem::path& path);

}  // namespace mixbound
