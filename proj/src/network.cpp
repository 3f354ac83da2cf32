#include "mixbound/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mixbound/error.hpp"
#include "mixbound/random.hpp"

namespace mixbound {

Activation parse_activation(const std::string& text) {
  if (text == "relu") return {ActivationKind::relu};
  if (text == "tanh") return {ActivationKind::tanh};
  if (text == "identity") return {ActivationKind::identity};
  if (text == "leaky_relu") return {ActivationKind::leaky_relu};
  const std::string prefix = "leaky_relu:";
  if (text.rfind(prefix, 0) == 0) {
    double slope = 0.0;
    const char* first = text.data() + prefix.size();
    const char* last = text.data() + text.size();
    const auto result = std::from_chars(first, last, slope);
    if (result.ec != std::errc() || result.ptr != last || !(slope > 0.0 && slope < 1.0)) {
      throw Error(ErrorCode::InvalidSpec, "leaky_relu slope must lie in (0,1): '" + text + "'");
    }
    return {ActivationKind::leaky_relu, slope};
  }
  throw Error(ErrorCode::InvalidSpec, "unknown activation '" + text + "'");
}

std::string to_string(const Activation& activation) {
  switch (activation.kind) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::identity: return "identity";
    case ActivationKind::leaky_relu: return "leaky_relu:" + format_double(activation.slope);
  }
  return "identity";
}

Eigen::Index NetworkParams::max_width() const {
  Eigen::Index width = 0;
  for (const auto& a : layers) width = std::max({width, a.rows(), a.cols()});
  return width;
}

void NetworkParams::validate() const {
  if (layers.empty()) throw Error(ErrorCode::InvalidSpec, "network has no layers");
  if (activations.size() != layers.size()) throw Error(ErrorCode::InvalidSpec, "one activation per layer required");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].allFinite()) throw Error(ErrorCode::InvalidSpec, "non-finite weight in layer " + std::to_string(i));
    if (i > 0 && layers[i].cols() != layers[i - 1].rows()) {
      throw Error(ErrorCode::DimensionMismatch, "layer " + std::to_string(i) + " does not chain");
    }
  }
}

void Architecture::validate() const {
  if (dims.size() < 2) throw Error(ErrorCode::InvalidSpec, "architecture needs at least input and output dims");
  if (activations.size() != dims.size() - 1) throw Error(ErrorCode::InvalidSpec, "one activation per layer required");
  for (int d : dims) {
    if (d < 1) throw Error(ErrorCode::InvalidSpec, "layer dims must be positive");
  }
}

Eigen::VectorXd forward(const NetworkParams& params, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != params.input_dim()) throw Error(ErrorCode::DimensionMismatch, "input has wrong dimension");
  Eigen::VectorXd h = x;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const Activation& act = params.activations[i];
    h = (params.layers[i] * h).unaryExpr([&act](double z) { return act.apply(z); });
  }
  return h;
}

Eigen::MatrixXd forward_batch(const NetworkParams& params, const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
  if (inputs.cols() != params.input_dim()) throw Error(ErrorCode::DimensionMismatch, "inputs have wrong dimension");
  Eigen::MatrixXd h = inputs.transpose();
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const Activation& act = params.activations[i];
    h = (params.layers[i] * h).unaryExpr([&act](double z) { return act.apply(z); });
  }
  return h.transpose();
}

double margin(const Eigen::Ref<const Eigen::VectorXd>& v, int label) {
  if (v.size() < 2) throw Error(ErrorCode::BadLabel, "margin needs K >= 2");
  if (label < 1 || label > v.size()) throw Error(ErrorCode::BadLabel, "label outside 1..K");
  const Eigen::Index j = label - 1;
  double best_other = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i != j) best_other = std::max(best_other, v(i));
  }
  return v(j) - best_other;
}

double ramp_loss(double r, double gamma) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::NonpositiveGamma, "ramp loss needs gamma > 0");
  return std::clamp(1.0 + std::min(r, 0.0) / gamma, 0.0, 1.0);
}

int argmax_label(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() == 0) return 0;
  Eigen::Index best = 0;
  bool tied = false;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) {
      best = i;
      tied = false;
    } else if (v(i) == v(best)) {
      tied = true;
    }
  }
  return tied ? 0 : static_cast<int>(best) + 1;
}

namespace {

void require_nonempty(const LabeledDataset& data) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "dataset is empty");
}

}  // namespace

double empirical_loss(const NetworkParams& params, const LabeledDataset& data, double gamma) {
  require_nonempty(data);
  if (!(gamma > 0.0)) throw Error(ErrorCode::NonpositiveGamma, "gamma must be > 0");
  const Eigen::MatrixXd logits = forward_batch(params, data.inputs);
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    total += ramp_loss(-margin(logits.row(i).transpose(), data.labels[static_cast<std::size_t>(i)]), gamma);
  }
  return total / static_cast<double>(data.size());
}

double zero_one_loss(const NetworkParams& params, const LabeledDataset& data) {
  require_nonempty(data);
  const Eigen::MatrixXd logits = forward_batch(params, data.inputs);
  std::int64_t errors = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    errors += misclassified(logits.row(i).transpose(), data.labels[static_cast<std::size_t>(i)]) ? 1 : 0;
  }
  return static_cast<double>(errors) / static_cast<double>(data.size());
}

double hoeffding_halfwidth(std::int64_t m, double delta) {
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(m)));
}

PopulationEstimate population_estimate(const NetworkParams& params, const LabeledDataset& target, double gamma,
                                       double delta_est) {
  if (target.kind != DatasetKind::target_iid) {
    throw Error(ErrorCode::WrongKind, "population estimate needs an iid target sample");
  }
  require_nonempty(target);
  PopulationEstimate est;
  est.ramp_loss = empirical_loss(params, target, gamma);
  est.zero_one_loss = zero_one_loss(params, target);
  est.halfwidth = hoeffding_halfwidth(target.size(), delta_est);
  return est;
}

namespace {

struct Tape {
  std::vector<Eigen::MatrixXd> pre;   // z_l, d_l x batch
  std::vector<Eigen::MatrixXd> post;  // a_l, a_0 = inputs^T
};

Tape record_forward(const NetworkParams& params, const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
  Tape tape;
  tape.post.push_back(inputs.transpose());
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const Activation& act = params.activations[i];
    tape.pre.push_back(params.layers[i] * tape.post.back());
    tape.post.push_back(tape.pre.back().unaryExpr([&act](double z) { return act.apply(z); }));
  }
  return tape;
}

// Per-column -log softmax(logits)_y, computed stably.
Eigen::RowVectorXd cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
  Eigen::RowVectorXd loss(logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double top = logits.col(c).maxCoeff();
    const double lse = top + std::log((logits.col(c).array() - top).exp().sum());
    loss(c) = lse - logits(labels[static_cast<std::size_t>(c)] - 1, c);
  }
  return loss;
}

void check_batch(const NetworkParams& params, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                 const std::vector<int>& labels) {
  if (inputs.rows() == 0) throw Error(ErrorCode::EmptyDataset, "empty batch");
  if (static_cast<Eigen::Index>(labels.size()) != inputs.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "label count does not match batch rows");
  }
  for (int y : labels) {
    if (y < 1 || y > params.output_dim()) throw Error(ErrorCode::BadLabel, "label outside 1..K");
  }
}

}  // namespace

double surrogate_loss(const NetworkParams& params, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                      const std::vector<int>& labels, const Surrogate& surrogate) {
  check_batch(params, inputs, labels);
  const Eigen::MatrixXd logits = forward_batch(params, inputs).transpose();
  return surrogate.scale * cross_entropy(logits, labels).mean();
}

std::vector<Eigen::MatrixXd> gradient(const NetworkParams& params, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                                      const std::vector<int>& labels, const Surrogate& surrogate) {
  check_batch(params, inputs, labels);
  const Tape tape = record_forward(params, inputs);
  const Eigen::MatrixXd& logits = tape.post.back();
  const auto batch = static_cast<double>(inputs.rows());

  // d(loss)/d(logits) = (softmax - onehot) * scale / batch
  Eigen::MatrixXd upstream(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const Eigen::ArrayXd e = (logits.col(c).array() - logits.col(c).maxCoeff()).exp();
    upstream.col(c) = e / e.sum();
    upstream(labels[static_cast<std::size_t>(c)] - 1, c) -= 1.0;
  }
  upstream *= surrogate.scale / batch;

  std::vector<Eigen::MatrixXd> grads(params.layers.size());
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const Activation& act = params.activations[l];
    const Eigen::MatrixXd local =
        upstream.cwiseProduct(tape.pre[l].unaryExpr([&act](double z) { return act.derivative(z); }));
    grads[l] = local * tape.post[l].transpose();
    if (l > 0) upstream = params.layers[l].transpose() * local;
  }
  return grads;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::InvalidSpec, "learning_rate must be finite and >= 0");
  }
  if (epochs < 0) throw Error(ErrorCode::InvalidSpec, "epochs must be >= 0");
  if (batch_size < 1) throw Error(ErrorCode::InvalidSpec, "batch_size must be >= 1");
  if (init_scale && !(*init_scale > 0.0)) throw Error(ErrorCode::InvalidSpec, "init_scale must be > 0");
}

NetworkParams initialize(const Architecture& arch, const TrainConfig& config) {
  arch.validate();
  NetworkParams params;
  params.activations = arch.activations;
  CounterRng rng(config.seed, 100);
  for (std::size_t l = 1; l < arch.dims.size(); ++l) {
    const int fan_in = arch.dims[l - 1];
    const double scale = config.init_scale.value_or(1.0 / std::sqrt(static_cast<double>(fan_in)));
    Eigen::MatrixXd a(arch.dims[l], fan_in);
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = rng.uniform(-scale, scale);
    }
    params.layers.push_back(std::move(a));
  }
  return params;
}

TrainResult train_sgd(const LabeledDataset& train, const Architecture& arch, const TrainConfig& config) {
  config.validate();
  arch.validate();
  require_nonempty(train);
  if (arch.dims.front() != train.dim() || arch.dims.back() != train.num_classes) {
    throw Error(ErrorCode::DimensionMismatch, "architecture does not chain from d to K");
  }

  TrainResult result;
  result.params = initialize(arch, config);
  NetworkParams& params = result.params;

  const Eigen::Index n = train.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Eigen::MatrixXd batch_inputs;
  std::vector<int> batch_labels;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    CounterRng shuffle(config.seed, 1000 + static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle.below(i)]);
    }
    for (Eigen::Index start = 0; start < n; start += config.batch_size) {
      const Eigen::Index size = std::min<Eigen::Index>(config.batch_size, n - start);
      batch_inputs.resize(size, train.dim());
      batch_labels.resize(static_cast<std::size_t>(size));
      for (Eigen::Index b = 0; b < size; ++b) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + b)];
        batch_inputs.row(b) = train.inputs.row(src);
        batch_labels[static_cast<std::size_t>(b)] = train.labels[static_cast<std::size_t>(src)];
      }
      const auto grads = gradient(params, batch_inputs, batch_labels);
      for (std::size_t l = 0; l < grads.size(); ++l) params.layers[l] -= config.learning_rate * grads[l];
    }
    const double loss = surrogate_loss(params, train.inputs, train.labels);
    if (!std::isfinite(loss)) throw Error(ErrorCode::DivergedLoss, "loss became non-finite at epoch " + std::to_string(epoch));
    result.loss_trajectory.push_back(loss);
  }
  return result;
}

void write_network(std::ostream& out, const NetworkParams& params) {
  out << params.layers.size() << '\n';
  for (const auto& a : params.layers) {
    out << a.rows() << ' ' << a.cols() << '\n';
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      for (Eigen::Index c = 0; c < a.cols(); ++c) out << (c ? " " : "") << format_double(a(r, c));
      out << '\n';
    }
  }
  for (std::size_t i = 0; i < params.activations.size(); ++i) {
    out << (i ? " " : "") << to_string(params.activations[i]);
  }
  out << '\n';
}

NetworkParams read_network(std::istream& in) {
  std::size_t depth = 0;
  if (!(in >> depth) || depth == 0) throw Error(ErrorCode::Io, "malformed network header");
  NetworkParams params;
  std::string token;
  for (std::size_t l = 0; l < depth; ++l) {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    if (!(in >> rows >> cols) || rows < 1 || cols < 1) throw Error(ErrorCode::Io, "malformed layer header");
    Eigen::MatrixXd a(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (!(in >> token)) throw Error(ErrorCode::Io, "truncated layer");
        const auto result = std::from_chars(token.data(), token.data() + token.size(), a(r, c));
        if (result.ec != std::errc()) throw Error(ErrorCode::Io, "malformed weight '" + token + "'");
      }
    }
    params.layers.push_back(std::move(a));
  }
  for (std::size_t l = 0; l < depth; ++l) {
    if (!(in >> token)) throw Error(ErrorCode::Io, "missing activation names");
    params.activations.push_back(parse_activation(token));
  }
  params.validate();
  return params;
}

void save_network(const std::filesystem::path& path, const NetworkParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string());
  write_network(out, params);
}

NetworkParams load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_network(in);
}

}  // namespace mixbound
