#include "mixbound/io.hpp"

#include <cstdio>

#include "mixbound/error.hpp"

namespace mixbound {
namespace {

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::MatrixXd matrix_from_json(const Json& doc, const char* name) {
  if (!doc.is_array()) throw Error(ErrorCode::InvalidSpec, std::string(name) + " must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(doc.size());
  const Eigen::Index cols = rows == 0 ? 0 : static_cast<Eigen::Index>(doc.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = doc[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorCode::InvalidSpec, std::string(name) + " rows must have equal length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from_json(const Json& doc, const char* name) {
  if (!doc.is_array()) throw Error(ErrorCode::InvalidSpec, std::string(name) + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(doc.size()));
  for (std::size_t i = 0; i < doc.size(); ++i) v(static_cast<Eigen::Index>(i)) = doc[i].get<double>();
  return v;
}

const Json& field(const Json& doc, const char* name) {
  if (!doc.is_object() || !doc.contains(name)) throw Error(ErrorCode::InvalidSpec, std::string("missing field '") + name + "'");
  return doc.at(name);
}

template <typename T>
T get(const Json& doc, const char* name) {
  try {
    return field(doc, name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("field '") + name + "': " + e.what());
  }
}

}  // namespace

Json to_json(const ProcessSpec& spec) {
  Json markov;
  markov["num_states"] = spec.markov.num_states;
  markov["transition"] = matrix_to_json(spec.markov.transition);
  markov["initial"] = vector_to_json(spec.markov.initial);

  const EmissionSpec& e = spec.emission;
  Json emission;
  if (e.mode == EmissionMode::discrete) {
    emission["mode"] = "discrete";
    emission["alphabet"] = matrix_to_json(e.alphabet);
    emission["table"] = matrix_to_json(e.table);
    emission["perturbation"] = matrix_to_json(e.perturbation);
  } else {
    emission["mode"] = "gaussian";
    emission["means"] = matrix_to_json(e.means);
    emission["perturbation_means"] = matrix_to_json(e.perturbation_means);
    emission["sigma"] = e.sigma;
  }
  emission["drift_amplitude"] = e.drift.amplitude;
  emission["drift_exponent"] = e.drift.exponent;

  Json doc;
  doc["markov"] = std::move(markov);
  doc["emission"] = std::move(emission);
  doc["label_map"] = spec.label_map;
  doc["num_classes"] = spec.num_classes;
  doc["input_dim"] = spec.input_dim;
  return doc;
}

ProcessSpec process_spec_from_json(const Json& doc) {
  ProcessSpec spec;
  const Json& markov = field(doc, "markov");
  spec.markov.num_states = get<int>(markov, "num_states");
  spec.markov.transition = matrix_from_json(field(markov, "transition"), "transition");
  spec.markov.initial = vector_from_json(field(markov, "initial"), "initial");

  const Json& emission = field(doc, "emission");
  const auto mode = get<std::string>(emission, "mode");
  EmissionSpec& e = spec.emission;
  if (mode == "discrete") {
    e.mode = EmissionMode::discrete;
    e.alphabet = matrix_from_json(field(emission, "alphabet"), "alphabet");
    e.table = matrix_from_json(field(emission, "table"), "table");
    e.perturbation = emission.contains("perturbation") ? matrix_from_json(emission.at("perturbation"), "perturbation") : e.table;
  } else if (mode == "gaussian") {
    e.mode = EmissionMode::gaussian;
    e.means = matrix_from_json(field(emission, "means"), "means");
    e.perturbation_means = emission.contains("perturbation_means")
                               ? matrix_from_json(emission.at("perturbation_means"), "perturbation_means")
                               : e.means;
    e.sigma = get<double>(emission, "sigma");
  } else {
    throw Error(ErrorCode::InvalidSpec, "emission mode must be 'discrete' or 'gaussian'");
  }
  e.drift.amplitude = emission.value("drift_amplitude", 0.0);
  e.drift.exponent = emission.value("drift_exponent", 0.5);

  spec.label_map = get<std::vector<int>>(doc, "label_map");
  spec.num_classes = get<int>(doc, "num_classes");
  spec.input_dim = get<int>(doc, "input_dim");
  spec.validate();
  return spec;
}

Json to_json(const Architecture& arch) {
  Json doc;
  doc["dims"] = arch.dims;
  Json acts = Json::array();
  for (const auto& a : arch.activations) acts.push_back(to_string(a));
  doc["activations"] = std::move(acts);
  return doc;
}

Architecture architecture_from_json(const Json& doc) {
  Architecture arch;
  arch.dims = get<std::vector<int>>(doc, "dims");
  for (const auto& name : get<std::vector<std::string>>(doc, "activations")) arch.activations.push_back(parse_activation(name));
  arch.validate();
  return arch;
}

Json to_json(const TrainConfig& config) {
  Json doc;
  doc["learning_rate"] = config.learning_rate;
  doc["epochs"] = config.epochs;
  doc["batch_size"] = config.batch_size;
  doc["seed"] = config.seed;
  doc["init_scale"] = config.init_scale ? Json(*config.init_scale) : Json(nullptr);
  return doc;
}

TrainConfig train_config_from_json(const Json& doc) {
  TrainConfig config;
  config.learning_rate = get<double>(doc, "learning_rate");
  config.epochs = get<int>(doc, "epochs");
  config.batch_size = get<int>(doc, "batch_size");
  config.seed = doc.value("seed", std::uint64_t{0});
  if (doc.contains("init_scale") && !doc.at("init_scale").is_null()) config.init_scale = doc.at("init_scale").get<double>();
  config.validate();
  return config;
}

Json to_json(const BoundReport& r) {
  Json doc;
  doc["certificate"] = "per-configuration certificate";
  doc["seed"] = r.seed;
  doc["n"] = r.n;
  doc["gamma"] = r.gamma;
  doc["delta"] = r.delta;
  doc["empirical_ramp_loss"] = r.empirical_ramp_loss;
  doc["empirical_zero_one"] = r.empirical_zero_one;
  doc["rademacher_term"] = r.rademacher_term;
  doc["rademacher_source"] = to_string(r.rademacher_source);
  doc["mu_mean"] = r.mu_mean;
  doc["delta_inf"] = r.delta_inf;
  doc["concentration_term"] = r.concentration_term;
  doc["small_term"] = r.small_term;
  doc["complexity_term"] = r.complexity_term;
  doc["total_bound"] = r.total_bound;
  doc["concentration_term_unsquared"] = r.concentration_term_unsquared;
  doc["total_bound_unsquared"] = r.total_bound_unsquared;
  doc["input_norm"] = r.input_norm;
  doc["max_width"] = r.max_width;
  doc["spectral_complexity"] = r.spectral_complexity;
  doc["degenerate"] = r.degenerate;
  doc["population_ramp_estimate"] = r.population_ramp_estimate;
  doc["population_zero_one_estimate"] = r.population_zero_one_estimate;
  doc["population_halfwidth"] = r.population_halfwidth;
  doc["bound_holds"] = r.bound_holds;
  doc["phi_exact"] = r.phi_exact;
  doc["mu_exact"] = r.mu_exact;
  return doc;
}

Json to_json(const TailReport& r) {
  Json doc;
  doc["n"] = r.n;
  doc["trials"] = r.trials;
  doc["delta_inf"] = r.delta_inf;
  doc["mean_statistic"] = r.mean_statistic;
  doc["epsilon"] = r.epsilon;
  doc["empirical_tail"] = r.empirical_tail;
  doc["stderr"] = r.std_error;
  doc["analytic_bound"] = r.analytic_bound;
  doc["violation"] = r.violation;
  doc["violations"] = r.violations();
  return doc;
}

Json to_json(const Lemma3Report& r) {
  Json doc;
  doc["gap"] = vector_to_json(r.gap);
  doc["mu"] = vector_to_json(r.mu);
  doc["mean_gap"] = r.mean_gap;
  doc["mu_mean"] = r.mu_mean;
  doc["max_slack_violation"] = r.max_slack_violation;
  doc["passed"] = r.passed;
  return doc;
}

Json to_json(const SymmetrizationReport& r) {
  Json doc;
  doc["trials"] = r.trials;
  doc["lhs"] = r.lhs;
  doc["lhs_stderr"] = r.lhs_std_error;
  doc["rhs"] = r.rhs;
  doc["rhs_stderr"] = r.rhs_std_error;
  doc["violation"] = r.violation;
  return doc;
}

Json to_json(const Lemma4Report& r) {
  Json doc;
  doc["samples"] = r.samples;
  doc["failures"] = r.failures;
  return doc;
}

Json to_json(const RademacherEstimate& e) {
  Json doc;
  doc["mean"] = e.mean;
  doc["stderr"] = e.std_error;
  doc["trials"] = e.trials;
  doc["method"] = to_string(e.method);
  return doc;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string spec_digest(const ProcessSpec& spec) { return hex64(fnv1a64(to_json(spec).dump())); }

}  // namespace mixbound
