#include "mixbound/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "mixbound/error.hpp"
#include "mixbound/parallel.hpp"

namespace mixbound {
namespace fs = std::filesystem;

void ExperimentConfig::validate() const {
  auto usage = [](const std::string& what) { throw Error(ErrorCode::Usage, what); };
  process.validate();
  arch.validate();
  train.validate();
  if (n_train < 2) usage("n_train must be at least 2");
  if (m_target < 1) usage("m_target must be positive");
  if (gamma_list.empty()) usage("gamma_list must be nonempty");
  for (double g : gamma_list) {
    if (!(g > 0.0)) usage("gamma_list entries must be positive");
  }
  if (!(delta > 0.0 && delta < 1.0)) usage("delta must lie in (0,1)");
  if (seeds.empty()) usage("seeds must be nonempty");
  if (arch.dims.front() != process.input_dim || arch.dims.back() != process.num_classes) {
    usage("arch must chain from input_dim to num_classes");
  }
  for (const auto& name : validators) {
    if (std::find(kValidatorNames.begin(), kValidatorNames.end(), name) == kValidatorNames.end()) {
      usage("unknown validator '" + name + "'");
    }
  }
  const ValidationSettings& v = validation;
  if (v.tail_n < 1 || v.tail_trials < 1 || v.lemma3_n < 1 || v.symmetrization_n < 1 || v.symmetrization_trials < 1 ||
      v.lemma4_samples < 1 || v.rademacher_trials < 1) {
    usage("validation counts must be positive");
  }
}

CertificationPlan ExperimentConfig::plan() const {
  CertificationPlan plan;
  plan.process = process;
  plan.arch = arch;
  plan.train = train;
  plan.n_train = n_train;
  plan.m_target = m_target;
  plan.gamma_list = gamma_list;
  plan.delta = delta;
  plan.seeds = seeds;
  return plan;
}

Json to_json(const ExperimentConfig& config) {
  Json validation;
  const ValidationSettings& v = config.validation;
  validation["tail_n"] = v.tail_n;
  validation["tail_trials"] = v.tail_trials;
  validation["epsilon_grid"] = v.epsilon_grid;
  validation["delta_inf_override"] = v.delta_inf_override ? Json(*v.delta_inf_override) : Json(nullptr);
  validation["lemma3_n"] = v.lemma3_n;
  validation["symmetrization_n"] = v.symmetrization_n;
  validation["symmetrization_trials"] = v.symmetrization_trials;
  validation["lemma4_samples"] = v.lemma4_samples;
  validation["rademacher_trials"] = v.rademacher_trials;

  Json doc;
  doc["process"] = to_json(config.process);
  doc["arch"] = to_json(config.arch);
  doc["train"] = to_json(config.train);
  doc["n_train"] = config.n_train;
  doc["m_target"] = config.m_target;
  doc["gamma_list"] = config.gamma_list;
  doc["delta"] = config.delta;
  doc["seeds"] = config.seeds;
  doc["output_dir"] = config.output_dir;
  doc["validators"] = config.validators;
  doc["validation"] = std::move(validation);
  return doc;
}

ExperimentConfig experiment_config_from_json(const Json& doc) {
  ExperimentConfig config;
  try {
    config.process = process_spec_from_json(doc.at("process"));
    config.arch = architecture_from_json(doc.at("arch"));
    config.train = train_config_from_json(doc.at("train"));
    config.n_train = doc.at("n_train").get<std::int64_t>();
    config.m_target = doc.at("m_target").get<std::int64_t>();
    config.gamma_list = doc.at("gamma_list").get<std::vector<double>>();
    config.delta = doc.at("delta").get<double>();
    config.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    config.output_dir = doc.value("output_dir", std::string("out"));
    config.validators = doc.value("validators", std::vector<std::string>{});
    if (doc.contains("validation")) {
      const Json& v = doc.at("validation");
      ValidationSettings& s = config.validation;
      s.tail_n = v.value("tail_n", s.tail_n);
      s.tail_trials = v.value("tail_trials", s.tail_trials);
      s.epsilon_grid = v.value("epsilon_grid", s.epsilon_grid);
      if (v.contains("delta_inf_override") && !v.at("delta_inf_override").is_null()) {
        s.delta_inf_override = v.at("delta_inf_override").get<double>();
      }
      s.lemma3_n = v.value("lemma3_n", s.lemma3_n);
      s.symmetrization_n = v.value("symmetrization_n", s.symmetrization_n);
      s.symmetrization_trials = v.value("symmetrization_trials", s.symmetrization_trials);
      s.lemma4_samples = v.value("lemma4_samples", s.lemma4_samples);
      s.rademacher_trials = v.value("rademacher_trials", s.rademacher_trials);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Usage, std::string("malformed config: ") + e.what());
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Usage, std::string("config is not valid JSON: ") + e.what());
  }
  return experiment_config_from_json(doc);
}

void save_config(const fs::path& path, const ExperimentConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string());
  out << to_json(config).dump(2) << '\n';
}

namespace {

std::string config_digest(const ExperimentConfig& config) { return hex64(fnv1a64(to_json(config).dump())); }

struct OutputWriter {
  fs::path dir;
  std::vector<std::pair<std::string, std::string>> hashes;  // file name, content hash
  CommandOutput output;

  explicit OutputWriter(fs::path out_dir) : dir(std::move(out_dir)) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  }

  std::string write(const std::string& name, const std::string& content) {
    const fs::path path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string());
    out << content;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
    const std::string hash = hex64(fnv1a64(content));
    hashes.emplace_back(name, hash);
    output.files.push_back(path);
    return hash;
  }

  CommandOutput finish(const std::string& command, const ExperimentConfig& config) {
    Json doc;
    doc["command"] = command;
    doc["config_digest"] = config_digest(config);
    doc["spec_digest"] = spec_digest(config.process);
    Json files = Json::object();
    for (const auto& [name, hash] : hashes) files[name] = hash;
    doc["files"] = std::move(files);
    const fs::path path = dir / ("manifest_" + command + ".json");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string());
    out << doc.dump(2) << '\n';
    output.manifest = path;
    return output;
  }
};

std::string seed_tag(std::uint64_t seed) { return "seed" + std::to_string(seed); }

std::string dataset_text(const LabeledDataset& data) {
  std::ostringstream out;
  write_dataset(out, data);
  return out.str();
}

std::string network_text(const NetworkParams& params) {
  std::ostringstream out;
  write_network(out, params);
  return out.str();
}

}  // namespace

void write_summary_csv(std::ostream& out, const std::vector<BoundReport>& reports) {
  out << "seed,gamma,n,delta,empirical_ramp_loss,empirical_zero_one,rademacher_term,mu_mean,delta_inf,"
         "concentration_term,small_term,complexity_term,total_bound,population_ramp_estimate,"
         "population_zero_one_estimate,population_halfwidth,bound_holds\n";
  for (const auto& r : reports) {
    out << r.seed << ',' << format_double(r.gamma) << ',' << r.n << ',' << format_double(r.delta) << ','
        << format_double(r.empirical_ramp_loss) << ',' << format_double(r.empirical_zero_one) << ','
        << format_double(r.rademacher_term) << ',' << format_double(r.mu_mean) << ',' << format_double(r.delta_inf)
        << ',' << format_double(r.concentration_term) << ',' << format_double(r.small_term) << ','
        << format_double(r.complexity_term) << ',' << format_double(r.total_bound) << ','
        << format_double(r.population_ramp_estimate) << ',' << format_double(r.population_zero_one_estimate) << ','
        << format_double(r.population_halfwidth) << ',' << (r.bound_holds ? "true" : "false") << '\n';
  }
}

FunctionClass standard_validation_class(int num_classes) {
  FunctionClass cls;
  cls.label = "labels_thresholds_zero";
  cls.members.emplace_back([](const Eigen::Ref<const Eigen::VectorXd>&, int) { return 0.0; });
  for (int j = 1; j <= num_classes; ++j) {
    cls.members.emplace_back([j](const Eigen::Ref<const Eigen::VectorXd>&, int y) { return y == j ? 1.0 : 0.0; });
  }
  for (double t : {-1.0, 0.0, 1.0}) {
    cls.members.emplace_back([t](const Eigen::Ref<const Eigen::VectorXd>& x, int) { return x(0) > t ? 1.0 : 0.0; });
  }
  cls.members.emplace_back([](const Eigen::Ref<const Eigen::VectorXd>& x, int) { return 1.0 / (1.0 + std::exp(-x(0))); });
  return cls;
}

CommandOutput cmd_generate(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
  config.validate();
  OutputWriter writer(out_dir);
  log << "spec_digest " << spec_digest(config.process) << '\n';
  for (std::uint64_t seed : config.seeds) {
    const LabeledDataset data = sample_sequence(config.process, config.n_train, seed);
    const std::string name = "train_" + seed_tag(seed) + ".txt";
    log << name << ' ' << writer.write(name, dataset_text(data)) << '\n';
  }
  return writer.finish("generate", config);
}

CommandOutput cmd_train(const ExperimentConfig& config, const fs::path& out_dir, int jobs, std::ostream& log) {
  config.validate();
  const CertificationPlan plan = config.plan();
  std::vector<SeedRun> runs(config.seeds.size());
  parallel_for(runs.size(), jobs, [&](std::size_t i) { runs[i] = train_for_seed(plan, config.seeds[i]); });

  OutputWriter writer(out_dir);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string tag = seed_tag(config.seeds[i]);
    const std::string name = "network_" + tag + ".txt";
    log << name << ' ' << writer.write(name, network_text(runs[i].trained.params)) << '\n';
    Json summary;
    summary["seed"] = config.seeds[i];
    summary["loss_trajectory"] = runs[i].trained.loss_trajectory;
    summary["train_zero_one"] = zero_one_loss(runs[i].trained.params, runs[i].train_data);
    writer.write("training_" + tag + ".json", summary.dump(2) + "\n");
  }
  return writer.finish("train", config);
}

CommandOutput cmd_certify(const ExperimentConfig& config, const fs::path& out_dir, int jobs, std::ostream& log) {
  config.validate();
  const std::vector<BoundReport> reports = run_certification(config.plan(), jobs);

  OutputWriter writer(out_dir);
  std::size_t holds = 0;
  for (const auto& r : reports) {
    const std::string name = "report_" + seed_tag(r.seed) + "_gamma" + format_double(r.gamma) + ".json";
    writer.write(name, to_json(r).dump(2) + "\n");
    holds += r.bound_holds ? 1 : 0;
  }
  std::ostringstream csv;
  write_summary_csv(csv, reports);
  writer.write("summary.csv", csv.str());
  log << "certified " << reports.size() << " seed x gamma combinations; bound holds in " << holds << '\n';
  return writer.finish("certify", config);
}

namespace {

Json run_validator(const std::string& name, const ExperimentConfig& config) {
  const ValidationSettings& v = config.validation;
  const std::uint64_t seed = config.seeds.front();
  Json doc;
  doc["validator"] = name;
  if (name == "mcdiarmid") {
    McDiarmidOptions options;
    options.epsilon_grid = v.epsilon_grid;
    options.delta_inf_override = v.delta_inf_override;
    const PointFunction first_label = [](const Eigen::Ref<const Eigen::VectorXd>&, int y) { return y == 1 ? 1.0 : 0.0; };
    const TailReport report = validate_mcdiarmid(config.process, first_label, v.tail_n, v.tail_trials, seed, options);
    doc["report"] = to_json(report);
    doc["passed"] = report.violations() == 0;
  } else if (name == "lemma3") {
    const ProcessSpec& spec = config.process;
    const Eigen::Index atoms = spec.emission.alphabet.rows();
    Json tables = Json::array();
    bool passed = true;
    auto check = [&](const Eigen::MatrixXd& table, const std::string& label) {
      const Lemma3Report report = validate_lemma3(spec, table, v.lemma3_n);
      Json entry = to_json(report);
      entry["table"] = label;
      tables.push_back(std::move(entry));
      passed = passed && report.passed;
    };
    for (Eigen::Index a = 0; a < atoms; ++a) {
      for (int y = 1; y <= spec.num_classes; ++y) {
        Eigen::MatrixXd table = Eigen::MatrixXd::Zero(atoms, spec.num_classes);
        table(a, y - 1) = 1.0;
        check(table, "indicator_" + std::to_string(a) + "_" + std::to_string(y));
      }
    }
    CounterRng rng(seed, 0x1E3);
    Eigen::MatrixXd random_table(atoms, spec.num_classes);
    for (Eigen::Index i = 0; i < random_table.size(); ++i) random_table(i) = rng.uniform();
    check(random_table, "random");
    doc["tables"] = std::move(tables);
    doc["passed"] = passed;
  } else if (name == "symmetrization") {
    const SymmetrizationReport report = validate_symmetrization(standard_validation_class(config.process.num_classes),
                                                                config.process, v.symmetrization_n,
                                                                v.symmetrization_trials, seed);
    doc["report"] = to_json(report);
    doc["passed"] = !report.violation;
  } else if (name == "lemma4") {
    const Lemma4Report report = validate_lemma4(v.lemma4_samples, seed);
    doc["report"] = to_json(report);
    doc["passed"] = report.failures == 0;
  }
  return doc;
}

}  // namespace

CommandOutput cmd_validate(const ExperimentConfig& config, const fs::path& out_dir, int jobs, std::ostream& log) {
  config.validate();
  std::vector<Json> results(config.validators.size());
  parallel_for(results.size(), jobs, [&](std::size_t i) { results[i] = run_validator(config.validators[i], config); });

  OutputWriter writer(out_dir);
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::string& name = config.validators[i];
    writer.write("validate_" + name + ".json", results[i].dump(2) + "\n");
    log << name << ": " << (results[i].at("passed").get<bool>() ? "pass" : "FAIL") << '\n';
  }
  return writer.finish("validate", config);
}

CommandOutput cmd_rademacher(const ExperimentConfig& config, const fs::path& out_dir, int jobs, std::ostream& log) {
  config.validate();
  const CertificationPlan plan = config.plan();
  std::vector<SeedRun> runs(config.seeds.size());
  parallel_for(runs.size(), jobs, [&](std::size_t i) { runs[i] = train_for_seed(plan, config.seeds[i]); });

  const LabeledDataset& data = runs.front().train_data;
  std::vector<NetworkParams> networks;
  for (const auto& run : runs) networks.push_back(run.trained.params);

  Json entries = Json::array();
  for (double gamma : config.gamma_list) {
    const FunctionClass cls = loss_class(networks, gamma);
    const Eigen::MatrixXd values = cls.evaluate(data);
    const RademacherEstimate est = data.size() <= kMaxExactPoints
                                       ? rademacher_exact(values)
                                       : rademacher_mc(values, config.validation.rademacher_trials, config.seeds.front());
    Json covering = Json::array();
    for (const auto& net : networks) {
      const LayerNorms norms = layer_norms(net);
      covering.push_back(norms.any_zero_spectral()
                             ? Json(nullptr)
                             : Json(covering_rademacher_bound(data.input_norm(), gamma,
                                                              static_cast<double>(net.max_width()), data.size(), norms)));
    }
    Json entry;
    entry["gamma"] = gamma;
    entry["class_size"] = cls.size();
    entry["estimate"] = to_json(est);
    entry["covering_bounds"] = std::move(covering);
    log << "gamma " << format_double(gamma) << ": R_Z ~ " << est.mean << " (" << to_string(est.method) << ")\n";
    entries.push_back(std::move(entry));
  }

  OutputWriter writer(out_dir);
  Json doc;
  doc["n"] = data.size();
  doc["dataset_seed"] = data.seed;
  doc["results"] = std::move(entries);
  writer.write("rademacher.json", doc.dump(2) + "\n");
  return writer.finish("rademacher", config);
}

}  // namespace mixbound
