// Acceptance suite: one PASS/FAIL line per criterion.
// usage: acceptance <path to mixbound CLI> <configs directory>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "mixbound/harness.hpp"
#include "mixbound/norms.hpp"
#include "oracles.hpp"

using namespace mixbound;
using oracle::mat;
using oracle::vec;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, double limit_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = seconds < limit_seconds;
  const bool ok = out.passed && in_time;
  if (!ok) ++failures;
  std::printf("%s criterion %d: %s [%s; %.2fs, limit %.0fs]\n", ok ? "PASS" : "FAIL", id, title.c_str(),
              out.detail.c_str(), seconds, limit_seconds);
  std::fflush(stdout);
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c);
  return buf;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

PointFunction first_label() {
  return [](const Eigen::Ref<const Eigen::VectorXd>&, int y) { return y == 1 ? 1.0 : 0.0; };
}

Outcome phi_oracle() {
  std::vector<ProcessSpec> specs;
  specs.push_back(oracle::deterministic_chain(oracle::symmetric_kernel(0.9), vec({0.5, 0.5})));
  specs.push_back(oracle::deterministic_chain(oracle::symmetric_kernel(0.9), vec({1.0, 0.0})));
  specs.push_back(oracle::deterministic_chain(mat({{0.9, 0.1}, {0.2, 0.8}}), vec({2.0 / 3.0, 1.0 / 3.0})));
  specs.push_back(oracle::deterministic_chain(mat({{0.3, 0.7}, {0.3, 0.7}}), vec({0.5, 0.5})));
  specs.push_back(oracle::deterministic_chain(Eigen::MatrixXd::Identity(2, 2), vec({0.5, 0.5})));
  specs.push_back(oracle::deterministic_chain(mat({{0, 1, 0}, {0, 0, 1}, {0.5, 0, 0.5}}), vec({1, 0, 0})));
  CounterRng rng(2024, 1);
  for (int i = 0; i < 10; ++i) {
    const int s = 2 + i % 2;
    specs.push_back(oracle::deterministic_chain(oracle::random_kernel(s, rng), oracle::random_simplex(s, rng)));
  }
  double worst = 0.0;
  int comparisons = 0;
  for (std::size_t idx = 0; idx < specs.size(); ++idx) {
    const ProcessSpec& spec = specs[idx];
    for (int k = 1; k <= 3; ++k) {
      for (int n_max = 1; n_max <= 4; ++n_max) {
        const int future_len = spec.num_states() == 2 ? 3 : (n_max <= 2 ? 2 : 1);
        const double slow = brute_force_phi(spec, k, n_max, future_len);
        worst = std::max(worst, std::abs(phi_coefficient(spec, k, n_max, false) - slow));
        ++comparisons;
      }
    }
  }
  return {worst <= 1e-12 && specs.size() >= 12,
          std::to_string(specs.size()) + " specs, " + std::to_string(comparisons) + " comparisons, max diff " +
              fmt("%.3g", worst)};
}

Outcome lemma3_exactness() {
  std::vector<ProcessSpec> specs;
  specs.push_back(oracle::deterministic_chain(oracle::symmetric_kernel(0.9), vec({1.0, 0.0})));
  specs.push_back(oracle::deterministic_chain(oracle::symmetric_kernel(0.9), vec({0.5, 0.5})));
  specs.push_back(oracle::deterministic_chain(mat({{0.9, 0.1}, {0.2, 0.8}}), vec({0.0, 1.0})));
  for (double drift : {0.0, 0.3, 0.8}) {
    specs.push_back(oracle::noisy_discrete(oracle::symmetric_kernel(0.9), vec({1.0, 0.0}), drift));
    specs.push_back(oracle::noisy_discrete(mat({{0.6, 0.4}, {0.1, 0.9}}), vec({0.2, 0.8}), drift));
  }
  CounterRng rng(303, 0);
  for (int i = 0; i < 3; ++i) {
    ProcessSpec spec = oracle::deterministic_chain(oracle::random_kernel(3, rng), vec({1, 0, 0}));
    spec.emission.perturbation = Eigen::MatrixXd::Constant(3, 3, 1.0 / 3.0);
    spec.emission.drift.amplitude = 0.5;
    specs.push_back(spec);
  }

  double worst = 0.0;
  int tables = 0;
  bool all = true;
  for (const auto& spec : specs) {
    const Eigen::Index atoms = spec.emission.alphabet.rows();
    for (int t = 0; t < 4; ++t) {
      Eigen::MatrixXd table(atoms, spec.num_classes);
      for (Eigen::Index i = 0; i < table.size(); ++i) table(i) = t == 0 ? (i == 0 ? 1.0 : 0.0) : rng.uniform();
      const Lemma3Report r = validate_lemma3(spec, table, 50);
      worst = std::max(worst, r.max_slack_violation);
      all = all && r.passed;
      ++tables;
    }
  }

  // tight case: the gap equals mu_i
  Eigen::MatrixXd indicator = Eigen::MatrixXd::Zero(2, 2);
  indicator(0, 0) = 1.0;
  const Lemma3Report tight = validate_lemma3(specs.front(), indicator, 50);
  const double tight_err = (tight.gap - tight.mu).cwiseAbs().maxCoeff();
  const bool ok = all && specs.size() >= 10 && tight_err <= 1e-12;
  return {ok, std::to_string(specs.size()) + " specs, " + std::to_string(tables) + " tables, max slack " +
                  fmt("%.3g", worst) + ", tight-case |gap - mu| " + fmt("%.3g", tight_err)};
}

Outcome mcdiarmid_tails() {
  const std::int64_t trials = 100000;
  const ProcessSpec iid = oracle::deterministic_chain(mat({{0.5, 0.5}, {0.5, 0.5}}), vec({0.5, 0.5}));
  const ProcessSpec sticky = oracle::deterministic_chain(oracle::symmetric_kernel(0.9), vec({1.0, 0.0}));
  const ProcessSpec three =
      oracle::deterministic_chain(mat({{0.8, 0.1, 0.1}, {0.2, 0.7, 0.1}, {0.1, 0.2, 0.7}}), vec({1, 0, 0}));
  std::size_t violations = 0;
  for (const auto* spec : {&iid, &sticky, &three}) {
    violations += validate_mcdiarmid(*spec, first_label(), 50, trials, 17).violations();
  }
  McDiarmidOptions corrupt;
  corrupt.delta_inf_override = 0.1;
  const std::size_t control = validate_mcdiarmid(sticky, first_label(), 50, trials, 17, corrupt).violations();
  return {violations == 0 && control >= 1,
          std::to_string(violations) + " violations on 3 chains, negative control flags " + std::to_string(control)};
}

Outcome symmetrization() {
  const ProcessSpec gaussian = oracle::default_gaussian();
  const ProcessSpec discrete = oracle::noisy_discrete(oracle::symmetric_kernel(0.9), vec({1.0, 0.0}), 0.5);
  const ProcessSpec coin = oracle::noisy_discrete(mat({{0.5, 0.5}, {0.5, 0.5}}), vec({0.5, 0.5}), 0.0);
  FunctionClass pair;
  pair.label = "pair";
  pair.members = {[](const Eigen::Ref<const Eigen::VectorXd>& x, int) { return x(0) > 0 ? 1.0 : 0.0; },
                  [](const Eigen::Ref<const Eigen::VectorXd>&, int y) { return y == 2 ? 1.0 : 0.0; }};
  const FunctionClass standard = standard_validation_class(2);

  int checks = 0;
  int violations = 0;
  double worst = -1e9;
  for (const FunctionClass* cls : {static_cast<const FunctionClass*>(&pair), &standard}) {
    for (const auto* spec : {&gaussian, &discrete, &coin}) {
      for (std::int64_t n : {5, 8, 10}) {
        const SymmetrizationReport r = validate_symmetrization(*cls, *spec, n, 2000, 40 + static_cast<std::uint64_t>(n));
        const double excess = r.lhs - r.rhs - 3.0 * (r.lhs_std_error + r.rhs_std_error);
        worst = std::max(worst, excess);
        violations += excess > 0.0 ? 1 : 0;
        ++checks;
      }
    }
  }
  return {violations == 0, std::to_string(checks) + " class x spec x n checks, " + std::to_string(violations) +
                               " violations, max lhs - rhs - 3se " + fmt("%.4f", worst)};
}

Outcome lemma4() {
  const Lemma4Report r = validate_lemma4(100000, 2718);
  return {r.failures == 0 && r.samples == 100000,
          std::to_string(r.failures) + " failures over " + std::to_string(r.samples) + " triples"};
}

Outcome rademacher_oracle() {
  std::vector<FunctionClass> classes;
  classes.push_back(standard_validation_class(2));
  CounterRng rng(606, 0);
  std::vector<NetworkParams> nets;
  for (int i = 0; i < 4; ++i) nets.push_back(oracle::random_network({2, 6, 2}, rng, ActivationKind::relu));
  classes.push_back(loss_class(nets, 0.5));
  classes.push_back(loss_class(nets, 2.0));

  int checks = 0;
  int misses = 0;
  double worst = 0.0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (std::int64_t n : {2, 5, 8, 10}) {
      const LabeledDataset data = sample_sequence(oracle::default_gaussian(), n, 60 + static_cast<std::uint64_t>(n));
      const double exact = empirical_rademacher_exact(classes[c], data).mean;
      const RademacherEstimate mc = empirical_rademacher_mc(classes[c], data, 4000, 7 * c + static_cast<std::uint64_t>(n));
      const double z = mc.std_error > 0 ? std::abs(mc.mean - exact) / mc.std_error : (mc.mean == exact ? 0.0 : 1e9);
      worst = std::max(worst, z);
      misses += z > 3.0 ? 1 : 0;
      ++checks;
    }
  }
  return {misses == 0, std::to_string(checks) + " class x n checks, max |mc - exact| / se " + fmt("%.2f", worst)};
}

Outcome norm_oracle() {
  CounterRng rng(707, 0);
  double worst = 0.0;
  int matrices = 0;
  for (int size : {4, 16, 64}) {
    for (int i = 0; i < 100; ++i) {
      const Eigen::MatrixXd a = oracle::random_matrix(size, size, rng);
      const double truth = oracle::jacobi_singular_values(a)(0);
      worst = std::max(worst, std::abs(spectral_norm(a).value - truth) / truth);
      ++matrices;
    }
  }
  double homogeneity = 0.0;
  for (int i = 0; i < 20; ++i) {
    const NetworkParams net = oracle::random_network({4, 16, 8, 3}, rng);
    const double base = spectral_complexity(net);
    for (double c : {0.5, 3.0}) {
      NetworkParams scaled = net;
      scaled.layers[static_cast<std::size_t>(i % 3)] *= c;
      homogeneity = std::max(homogeneity, std::abs(spectral_complexity(scaled) - c * base) / (c * base));
    }
  }
  return {worst <= 1e-9 && homogeneity <= 1e-9, std::to_string(matrices) + " matrices, max rel err " +
                                                    fmt("%.3g", worst) + ", homogeneity rel err " +
                                                    fmt("%.3g", homogeneity)};
}

Outcome end_to_end(const fs::path& configs) {
  ExperimentConfig config = load_config(configs / "default.json");
  config.n_train = 2000;
  config.delta = 0.05;
  config.gamma_list = {0.5, 1.0};
  config.seeds.clear();
  for (std::uint64_t s = 1; s <= 20; ++s) config.seeds.push_back(s);
  const auto reports = run_certification(config.plan(), 4);
  int worst_count = 20;
  std::string detail;
  for (std::size_t g = 0; g < config.gamma_list.size(); ++g) {
    int holds = 0;
    for (std::size_t s = 0; s < config.seeds.size(); ++s) holds += reports[s * config.gamma_list.size() + g].bound_holds ? 1 : 0;
    worst_count = std::min(worst_count, holds);
    detail += "gamma " + fmt("%g", config.gamma_list[g]) + ": " + std::to_string(holds) + "/20; ";
  }
  double min_bound = 1e300;
  for (const auto& r : reports) min_bound = std::min(min_bound, r.total_bound);
  detail += "smallest total bound " + fmt("%.4g", min_bound);
  return {worst_count >= 19, detail};
}

Outcome iid_reduction() {
  const ProcessSpec coin = oracle::deterministic_chain(mat({{0.5, 0.5}, {0.5, 0.5}}), vec({0.5, 0.5}));
  const MixingProfile profile = mixing_profile(coin, 300);
  const bool zero_profile = profile.phi.isZero(0.0) && profile.mu.isZero(0.0) && profile.delta_inf == 1.0;
  CounterRng rng(909, 0);
  const NetworkParams net = oracle::random_network({1, 6, 2}, rng);
  const LabeledDataset data = sample_sequence(coin, 300, 5);
  const BoundReport from_spec = network_certificate(data, net, 0.5, profile, 0.05);
  const BoundReport from_iid = network_certificate(data, net, 0.5, MixingProfile::iid(300), 0.05);

  const LayerNorms norms = layer_norms(net);
  const double n = 300.0;
  const double formula = empirical_loss(net, data, 0.5) + 0.0 +
                         3.0 * 1.0 * std::sqrt(std::log(2.0 / 0.05) / (2.0 * n)) + 8.0 / std::pow(n, 1.5) +
                         72.0 * data.input_norm() * std::log(2.0 * 6.0) * std::log(n) / (0.5 * n) *
                             norms.ratio_aggregate() * norms.lipschitz_product();
  const bool ok = zero_profile && from_spec.total_bound == formula && from_iid.total_bound == formula;
  return {ok, std::string("profile zero: ") + (zero_profile ? "yes" : "no") + ", bound " + fmt("%.17g", formula) +
                  (ok ? " matches bit for bit" : " differs")};
}

Outcome determinism(const fs::path& cli, const fs::path& configs) {
  const fs::path root = fs::temp_directory_path() / "mixbound_acceptance_determinism";
  fs::remove_all(root);
  const fs::path config = configs / "default.json";
  for (const char* jobs : {"1", "8"}) {
    for (const char* cmd : {"generate", "certify"}) {
      const std::string line = "\"" + cli.string() + "\" " + cmd + " --config \"" + config.string() + "\" --out \"" +
                               (root / jobs).string() + "\" --jobs " + jobs + " > /dev/null";
      if (std::system(line.c_str()) != 0) return {false, std::string("command failed: ") + cmd};
    }
  }
  int files = 0;
  int differing = 0;
  for (const auto& entry : fs::directory_iterator(root / "1")) {
    const fs::path other = root / "8" / entry.path().filename();
    ++files;
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) ++differing;
  }
  int other_count = 0;
  for ([[maybe_unused]] const auto& entry : fs::directory_iterator(root / "8")) ++other_count;
  return {files > 0 && differing == 0 && other_count == files,
          std::to_string(files) + " files compared, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: acceptance <mixbound CLI> <configs dir>\n";
    return 2;
  }
  const fs::path cli = argv[1];
  const fs::path configs = argv[2];

  criterion(1, "phi matches the brute-force oracle", 60, phi_oracle);
  criterion(2, "marginal gaps bounded by mu_i exactly", 60, lemma3_exactness);
  criterion(3, "McDiarmid tails hold, negative control flags", 300, mcdiarmid_tails);
  criterion(4, "symmetrization lhs <= 2 R_n", 120, symmetrization);
  criterion(5, "zero-one indicator below the ramp loss pointwise", 10, lemma4);
  criterion(6, "Monte Carlo Rademacher agrees with enumeration", 60, rademacher_oracle);
  criterion(7, "spectral norm oracle and T_A homogeneity", 60, norm_oracle);
  criterion(8, "end-to-end bound validity over 20 seeds", 600, [&] { return end_to_end(configs); });
  criterion(9, "iid reduction is bit identical", 1, iid_reduction);
  criterion(10, "generate and certify are deterministic across --jobs", 600, [&] { return determinism(cli, configs); });

  std::printf("%s: %d of 10 criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
