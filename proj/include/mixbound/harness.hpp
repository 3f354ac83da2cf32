#pragma once

// Experiment configuration and the CLI command implementations.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mixbound/bounds.hpp"
#include "mixbound/io.hpp"

namespace mixbound {

struct ValidationSettings {
  std::int64_t tail_n = 50;
  std::int64_t tail_trials = 100000;
  std::vector<double> epsilon_grid = kDefaultEpsilonGrid;
  std::optional<double> delta_inf_override;
  std::int64_t lemma3_n = 50;
  std::int64_t symmetrization_n = 8;
  std::int64_t symmetrization_trials = 2000;
  std::int64_t lemma4_samples = 100000;
  std::int64_t rademacher_trials = 2000;
};

inline const std::vector<std::string> kValidatorNames{"mcdiarmid", "lemma3", "symmetrization", "lemma4"};

struct ExperimentConfig {
  ProcessSpec process;
  Architecture arch;
  TrainConfig train;
  std::int64_t n_train = 0;
  std::int64_t m_target = 0;
  std::vector<double> gamma_list;
  double delta = 0.05;
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "out";
  std::vector<std::string> validators;
  ValidationSettings validation;

  /// Throws Error(Usage) on invalid counts, gammas, delta or validator names.
  void validate() const;

  CertificationPlan plan() const;
};

Json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const Json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& config);

/// Files written by a command, with their content hashes.
struct CommandOutput {
  std::vector<std::filesystem::path> files;
  std::filesystem::path manifest;
};

/// One training sequence file per seed; prints the spec digest.
CommandOutput cmd_generate(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                           std::ostream& log);
/// One trained network file per seed.
CommandOutput cmd_train(const ExperimentConfig& config, const std::filesystem::path& out_dir, int jobs,
                        std::ostream& log);
/// One JSON report per seed x gamma plus summary.csv.
CommandOutput cmd_certify(const ExperimentConfig& config, const std::filesystem::path& out_dir, int jobs,
                          std::ostream& log);
/// One JSON report per configured validator.
CommandOutput cmd_validate(const ExperimentConfig& config, const std::filesystem::path& out_dir, int jobs,
                           std::ostream& log);
/// Rademacher estimates of the trained networks' loss class on the first
/// seed's sequence, beside the covering bound.
CommandOutput cmd_rademacher(const ExperimentConfig& config, const std::filesystem::path& out_dir, int jobs,
                             std::ostream& log);

/// CSV table, one row per report.
void write_summary_csv(std::ostream& out, const std::vector<BoundReport>& reports);

/// Built-in finite class used by the symmetrization validator: label
/// indicators, sign thresholds on the first input coordinate and the zero function.
FunctionClass standard_validation_class(int num_classes);

}  // namespace mixbound
