#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mixbound/error.hpp"
#include "mixbound/harness.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  int jobs = 1;
};

void add_common(CLI::App* sub, Options& opts, bool with_jobs) {
  sub->add_option("--config", opts.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", opts.out, "output directory (defaults to the config's output_dir)");
  if (with_jobs) sub->add_option("--jobs", opts.jobs, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalization certificates for networks trained on mixing sequences"};
  app.require_subcommand(1);
  Options opts;

  auto* generate = app.add_subcommand("generate", "sample one training sequence per seed");
  auto* train = app.add_subcommand("train", "train one network per seed");
  auto* certify = app.add_subcommand("certify", "certify every seed x gamma combination");
  auto* validate = app.add_subcommand("validate", "run the configured validators");
  auto* rademacher = app.add_subcommand("rademacher", "estimate the loss class Rademacher complexity");
  add_common(generate, opts, true);
  for (auto* sub : {train, certify, validate, rademacher}) add_common(sub, opts, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  using namespace mixbound;
  try {
    const ExperimentConfig config = load_config(opts.config);
    const std::filesystem::path out = opts.out.empty() ? std::filesystem::path(config.output_dir) : std::filesystem::path(opts.out);
    CommandOutput result;
    if (generate->parsed()) {
      result = cmd_generate(config, out, std::cout);
    } else if (train->parsed()) {
      result = cmd_train(config, out, opts.jobs, std::cout);
    } else if (certify->parsed()) {
      result = cmd_certify(config, out, opts.jobs, std::cout);
    } else if (validate->parsed()) {
      result = cmd_validate(config, out, opts.jobs, std::cout);
    } else {
      result = cmd_rademacher(config, out, opts.jobs, std::cout);
    }
    std::cout << "manifest " << result.manifest.string() << '\n';
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return e.code() == ErrorCode::Usage ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
