// hulldiff command-line front end.

#include "hulldiff/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;

  hulldiff::CommandOptions options() const {
    hulldiff::CommandOptions o;
    o.config = config;
    if (seed_opt && seed_opt->count())
      o.seed = seed;
    if (out_opt && out_opt->count())
      o.out = out;
    o.force = force;
    return o;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "config file (defaults apply when omitted)")->check(CLI::ExistingFile);
  c.seed_opt = cmd->add_option("--seed", c.seed, "master seed, overrides run.seed");
  c.out_opt = cmd->add_option("--out", c.out, "output root, overrides run.out");
  cmd->add_flag("--force", c.force, "recompute even when the manifest is current");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional diffusion hull generation pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", hulldiff::kVersion);

  // One Common per subcommand; CLI11 binds options to storage at setup.
  std::map<std::string, Common> common;
  const auto sub = [&](const char* name, const char* help) {
    auto* cmd = app.add_subcommand(name, help);
    add_common(cmd, common[name]);
    return cmd;
  };

  auto* gen = sub("gen-dataset", "generate hulls and measure geometry and resistance");

  std::string which = "all";
  auto* train = sub("train", "train surrogates, classifier or denoiser");
  train->add_option("--which", which, "regressors, classifier, diffusion or all")
      ->check(CLI::IsMember({"regressors", "classifier", "diffusion", "all"}));

  std::string sample_case, mode = "full";
  int n = 0;
  auto* sample = sub("sample", "draw hulls for a test case");
  sample->add_option("--case", sample_case, "test case name")->required();
  sample->add_option("--mode", mode, "full, classifier-only or unguided")
      ->check(CLI::IsMember({"full", "classifier-only", "unguided"}));
  auto* n_opt = sample->add_option("--n", n, "number of hulls, overrides sample.count")->check(CLI::PositiveNumber);

  std::string opt_case;
  auto* optimize = sub("optimize", "run the genetic optimizer for a test case");
  optimize->add_option("--case", opt_case, "test case name")->required();

  std::string eval_case;
  auto* evaluate = sub("evaluate", "audit samples and optimizer results by re-simulation");
  evaluate->add_option("--case", eval_case, "test case name")->required();

  auto* run_all = sub("run-all", "every stage for every configured case");

  auto* show = sub("show-config", "print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const auto name = app.get_subcommands().front()->get_name();
    const auto ctx = hulldiff::make_context(common[name].options());
    if (show->parsed())
      std::cout << ctx.config.dump();
    else if (gen->parsed())
      hulldiff::cmd_gen_dataset(ctx);
    else if (train->parsed())
      hulldiff::cmd_train(ctx, which);
    else if (sample->parsed())
      hulldiff::cmd_sample(ctx, sample_case, mode, n_opt->count() ? std::optional<int>(n) : std::nullopt);
    else if (optimize->parsed())
      hulldiff::cmd_optimize(ctx, opt_case);
    else if (evaluate->parsed())
      hulldiff::cmd_evaluate(ctx, eval_case);
    else if (run_all->parsed())
      hulldiff::cmd_run_all(ctx);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return hulldiff::exit_code(e);
  }
  return 0;
}
