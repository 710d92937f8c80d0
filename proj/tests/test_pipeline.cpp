#include "hulldiff/pipeline.hpp"

#include <gtest/gtest.h>

using namespace hulldiff;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("hulldiff-test-" + name);
  std::filesystem::remove_all(p);
  return p;
}

const char* kTiny = R"(
[run]
seed = 7
workers = 1
cases = kayak

[dataset]
size = 16
resolution = 0.5

[surrogate]
hidden = 8,8
batch = 16
steps = 40
holdout_every = 4
score_rows = 64

[diffusion]
hidden = 16
batch = 16
steps = 40
timesteps = 20

[sample]
count = 6

[optimize]
population = 8
generations = 3

[evaluate]
resolution = 0.5
)";

RunContext tiny_context(const std::filesystem::path& out, std::ostream& log) {
  RunContext ctx;
  ctx.config = PipelineConfig::parse(kTiny);
  ctx.out = out;
  ctx.log = &log;
  return ctx;
}

std::map<std::string, std::string> csv_files(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.path().extension() == ".csv")
      out[std::filesystem::relative(e.path(), root).string()] = read_file(e.path());
  return out;
}

} // namespace

TEST(Config, DefaultsMatchBundledFile) {
  const PipelineConfig builtin;
  const auto file = PipelineConfig::load(HULLDIFF_SOURCE_DIR "/configs/default.cfg");
  EXPECT_EQ(builtin.hash(), file.hash());
  EXPECT_EQ(builtin.dataset_size(), 4096u);
  EXPECT_EQ(builtin.sample_count(), 512);
  EXPECT_EQ(builtin.ga().population, 100);
  EXPECT_EQ(builtin.ga().generations, 200);
  EXPECT_EQ(builtin.diffusion().steps, 1000);
  EXPECT_EQ(builtin.case_names().size(), 5u);
  const auto k = builtin.test_case("kayak");
  EXPECT_EQ(k.loa, 3.8);
  EXPECT_EQ(k.speed, 1.5);
  EXPECT_EQ(builtin.water().nu, 1.19e-6);
}

TEST(Config, UnknownKeyNamesPath) {
  try {
    PipelineConfig::parse("[surrogate]\nwidth = 3\n");
    FAIL() << "expected a configuration error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key_path(), "surrogate.width");
  }
  EXPECT_THROW(PipelineConfig::parse("[case.kayak]\nmass = 3\n"), ConfigError);
}

TEST(Config, InvalidValuesNamePath) {
  const auto path_of = [](const std::string& text) {
    try {
      PipelineConfig::parse(text);
    } catch (const ConfigError& e) {
      return e.key_path();
    }
    return std::string("none");
  };
  EXPECT_EQ(path_of("[dataset]\nsize = many\n"), "dataset.size");
  EXPECT_EQ(path_of("[surrogate]\nhidden = 8,,8\n"), "surrogate.hidden");
  EXPECT_EQ(path_of("[guidance]\ngamma = -1\n"), "guidance.gamma");
  EXPECT_EQ(path_of("[optimize]\npopulation = 9\n"), "optimize.population");
  EXPECT_EQ(path_of("[run]\ncases = kayak,tugboat\n"), "case.tugboat");
  EXPECT_EQ(path_of("[case.tug]\nloa = 20\n"), "case.tug.boa");
  EXPECT_EQ(path_of("[case.kayak]\ndraft = 0.5\n"), "case.kayak");
}

TEST(Config, CustomCaseAndInclude) {
  const auto dir = scratch("include");
  std::filesystem::create_directories(dir / "cases");
  write_file_atomic(dir / "cases" / "tug.cfg",
                    "[case.tug]\nloa = 30\nboa = 9\ndraft = 3\ndepth = 5\nvolume = 400\nspeed = 5\n");
  write_file_atomic(dir / "main.cfg", "[run]\ncases = tug\ninclude = cases/tug.cfg\n");
  const auto cfg = PipelineConfig::load(dir / "main.cfg");
  const auto c = cfg.test_case("tug");
  EXPECT_EQ(c.volume, 400.0);
  EXPECT_NEAR(c.draft_ratio(), 0.6, 1e-15);
  EXPECT_EQ(cfg.case_names(), std::vector<std::string>{"tug"});
}

TEST(Config, NumericSpellingDoesNotChangeHash) {
  const auto a = PipelineConfig::parse("[surrogate]\nlr = 0.001\n");
  const auto b = PipelineConfig::parse("[surrogate]\nlr = 1e-3\n");
  const auto c = PipelineConfig::parse("[surrogate]\nlr = 2e-3\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
  const auto d = PipelineConfig::parse("[run]\nout = elsewhere\nworkers = 3\n");
  EXPECT_EQ(d.hash(), PipelineConfig{}.hash());
}

TEST(Modes, GuidanceArms) {
  const auto cfg = PipelineConfig::parse("[guidance]\nlambda0 = 0.5\n");
  const auto full = mode_guidance(cfg, "full");
  EXPECT_EQ(full.gamma, 0.2);
  EXPECT_EQ(full.lambda0, 0.5);
  EXPECT_EQ(full.lambda1, 0.3);
  const auto cls = mode_guidance(PipelineConfig{}, "classifier-only");
  EXPECT_EQ(cls.gamma, 0.2);
  EXPECT_EQ(cls.lambda0, 0.0);
  EXPECT_EQ(cls.lambda1, 0.0);
  const auto off = mode_guidance(cfg, "unguided");
  EXPECT_EQ(off.gamma + off.lambda0 + off.lambda1, 0.0);
  EXPECT_THROW(mode_guidance(cfg, "partial"), ConfigError);
  EXPECT_FALSE(full.variance_scaled);
  const auto scaled = PipelineConfig::parse("[guidance]\nscaling = variance\n");
  EXPECT_TRUE(mode_guidance(scaled, "classifier-only").variance_scaled);
  EXPECT_THROW(PipelineConfig::parse("[guidance]\nscaling = sqrt\n").guidance(), ConfigError);
}

TEST(Commands, MissingUpstreamIsDependencyError) {
  std::ostringstream log;
  const auto ctx = tiny_context(scratch("missing"), log);
  try {
    cmd_optimize(ctx, "kayak");
    FAIL() << "expected a dependency error";
  } catch (const DependencyError& e) {
    EXPECT_NE(std::string(e.what()).find("dataset"), std::string::npos);
    EXPECT_EQ(exit_code(e), 2);
  }
  EXPECT_FALSE(std::filesystem::exists(ctx.out / ".lock"));
}

TEST(Commands, LockBlocksSecondCommand) {
  std::ostringstream log;
  const auto ctx = tiny_context(scratch("lock"), log);
  OutputLock held(ctx.out);
  EXPECT_THROW(cmd_gen_dataset(ctx), LockError);
  EXPECT_THROW(OutputLock{ctx.out}, LockError);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code(ConfigError("a", "b")), 1);
  EXPECT_EQ(exit_code(DependencyError("x")), 2);
  EXPECT_EQ(exit_code(NumericalError("x")), 3);
  EXPECT_EQ(exit_code(TrainingError("x")), 3);
  EXPECT_EQ(exit_code(LockError("x")), 1);
}

TEST(Commands, RunAllReproducibleAndIdempotent) {
  std::ostringstream log;
  const auto a = tiny_context(scratch("run-a"), log);
  const auto b = tiny_context(scratch("run-b"), log);
  cmd_run_all(a);
  cmd_run_all(b);
  const auto fa = csv_files(a.out), fb = csv_files(b.out);
  EXPECT_GT(fa.size(), 15u);
  EXPECT_EQ(fa, fb);

  std::size_t manifests = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(a.out))
    manifests += e.path().filename() == "manifest.txt" ? 1 : 0;
  EXPECT_EQ(manifests, 1u + 3u + 5u + 1u);
  const auto m = read_manifest(a.dataset_dir());
  ASSERT_TRUE(m);
  EXPECT_EQ(m->config_hash, a.config.hash());
  EXPECT_FALSE(m->seeds.empty());

  // A second pass finds every stage current and leaves files untouched.
  std::ostringstream again;
  auto c = a;
  c.log = &again;
  cmd_run_all(c);
  EXPECT_EQ(again.str().find("running"), std::string::npos);
  EXPECT_EQ(csv_files(a.out), fa);

  // Tampering with an output makes its stage stale.
  write_file_atomic(a.optimize_dir("kayak") / "history.csv", "generation\n");
  EXPECT_FALSE(up_to_date(a.optimize_dir("kayak"), read_manifest(a.optimize_dir("kayak"))->stage_hash));
  cmd_optimize(c, "kayak");
  EXPECT_EQ(csv_files(a.out), fa);

  const auto prov = read_file(a.sample_dir("kayak", "classifier-only") / "provenance.txt");
  EXPECT_NE(prov.find("lambda0 = 0\n"), std::string::npos);
  EXPECT_NE(prov.find("gamma = 0.20000000000000001\n"), std::string::npos);

  const auto samples = read_csv(a.sample_dir("kayak", "full") / "samples.csv");
  EXPECT_EQ(samples.rows.size(), 6u);
  EXPECT_EQ(samples.rows[0][samples.column("loa")], "3.7999999999999998");
}

TEST(Commands, SampleCountOverride) {
  std::ostringstream log;
  const auto ctx = tiny_context(scratch("count"), log);
  cmd_gen_dataset(ctx);
  cmd_train(ctx, "diffusion");
  cmd_sample(ctx, "kayak", "unguided", 3);
  EXPECT_EQ(read_csv(ctx.sample_dir("kayak", "unguided") / "samples.csv").rows.size(), 3u);
  EXPECT_THROW(cmd_sample(ctx, "kayak", "classifier-only", 3), DependencyError);
  EXPECT_THROW(cmd_train(ctx, "everything"), ConfigError);
}
