#pragma once

// Config-driven pipeline. Every stage owns one directory under the output
// root and finishes it with manifest.txt. A stage whose manifest matches its
// inputs is skipped unless forced.
//
//   <out>/dataset/                      hulls.csv, hulls.meta
//   <out>/models/{regressors,classifier,diffusion}/
//   <out>/cases/<case>/sample-<mode>/   samples.csv, provenance.txt
//   <out>/cases/<case>/optimize/        population.csv, history.csv
//   <out>/cases/<case>/evaluate/        report CSVs
//   <out>/summary/                      per-case reports stacked

#include "hulldiff/evaluate.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <charconv>
#include <chrono>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>

namespace hulldiff {

inline constexpr const char* kVersion = "0.1.0";

class LockError : public Error {
public:
  using Error::Error;
};

// ---- Config ----------------------------------------------------------------

struct ConfigKey {
  const char* key;
  const char* value;
  const char* doc;
};

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys{
      {"run.seed", "1", "master seed; every stage seed is derived from it"},
      {"run.out", "runs/default", "output root"},
      {"run.workers", "0", "worker threads, 0 for one per core"},
      {"run.cases", "supercarrier,kayak,neopanamax,frigate,ropax", "cases processed by run-all"},
      {"dataset.size", "4096", "feasible hulls; as many infeasible vectors are added"},
      {"dataset.resolution", "1", "resistance grid resolution multiplier"},
      {"water.rho", "1025", "density, kg/m^3"},
      {"water.g", "9.81", "gravity, m/s^2"},
      {"water.nu", "1.19e-6", "kinematic viscosity, m^2/s"},
      {"surrogate.hidden", "256,256,256,256", "hidden widths of the four surrogates"},
      {"surrogate.batch", "256", "minibatch size"},
      {"surrogate.steps", "20000", "Adam steps per model"},
      {"surrogate.lr", "0.001", "Adam learning rate"},
      {"surrogate.holdout_every", "10", "every k-th record is held out for scoring"},
      {"surrogate.score_rows", "20000", "held-out rows drawn for R^2"},
      {"diffusion.hidden", "256,256,256,256", "denoiser hidden widths"},
      {"diffusion.batch", "256", "minibatch size"},
      {"diffusion.steps", "80000", "Adam steps"},
      {"diffusion.lr", "0.001", "Adam learning rate"},
      {"diffusion.timesteps", "1000", "diffusion steps T"},
      {"diffusion.beta_start", "0.0001", "beta_1 of the linear schedule"},
      {"diffusion.beta_end", "0.02", "beta_T of the linear schedule"},
      {"guidance.gamma", "0.2", "feasibility classifier weight"},
      {"guidance.lambda0", "0.3", "resistance weight (full mode only)"},
      {"guidance.lambda1", "0.3", "volume weight (full mode only)"},
      {"guidance.scaling", "literal", "literal, or variance to scale guidance by sigma_t^2"},
      {"sample.count", "512", "hulls per sampling run"},
      {"optimize.population", "100", "population size"},
      {"optimize.generations", "200", "generations"},
      {"optimize.crossover_prob", "0.9", "SBX crossover probability"},
      {"optimize.sbx_eta", "15", "SBX distribution index"},
      {"optimize.mutation_eta", "20", "polynomial mutation distribution index"},
      {"evaluate.resolution", "1", "resistance grid resolution for re-simulation"},
  };
  return keys;
}

inline constexpr std::array<const char*, 6> kCaseFields{"loa", "boa", "draft", "depth", "volume", "speed"};

class PipelineConfig {
public:
  PipelineConfig() {
    for (const auto& k : config_keys())
      values_[k.key] = k.value;
    for (const auto& c : bundled_cases()) {
      const std::array<double, 6> v{c.loa, c.boa, c.draft, c.depth, c.volume, c.speed};
      for (std::size_t i = 0; i < kCaseFields.size(); ++i)
        values_["case." + c.name + "." + kCaseFields[i]] = shortest(v[i]);
    }
  }

  static PipelineConfig load(const std::filesystem::path& p) {
    PipelineConfig c;
    c.merge_file(p, 0);
    c.validate();
    return c;
  }

  static PipelineConfig parse(const std::string& text, const std::filesystem::path& base = ".") {
    PipelineConfig c;
    c.merge_text(text, base, "<text>", 0);
    c.validate();
    return c;
  }

  void set(const std::string& key, const std::string& value) {
    if (!values_.count(key) && !is_case_key(key))
      throw ConfigError(key, "unknown key");
    values_[key] = trim(value);
  }

  const std::string& text(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end())
      throw ConfigError(key, "missing");
    return it->second;
  }

  double real(const std::string& key) const {
    const auto& s = text(key);
    double v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
      throw ConfigError(key, "expected a number, got '" + s + "'");
    return v;
  }

  double positive(const std::string& key) const {
    const double v = real(key);
    if (!(v > 0))
      throw ConfigError(key, "must be positive");
    return v;
  }

  long long integer(const std::string& key, long long lo) const {
    const auto& s = text(key);
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
      throw ConfigError(key, "expected an integer, got '" + s + "'");
    if (v < lo)
      throw ConfigError(key, "must be at least " + std::to_string(lo));
    return v;
  }

  std::vector<int> widths(const std::string& key) const {
    std::vector<int> out;
    for (const auto& part : split(text(key), ',')) {
      const auto s = trim(part);
      int v = 0;
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size() || v < 1)
        throw ConfigError(key, "expected positive comma-separated widths, got '" + text(key) + "'");
      out.push_back(v);
    }
    if (out.empty())
      throw ConfigError(key, "needs at least one hidden layer");
    return out;
  }

  std::uint64_t seed() const { return static_cast<std::uint64_t>(integer("run.seed", 0)); }
  std::filesystem::path out() const { return text("run.out"); }
  unsigned workers() const {
    const auto w = integer("run.workers", 0);
    return w == 0 ? worker_count() : static_cast<unsigned>(w);
  }
  std::size_t dataset_size() const { return static_cast<std::size_t>(integer("dataset.size", 1)); }
  int sample_count() const { return static_cast<int>(integer("sample.count", 1)); }

  WaterConstants water() const { return {positive("water.rho"), positive("water.g"), positive("water.nu")}; }

  GridOptions dataset_grid() const {
    GridOptions g;
    g.resolution = positive("dataset.resolution");
    g.water = water();
    return g;
  }

  GridOptions audit_grid() const {
    GridOptions g;
    g.resolution = positive("evaluate.resolution");
    g.water = water();
    return g;
  }

  TrainConfig train(const std::string& section) const {
    TrainConfig t;
    t.batch = static_cast<int>(integer(section + ".batch", 1));
    t.steps = static_cast<int>(integer(section + ".steps", 1));
    t.lr = positive(section + ".lr");
    return t;
  }

  SurrogateConfig surrogate() const {
    SurrogateConfig s;
    s.hidden = widths("surrogate.hidden");
    s.train = train("surrogate");
    s.holdout_every = static_cast<int>(integer("surrogate.holdout_every", 2));
    s.water = water();
    return s;
  }

  int score_rows() const { return static_cast<int>(integer("surrogate.score_rows", 2)); }

  DiffusionConfig diffusion() const {
    DiffusionConfig d;
    d.hidden = widths("diffusion.hidden");
    d.train = train("diffusion");
    d.steps = static_cast<int>(integer("diffusion.timesteps", 1));
    d.beta_lo = positive("diffusion.beta_start");
    d.beta_hi = positive("diffusion.beta_end");
    if (!(d.beta_lo <= d.beta_hi && d.beta_hi < 1))
      throw ConfigError("diffusion.beta_end", "need beta_start <= beta_end < 1");
    return d;
  }

  Guidance guidance() const {
    Guidance g{real("guidance.gamma"), real("guidance.lambda0"), real("guidance.lambda1")};
    for (const char* k : {"guidance.gamma", "guidance.lambda0", "guidance.lambda1"})
      if (real(k) < 0)
        throw ConfigError(k, "must be non-negative");
    const auto& sc = text("guidance.scaling");
    if (sc != "literal" && sc != "variance")
      throw ConfigError("guidance.scaling", "expected literal or variance, got '" + sc + "'");
    g.variance_scaled = sc == "variance";
    return g;
  }

  GaOptions ga() const {
    GaOptions o;
    o.population = static_cast<int>(integer("optimize.population", 4));
    if (o.population % 2 != 0)
      throw ConfigError("optimize.population", "must be even");
    o.generations = static_cast<int>(integer("optimize.generations", 1));
    o.crossover_prob = real("optimize.crossover_prob");
    if (o.crossover_prob < 0 || o.crossover_prob > 1)
      throw ConfigError("optimize.crossover_prob", "must lie in [0, 1]");
    o.sbx_eta = positive("optimize.sbx_eta");
    o.mutation_eta = positive("optimize.mutation_eta");
    return o;
  }

  std::vector<std::string> case_names() const {
    std::vector<std::string> out;
    for (const auto& s : split(text("run.cases"), ','))
      if (!trim(s).empty())
        out.push_back(trim(s));
    if (out.empty())
      throw ConfigError("run.cases", "lists no cases");
    return out;
  }

  TestCase test_case(const std::string& name) const {
    TestCase c;
    c.name = name;
    std::array<double*, 6> f{&c.loa, &c.boa, &c.draft, &c.depth, &c.volume, &c.speed};
    bool any = false;
    for (std::size_t i = 0; i < kCaseFields.size(); ++i)
      any = any || values_.count(case_key(name, i));
    if (!any)
      throw ConfigError("case." + name, "unknown test case");
    for (std::size_t i = 0; i < kCaseFields.size(); ++i)
      *f[i] = positive(case_key(name, i));
    try {
      check_case(c);
    } catch (const DomainError& e) {
      throw ConfigError("case." + name, e.what());
    }
    return c;
  }

  /// "key = value" lines for every key under one of the prefixes. Numbers
  /// are reformatted so that 3.8 and 3.80 hash alike.
  std::string canonical(std::initializer_list<std::string_view> prefixes) const {
    std::string s;
    for (const auto& [k, v] : values_)
      for (auto p : prefixes)
        if (k.rfind(p, 0) == 0) {
          s += k + " = " + normalized(v) + "\n";
          break;
        }
    return s;
  }

  /// Hash of everything that can change an output; run.out and run.workers
  /// are excluded.
  std::string hash() const {
    std::string s;
    for (const auto& [k, v] : values_)
      if (k != "run.out" && k != "run.workers")
        s += k + " = " + normalized(v) + "\n";
    return hex64(fnv1a(s));
  }

  std::string dump() const {
    std::string s;
    std::string section;
    for (const auto& [k, v] : values_) {
      const auto dot = k.rfind('.');
      const auto sec = k.substr(0, dot);
      if (sec != section) {
        s += (section.empty() ? "[" : "\n[") + sec + "]\n";
        section = sec;
      }
      s += k.substr(dot + 1) + " = " + v + "\n";
    }
    return s;
  }

  void validate() const {
    (void)seed();
    (void)workers();
    (void)dataset_size();
    (void)sample_count();
    (void)dataset_grid();
    (void)audit_grid();
    (void)surrogate();
    (void)score_rows();
    (void)diffusion();
    (void)guidance();
    (void)ga();
    for (const auto& n : case_names())
      (void)test_case(n);
    for (const auto& [k, v] : values_)
      if (is_case_key(k))
        (void)test_case(k.substr(5, k.rfind('.') - 5));
  }

private:
  std::map<std::string, std::string> values_;

  static std::string shortest(double d) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, d);
    return std::string(buf, r.ptr);
  }

  static std::string normalized(const std::string& v) {
    double d = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), d);
    return r.ec == std::errc() && r.ptr == v.data() + v.size() ? format_double(d) : v;
  }

  static std::string case_key(const std::string& name, std::size_t i) {
    return "case." + name + "." + kCaseFields[i];
  }

  static bool is_case_key(const std::string& key) {
    if (key.rfind("case.", 0) != 0)
      return false;
    const auto dot = key.rfind('.');
    const auto name = key.substr(5, dot - 5);
    if (dot <= 5 || name.empty() || name.find('.') != std::string::npos)
      return false;
    for (char ch : name)
      if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_'))
        return false;
    const auto field = key.substr(dot + 1);
    return std::find(kCaseFields.begin(), kCaseFields.end(), field) != kCaseFields.end();
  }

  void merge_file(const std::filesystem::path& p, int depth) {
    std::string text;
    try {
      text = read_file(p);
    } catch (const DependencyError&) {
      throw ConfigError("", "cannot read config file " + p.string());
    }
    merge_text(text, p.parent_path(), p.string(), depth);
  }

  void merge_text(const std::string& text, const std::filesystem::path& base, const std::string& origin, int depth) {
    if (depth > 8)
      throw ConfigError("include", "includes nested too deeply at " + origin);
    std::string section;
    const auto lines = split(text, '\n');
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto line = trim(lines[i]);
      const auto where = origin + ":" + std::to_string(i + 1);
      if (line.empty() || line[0] == '#')
        continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError("", where + ": malformed section header");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(section, where + ": expected key = value");
      const auto key = trim(line.substr(0, eq));
      const auto value = trim(line.substr(eq + 1));
      if (key == "include") {
        merge_file(base / value, depth + 1);
        continue;
      }
      const auto full = section.empty() ? key : section + "." + key;
      if (!values_.count(full) && !is_case_key(full))
        throw ConfigError(full, "unknown key (" + where + ")");
      values_[full] = value;
    }
  }
};

// ---- Manifests and locking -------------------------------------------------

inline std::uint64_t stage_seed(std::uint64_t seed, std::string_view tag) { return derive_seed(seed, fnv1a(tag)); }

struct Manifest {
  std::string stage, stage_hash, config_hash;
  std::vector<std::pair<std::string, std::string>> seeds, upstream, files;
};

inline std::string manifest_text(const Manifest& m) {
  std::string s;
  s += "stage = " + m.stage + "\n";
  s += "stage_hash = " + m.stage_hash + "\n";
  s += "config_hash = " + m.config_hash + "\n";
  s += std::string("version = ") + kVersion + "\n";
  s += std::string("scheme = ") + kSchemeVersion + "\n";
  for (const auto& [k, v] : m.seeds)
    s += "seed." + k + " = " + v + "\n";
  for (const auto& [k, v] : m.upstream)
    s += "upstream." + k + " = " + v + "\n";
  for (const auto& [k, v] : m.files)
    s += "file." + k + " = " + v + "\n";
  return s;
}

inline std::optional<Manifest> read_manifest(const std::filesystem::path& dir) {
  const auto p = dir / "manifest.txt";
  if (!std::filesystem::exists(p))
    return std::nullopt;
  Manifest m;
  for (const auto& [k, v] : parse_key_values(read_file(p))) {
    if (k == "stage")
      m.stage = v;
    else if (k == "stage_hash")
      m.stage_hash = v;
    else if (k == "config_hash")
      m.config_hash = v;
    else if (k.rfind("seed.", 0) == 0)
      m.seeds.emplace_back(k.substr(5), v);
    else if (k.rfind("upstream.", 0) == 0)
      m.upstream.emplace_back(k.substr(9), v);
    else if (k.rfind("file.", 0) == 0)
      m.files.emplace_back(k.substr(5), v);
  }
  return m;
}

/// True when the manifest carries `hash` and every listed file is intact.
inline bool up_to_date(const std::filesystem::path& dir, const std::string& hash) {
  const auto m = read_manifest(dir);
  if (!m || m->stage_hash != hash)
    return false;
  for (const auto& [name, sum] : m->files)
    if (!std::filesystem::exists(dir / name) || file_checksum(dir / name) != sum)
      return false;
  return true;
}

/// Stage hash of a finished upstream stage.
inline std::string require_stage(const std::filesystem::path& dir, const std::string& command) {
  const auto m = read_manifest(dir);
  if (!m)
    throw DependencyError("missing upstream artifact " + (dir / "manifest.txt").string() + "; run '" + command +
                          "' first");
  return m->stage_hash;
}

class StageWriter {
public:
  StageWriter(std::filesystem::path dir, std::string stage, std::string stage_hash, std::string config_hash)
      : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    std::filesystem::remove(dir_ / "manifest.txt");
    m_.stage = std::move(stage);
    m_.stage_hash = std::move(stage_hash);
    m_.config_hash = std::move(config_hash);
  }

  void seed(const std::string& name, std::uint64_t v) { m_.seeds.emplace_back(name, std::to_string(v)); }
  void upstream(const std::string& name, const std::string& hash) { m_.upstream.emplace_back(name, hash); }

  void file(const std::string& name, const std::string& content) {
    write_file_atomic(dir_ / name, content);
    m_.files.emplace_back(name, hex64(fnv1a(content)));
  }

  /// Unlisted side file, e.g. wall-clock timings.
  void note(const std::string& name, const std::string& content) const { write_file_atomic(dir_ / name, content); }

  void finish() { write_file_atomic(dir_ / "manifest.txt", manifest_text(m_)); }

private:
  std::filesystem::path dir_;
  Manifest m_;
};

class OutputLock {
public:
  explicit OutputLock(const std::filesystem::path& root) : path_(root / ".lock") {
    std::filesystem::create_directories(root);
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
      throw LockError("output directory is busy: " + path_.string() +
                      " exists; remove it if no other command is running");
    const auto pid = std::to_string(::getpid()) + "\n";
    if (::write(fd, pid.data(), pid.size()) < 0) {
      // the lock still holds without the pid
    }
    ::close(fd);
  }
  ~OutputLock() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

private:
  std::filesystem::path path_;
};

// ---- Small CSV reader ------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw RepresentationError("csv lacks column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline CsvTable read_csv(const std::filesystem::path& p) {
  CsvTable t;
  const auto lines = split(read_file(p), '\n');
  for (const auto& line : lines) {
    if (trim(line).empty())
      continue;
    auto f = split(line, ',');
    if (t.header.empty()) {
      t.header = std::move(f);
      continue;
    }
    if (f.size() != t.header.size())
      throw RepresentationError(p.string() + ": row with " + std::to_string(f.size()) + " fields, expected " +
                                std::to_string(t.header.size()));
    t.rows.push_back(std::move(f));
  }
  return t;
}

inline std::string unit_columns() {
  std::string s;
  for (const char* n : kShapeNames)
    s += std::string(",u_") + n;
  return s;
}

inline std::vector<ShapeVector> read_units(const CsvTable& t) {
  std::array<std::size_t, kShapeArity> col{};
  for (std::size_t k = 0; k < kShapeArity; ++k)
    col[k] = t.column(std::string("u_") + kShapeNames[k]);
  std::vector<ShapeVector> out;
  for (const auto& r : t.rows) {
    ShapeVector u{};
    for (std::size_t k = 0; k < kShapeArity; ++k)
      u[k] = parse_double(r[col[k]], kShapeNames[k]);
    out.push_back(u);
  }
  return out;
}

// ---- Stages ----------------------------------------------------------------

inline constexpr std::array<const char*, 3> kSampleModes{"full", "classifier-only", "unguided"};

inline Guidance mode_guidance(const PipelineConfig& cfg, const std::string& mode) {
  const auto g = cfg.guidance();
  if (mode == "full")
    return g;
  if (mode == "classifier-only")
    return {g.gamma, 0.0, 0.0, g.variance_scaled};
  if (mode == "unguided")
    return kUnguided;
  throw ConfigError("mode", "expected full, classifier-only or unguided, got '" + mode + "'");
}

struct RunContext {
  PipelineConfig config;
  std::filesystem::path out;
  bool force = false;
  std::ostream* log = &std::cerr;

  std::filesystem::path dataset_dir() const { return out / "dataset"; }
  std::filesystem::path models_dir(const std::string& which) const { return out / "models" / which; }
  std::filesystem::path case_dir(const std::string& c) const { return out / "cases" / c; }
  std::filesystem::path sample_dir(const std::string& c, const std::string& mode) const {
    return case_dir(c) / ("sample-" + mode);
  }
  std::filesystem::path optimize_dir(const std::string& c) const { return case_dir(c) / "optimize"; }
  std::filesystem::path evaluate_dir(const std::string& c) const { return case_dir(c) / "evaluate"; }
  std::filesystem::path summary_dir() const { return out / "summary"; }

  std::ostream& say() const { return *log; }
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline bool skip(const RunContext& ctx, const std::filesystem::path& dir, const std::string& hash,
                 const std::string& what) {
  if (!ctx.force && up_to_date(dir, hash)) {
    ctx.say() << what << ": up to date\n";
    return true;
  }
  ctx.say() << what << ": running\n";
  return false;
}

inline Dataset load_dataset(const RunContext& ctx) {
  const auto dir = ctx.dataset_dir();
  require_stage(dir, "gen-dataset");
  return read_dataset(dir / "hulls.csv", dir / "hulls.meta");
}

inline Mlp load_model(const RunContext& ctx, const std::string& which, const std::string& name) {
  require_stage(ctx.models_dir(which), "train --which " + which);
  return load_mlp(ctx.models_dir(which) / (name + ".mlp"));
}

inline std::string loss_csv(const std::vector<double>& history) {
  std::string s = "step,loss\n";
  for (std::size_t i = 0; i < history.size(); ++i)
    s += std::to_string((i + 1) * 100) + "," + format_double(history[i]) + "\n";
  return s;
}

inline std::string hull_rows_csv(const std::vector<ShapeVector>& units, const Normalizer& nz, double loa) {
  std::string s = "index," + hull_csv_header() + unit_columns() + "\n";
  for (std::size_t i = 0; i < units.size(); ++i) {
    HullParams p;
    p.loa = loa;
    p.shape = nz.denormalize(units[i]);
    s += std::to_string(i) + "," + hull_csv_row(p);
    for (double u : units[i])
      s += "," + format_double(u);
    s += "\n";
  }
  return s;
}

inline std::string case_hash_input(const PipelineConfig& cfg, const std::string& name) {
  return cfg.canonical({"case." + name + "."});
}

} // namespace detail

inline void stage_dataset(const RunContext& ctx) {
  const auto& cfg = ctx.config;
  const auto dir = ctx.dataset_dir();
  const auto hash = hex64(fnv1a(cfg.canonical({"run.seed", "dataset.", "water."})));
  if (detail::skip(ctx, dir, hash, "dataset"))
    return;
  const auto seed = stage_seed(cfg.seed(), "dataset");
  DatasetOptions opt;
  opt.grid = cfg.dataset_grid();
  opt.workers = cfg.workers();
  auto mtx = std::make_shared<std::mutex>();
  auto shown = std::make_shared<std::size_t>(0);
  opt.progress = [&ctx, mtx, shown](std::size_t done, std::size_t total) {
    std::lock_guard lock(*mtx);
    const std::size_t tenth = done * 10 / std::max<std::size_t>(total, 1);
    if (tenth > *shown) {
      *shown = tenth;
      ctx.say() << "  dataset " << done << "/" << total << "\n";
    }
  };
  const auto t0 = std::chrono::steady_clock::now();
  const auto ds = build_dataset(cfg.dataset_size(), seed, opt);
  StageWriter w(dir, "dataset", hash, cfg.hash());
  w.seed("dataset", seed);
  w.file("hulls.csv", dataset_csv(ds));
  w.file("hulls.meta", dataset_meta(ds));
  if (!ds.failures.empty()) {
    std::string f;
    for (const auto& s : ds.failures)
      f += s + "\n";
    w.file("failures.txt", f);
  }
  w.note("timing.txt", "seconds = " + format_fixed(detail::seconds_since(t0), 1) + "\n");
  w.finish();
}

inline void stage_regressors(const RunContext& ctx) {
  const auto& cfg = ctx.config;
  const auto dir = ctx.models_dir("regressors");
  const auto up = require_stage(ctx.dataset_dir(), "gen-dataset");
  const auto hash = hex64(fnv1a(up + cfg.canonical({"surrogate."})));
  if (detail::skip(ctx, dir, hash, "regressors"))
    return;
  const auto ds = detail::load_dataset(ctx);
  const auto nz = fit_normalizer(ds);
  for (const auto& w : nz.warnings())
    ctx.say() << "  warning: " << w << "\n";
  auto sc = cfg.surrogate();
  sc.water = ds.water;
  const auto sp = split_records(ds, sc.holdout_every);
  StageWriter w(dir, "regressors", hash, cfg.hash());
  w.upstream("dataset", up);
  std::string scores, timing;
  struct Job {
    const char* name;
    TrainResult (*train)(const Dataset&, const Normalizer&, const SurrogateConfig&);
    int kind; // 0 ct, 1 volume, 2 waterline
  };
  for (const Job& job : {Job{"ct", train_ct_model, 0}, Job{"vol", train_volume_model, 1},
                         Job{"wl", train_waterline_model, 2}}) {
    const auto seed = stage_seed(cfg.seed(), std::string("regressor/") + job.name);
    sc.train.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    TrainResult r;
    try {
      r = job.train(ds, nz, sc);
    } catch (const NumericalError& e) {
      throw TrainingError(std::string(job.name) + " model: " + e.what());
    }
    const double secs = detail::seconds_since(t0);
    ctx.say() << "  " << job.name << " trained in " << format_fixed(secs, 1) << " s, loss "
              << format_short(r.final_loss) << "\n";
    w.seed(job.name, seed);
    w.file(std::string(job.name) + ".mlp", mlp_to_text(r.model));
    w.file(std::string("loss-") + job.name + ".csv", detail::loss_csv(r.history));
    double r2 = std::numeric_limits<double>::quiet_NaN();
    if (!sp.test.empty()) {
      const auto rows = job.kind == 0 ? ct_batches(sp.test, nz, ds.water) : draft_batches(sp.test, nz, job.kind == 1);
      r2 = heldout_r2(r.model, rows, cfg.score_rows(), stage_seed(cfg.seed(), std::string("score/") + job.name));
    }
    scores += std::string(job.name) + "_r2 = " + format_double(r2) + "\n";
    scores += std::string(job.name) + "_final_loss = " + format_double(r.final_loss) + "\n";
    timing += std::string(job.name) + "_seconds = " + format_fixed(secs, 1) + "\n";
  }
  w.file("scores.txt", scores);
  w.note("timing.txt", timing);
  w.finish();
}

inline void stage_classifier(const RunContext& ctx) {
  const auto& cfg = ctx.config;
  const auto dir = ctx.models_dir("classifier");
  const auto up = require_stage(ctx.dataset_dir(), "gen-dataset");
  const auto hash = hex64(fnv1a(up + cfg.canonical({"surrogate."})));
  if (detail::skip(ctx, dir, hash, "classifier"))
    return;
  const auto ds = detail::load_dataset(ctx);
  const auto nz = fit_normalizer(ds);
  auto sc = cfg.surrogate();
  sc.water = ds.water;
  const auto seed = stage_seed(cfg.seed(), "classifier");
  sc.train.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult r;
  try {
    r = train_feasibility_model(ds, nz, sc);
  } catch (const NumericalError& e) {
    throw TrainingError(std::string("feasibility model: ") + e.what());
  }
  const double secs = detail::seconds_since(t0);
  ctx.say() << "  feasibility trained in " << format_fixed(secs, 1) << " s\n";
  auto test = split_records(ds, sc.holdout_every).test;
  const auto bad = split_infeasible(ds, sc.holdout_every).test;
  test.insert(test.end(), bad.begin(), bad.end());
  double acc = std::numeric_limits<double>::quiet_NaN();
  if (!test.empty()) {
    const auto [x, labels] = feasibility_table(test, nz);
    acc = accuracy(r.model, x, labels);
  }
  StageWriter w(dir, "classifier", hash, cfg.hash());
  w.upstream("dataset", up);
  w.seed("feas", seed);
  w.file("feas.mlp", mlp_to_text(r.model));
  w.file("loss-feas.csv", detail::loss_csv(r.history));
  w.file("scores.txt", "feas_accuracy = " + format_double(acc) + "\nfeas_heldout = " + std::to_string(test.size()) +
                           "\nfeas_final_loss = " + format_double(r.final_loss) + "\n");
  w.note("timing.txt", "feas_seconds = " + format_fixed(secs, 1) + "\n");
  w.finish();
}

inline void stage_diffusion(const RunContext& ctx) {
  const auto& cfg = ctx.config;
  const auto dir = ctx.models_dir("diffusion");
  const auto up = require_stage(ctx.dataset_dir(), "gen-dataset");
  const auto hash = hex64(fnv1a(up + cfg.canonical({"diffusion.", "surrogate.holdout_every"})));
  if (detail::skip(ctx, dir, hash, "diffusion"))
    return;
  const auto ds = detail::load_dataset(ctx);
  const auto nz = fit_normalizer(ds);
  auto dc = cfg.diffusion();
  const auto seed = stage_seed(cfg.seed(), "diffusion");
  dc.train.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  double loss = 0;
  const auto d = train_diffusion(ds, nz, dc, &loss);
  const double secs = detail::seconds_since(t0);
  ctx.say() << "  denoiser trained in " << format_fixed(secs, 1) << " s, loss " << format_short(loss) << "\n";
  const auto test = split_records(ds, static_cast<int>(cfg.integer("surrogate.holdout_every", 2))).test;
  double held = std::numeric_limits<double>::quiet_NaN();
  if (!test.empty())
    held = denoiser_loss(d, hull_examples(test, nz), 4096, stage_seed(cfg.seed(), "score/diffusion"));
  StageWriter w(dir, "diffusion", hash, cfg.hash());
  w.upstream("dataset", up);
  w.seed("denoiser", seed);
  w.file("denoiser.txt", denoiser_to_text(d));
  w.file("scores.txt", "final_loss = " + format_double(loss) + "\nheldout_loss = " + format_double(held) + "\n");
  w.note("timing.txt", "denoiser_seconds = " + format_fixed(secs, 1) + "\n");
  w.finish();
}

inline void stage_sample(const RunContext& ctx, const std::string& case_name, const std::string& mode,
                         std::optional<int> count = std::nullopt) {
  const auto& cfg = ctx.config;
  const auto tc = cfg.test_case(case_name);
  const auto g = mode_guidance(cfg, mode);
  const int n = count.value_or(cfg.sample_count());
  if (n < 1)
    throw ConfigError("sample.count", "must be at least 1");
  const auto dir = ctx.sample_dir(case_name, mode);
  std::string up = require_stage(ctx.dataset_dir(), "gen-dataset");
  up += require_stage(ctx.models_dir("diffusion"), "train --which diffusion");
  if (g.gamma > 0)
    up += require_stage(ctx.models_dir("classifier"), "train --which classifier");
  if (g.lambda0 > 0 || g.lambda1 > 0)
    up += require_stage(ctx.models_dir("regressors"), "train --which regressors");
  const std::string params = "mode = " + mode + "\nn = " + std::to_string(n) + "\ngamma = " + format_double(g.gamma) +
                           "\nlambda0 = " + format_double(g.lambda0) + "\nlambda1 = " + format_double(g.lambda1) +
                           "\nscaling = " + (g.variance_scaled ? "variance" : "literal") + "\n";
  const auto hash = hex64(fnv1a(up + params + detail::case_hash_input(cfg, case_name) + cfg.canonical({"run.seed"})));
  const auto what = "sample " + case_name + " " + mode;
  if (detail::skip(ctx, dir, hash, what))
    return;
  const auto ds = detail::load_dataset(ctx);
  const auto nz = fit_normalizer(ds);
  const auto d = denoiser_from_text(read_file(ctx.models_dir("diffusion") / "denoiser.txt"));
  std::optional<Mlp> feas, ct, vol, wl;
  GuidanceModels gm;
  if (g.gamma > 0) {
    feas = detail::load_model(ctx, "classifier", "feas");
    gm.feasibility = &*feas;
  }
  if (g.lambda0 > 0 || g.lambda1 > 0) {
    ct = detail::load_model(ctx, "regressors", "ct");
    vol = detail::load_model(ctx, "regressors", "vol");
    wl = detail::load_model(ctx, "regressors", "wl");
    gm.resistance = &*ct;
    gm.volume = &*vol;
    gm.waterline = &*wl;
  }
  const FlowTarget flow{tc.speed, tc.loa, ds.water.g};
  const auto seed = stage_seed(cfg.seed(), "sample/" + case_name + "/" + mode);
  const auto t0 = std::chrono::steady_clock::now();
  const auto x = sample_guided(d, tc.conditioning(), flow, n, g, gm, seed);
  const double secs = detail::seconds_since(t0);
  ctx.say() << "  " << n << " hulls in " << format_fixed(secs, 1) << " s\n";
  const auto c = tc.conditioning();
  std::string prov = "case = " + case_name + "\n" + params + "seed = " + std::to_string(seed) + "\n";
  prov += "cond_t_star = " + format_double(c.t_star) + "\ncond_log_v = " + format_double(c.log_v) +
          "\ncond_beam = " + format_double(c.beam) + "\ncond_depth = " + format_double(c.depth) + "\n";
  prov += "speed = " + format_double(tc.speed) + "\nloa = " + format_double(tc.loa) + "\n";
  prov += "denoiser = " + file_checksum(ctx.models_dir("diffusion") / "denoiser.txt") + "\n";
  if (feas)
    prov += "feas = " + file_checksum(ctx.models_dir("classifier") / "feas.mlp") + "\n";
  if (ct)
    for (const char* m : {"ct", "vol", "wl"})
      prov += std::string(m) + " = " + file_checksum(ctx.models_dir("regressors") / (std::string(m) + ".mlp")) + "\n";
  StageWriter w(dir, "sample", hash, cfg.hash());
  w.upstream("models", hex64(fnv1a(up)));
  w.seed("sample", seed);
  w.file("samples.csv", detail::hull_rows_csv(to_shapes(x), nz, tc.loa));
  w.file("provenance.txt", prov);
  w.note("timing.txt", "seconds = " + format_fixed(secs, 1) + "\n");
  w.finish();
}

inline void stage_optimize(const RunContext& ctx, const std::string& case_name) {
  const auto& cfg = ctx.config;
  const auto tc = cfg.test_case(case_name);
  const auto dir = ctx.optimize_dir(case_name);
  auto up = require_stage(ctx.dataset_dir(), "gen-dataset");
  up += require_stage(ctx.models_dir("regressors"), "train --which regressors");
  const auto hash = hex64(fnv1a(up + cfg.canonical({"optimize.", "run.seed"}) + detail::case_hash_input(cfg, case_name)));
  if (detail::skip(ctx, dir, hash, "optimize " + case_name))
    return;
  const auto ds = detail::load_dataset(ctx);
  const auto nz = fit_normalizer(ds);
  const auto ct = detail::load_model(ctx, "regressors", "ct");
  const auto wl = detail::load_model(ctx, "regressors", "wl");
  const CaseModels m{&nz, &ct, &wl, ds.water};
  auto opt = cfg.ga();
  opt.seed = stage_seed(cfg.seed(), "optimize/" + case_name);
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = optimize_case(tc, m, ds, opt);
  const double secs = detail::seconds_since(t0);
  ctx.say() << "  " << opt.generations << " generations in " << format_fixed(secs, 1) << " s\n";
  std::string s = "index,rank,crowding," + hull_csv_header() + unit_columns() + ",rt,ct,violation,t_star,fn\n";
  for (std::size_t i = 0; i < res.ga.population.size(); ++i) {
    const auto& ind = res.ga.population[i];
    ShapeVector u{};
    std::copy(ind.x.begin(), ind.x.end(), u.begin());
    HullParams p;
    p.loa = tc.loa;
    p.shape = nz.denormalize(u);
    s += std::to_string(i) + "," + std::to_string(ind.rank) + "," + format_double(ind.crowding) + "," +
         hull_csv_row(p);
    for (double v : u)
      s += "," + format_double(v);
    const auto& o = res.objectives[i];
    for (double v : {o.rt, o.ct, o.violation, o.t_star, o.fn})
      s += "," + format_double(v);
    s += "\n";
  }
  StageWriter w(dir, "optimize", hash, cfg.hash());
  w.upstream("models", hex64(fnv1a(up)));
  w.seed("optimize", opt.seed);
  w.file("population.csv", s);
  w.file("history.csv", history_csv(res.ga.history));
  w.note("timing.txt", "seconds = " + format_fixed(secs, 1) + "\n");
  w.finish();
}

namespace detail {

inline std::string conditioning_header() {
  return "mode,n,feasible,feasibility,vol_mean,vol_std,abs_vol_mean,beam_mean,abs_beam_mean,depth_mean,"
         "abs_depth_mean,eta_e,in_band_5\n";
}

inline std::string conditioning_row(const std::string& mode, const ErrorStats& s) {
  std::string r = mode + "," + std::to_string(s.n) + "," + std::to_string(s.feasible);
  for (double v : {s.feasibility, s.vol_mean, s.vol_std, s.abs_vol_mean, s.beam_mean, s.abs_beam_mean, s.depth_mean,
                   s.abs_depth_mean, s.eta_e, s.in_band_5})
    r += "," + format_double(v);
  return r + "\n";
}

inline std::string optional_field(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

} // namespace detail

inline void stage_evaluate(const RunContext& ctx, const std::string& case_name) {
  const auto& cfg = ctx.config;
  const auto tc = cfg.test_case(case_name);
  const auto dir = ctx.evaluate_dir(case_name);
  std::string up = require_stage(ctx.dataset_dir(), "gen-dataset");
  up += require_stage(ctx.models_dir("regressors"), "train --which regressors");
  up += require_stage(ctx.optimize_dir(case_name), "optimize --case " + case_name);
  std::vector<std::string> modes;
  for (const char* mode : kSampleModes)
    if (const auto m = read_manifest(ctx.sample_dir(case_name, mode))) {
      modes.emplace_back(mode);
      up += mode + m->stage_hash;
    }
  if (modes.empty())
    throw DependencyError("no samples for case " + case_name + " under " + ctx.case_dir(case_name).string() +
                          "; run 'sample --case " + case_name + "' first");
  const auto hash = hex64(fnv1a(up + cfg.canonical({"evaluate."}) + detail::case_hash_input(cfg, case_name)));
  if (detail::skip(ctx, dir, hash, "evaluate " + case_name))
    return;
  const auto ds = detail::load_dataset(ctx);
  const auto nz = fit_normalizer(ds);
  const auto ct = detail::load_model(ctx, "regressors", "ct");
  const auto wl = detail::load_model(ctx, "regressors", "wl");
  const CaseModels m{&nz, &ct, &wl, ds.water};
  AuditOptions ao;
  ao.grid = cfg.audit_grid();
  ao.grid.water = ds.water;
  ao.workers = cfg.workers();

  const auto t0 = std::chrono::steady_clock::now();
  const auto pop = read_csv(ctx.optimize_dir(case_name) / "population.csv");
  const auto pop_u = read_units(pop);
  const auto nsga = audit_samples(pop_u, tc, m, ao);
  std::vector<std::vector<ShapeVector>> units;
  std::vector<std::vector<SampleAudit>> audits;
  for (const auto& mode : modes) {
    units.push_back(read_units(read_csv(ctx.sample_dir(case_name, mode) / "samples.csv")));
    audits.push_back(audit_samples(units.back(), tc, m, ao));
  }

  StageWriter w(dir, "evaluate", hash, cfg.hash());
  w.upstream("inputs", hex64(fnv1a(up)));
  std::string cond = detail::conditioning_header();
  std::string cmp = "mode,nsga_min_rt,below_1,below_5,below_10,sample_min_rt_5,delta_rt_5,median_rt_5\n";
  std::string expl = "source,n,surrogate_rt,simulated_rt,ratio,correlation\n";

  // Optimizer best: lowest surrogate R_T among constraint-satisfying members.
  {
    const auto vcol = pop.column("violation"), rcol = pop.column("rt");
    std::optional<std::size_t> best;
    double best_rt = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pop.rows.size(); ++i) {
      const double v = parse_double(pop.rows[i][vcol], "violation"), rt = parse_double(pop.rows[i][rcol], "rt");
      if (v == 0.0 && rt < best_rt) {
        best_rt = rt;
        best = i;
      }
    }
    if (best && nsga[*best].simulated) {
      const auto& a = nsga[*best];
      expl += "optimizer-best,1," + format_double(a.surrogate_rt) + "," + format_double(a.simulated_rt) + "," +
              format_double(a.simulated_rt / a.surrogate_rt) + ",\n";
    } else {
      expl += "optimizer-best,0,,,,\n";
    }
    const auto f = surrogate_fidelity(nsga);
    expl += "optimizer-population," + std::to_string(f.n) + ",,," + format_double(f.mean_ratio) + "," +
            format_double(f.correlation) + "\n";
  }
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto& mode = modes[i];
    cond += detail::conditioning_row(mode, error_stats(audits[i]));
    const auto r = compare(audits[i], nsga);
    cmp += mode + "," + format_double(r.nsga_min_rt) + "," + std::to_string(r.below[0]) + "," +
           std::to_string(r.below[1]) + "," + std::to_string(r.below[2]) + "," +
           detail::optional_field(r.sample_min_rt_5) + "," + detail::optional_field(r.delta_rt_5) + "," +
           format_double(r.median_rt_5) + "\n";
    const auto f = surrogate_fidelity(audits[i]);
    expl += "diffusion-" + mode + "," + std::to_string(f.n) + ",,," + format_double(f.mean_ratio) + "," +
            format_double(f.correlation) + "\n";
    w.file("audit-" + mode + ".csv", audit_csv(audits[i]));
    w.file("scatter-" + mode + ".csv", scatter_csv(audits[i]));
  }
  cond += detail::conditioning_row("optimizer", error_stats(nsga));
  w.file("audit-optimizer.csv", audit_csv(nsga));
  w.file("scatter-optimizer.csv", scatter_csv(nsga));
  w.file("conditioning.csv", cond);
  w.file("comparison.csv", cmp);
  w.file("exploitation.csv", expl);

  // Simulated R_T densities.
  std::vector<std::pair<std::string, const std::vector<SampleAudit>*>> sets;
  for (std::size_t i = 0; i < modes.size(); ++i)
    sets.emplace_back(modes[i], &audits[i]);
  sets.emplace_back("optimizer", &nsga);
  for (const auto& [name, set] : sets) {
    std::vector<double> rt;
    for (const auto& a : *set)
      if (a.simulated)
        rt.push_back(a.simulated_rt);
    if (rt.size() < 2)
      continue;
    const auto curve = kde(rt);
    if (!curve.warning.empty())
      ctx.say() << "  warning: " << name << " density: " << curve.warning << "\n";
    w.file("kde-" + name + ".csv", curve_csv(curve));
  }

  // Diversity projection fitted on the training hulls.
  std::vector<ShapeVector> train;
  for (const auto* r : ds.feasible())
    train.push_back(nz.normalize(r->params.shape));
  std::vector<std::pair<std::string, std::size_t>> labels;
  std::vector<ShapeVector> query = train;
  for (std::size_t i = 0; i < train.size(); ++i)
    labels.emplace_back("training", i);
  for (std::size_t s = 0; s < modes.size(); ++s)
    for (std::size_t i = 0; i < units[s].size(); ++i) {
      query.push_back(units[s][i]);
      labels.emplace_back(modes[s], i);
    }
  for (std::size_t i = 0; i < pop_u.size(); ++i) {
    query.push_back(pop_u[i]);
    labels.emplace_back("optimizer", i);
  }
  try {
    const auto p = pca2(train, query);
    std::string s = "set,index,pc1,pc2\n";
    for (std::size_t i = 0; i < labels.size(); ++i)
      s += labels[i].first + "," + std::to_string(labels[i].second) + "," +
           format_double(p.coords(static_cast<Eigen::Index>(i), 0)) + "," +
           format_double(p.coords(static_cast<Eigen::Index>(i), 1)) + "\n";
    w.file("pca.csv", s);
    w.file("pca-share.csv", "pc1,pc2\n" + format_double(p.share[0]) + "," + format_double(p.share[1]) + "\n");
  } catch (const DomainError& e) {
    ctx.say() << "  warning: projection skipped: " << e.what() << "\n";
  }
  const double secs = detail::seconds_since(t0);
  ctx.say() << "  audited in " << format_fixed(secs, 1) << " s\n";
  w.note("timing.txt", "seconds = " + format_fixed(secs, 1) + "\n");
  w.finish();
}

/// Stacks each case's report CSVs under a leading case column.
inline void stage_summary(const RunContext& ctx) {
  const auto& cfg = ctx.config;
  const auto names = cfg.case_names();
  std::string up;
  for (const auto& n : names)
    up += require_stage(ctx.evaluate_dir(n), "evaluate --case " + n);
  const auto hash = hex64(fnv1a(up));
  const auto dir = ctx.summary_dir();
  if (detail::skip(ctx, dir, hash, "summary"))
    return;
  StageWriter w(dir, "summary", hash, cfg.hash());
  for (const char* file : {"conditioning.csv", "comparison.csv", "exploitation.csv"}) {
    std::string out;
    for (const auto& n : names) {
      const auto lines = split(read_file(ctx.evaluate_dir(n) / file), '\n');
      if (out.empty() && !lines.empty())
        out = "case," + lines[0] + "\n";
      for (std::size_t i = 1; i < lines.size(); ++i)
        if (!trim(lines[i]).empty())
          out += n + "," + lines[i] + "\n";
    }
    w.file(file, out);
  }
  w.finish();
}

// ---- Commands --------------------------------------------------------------

struct CommandOptions {
  std::filesystem::path config;          // empty: built-in defaults
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  bool force = false;
};

inline RunContext make_context(const CommandOptions& o, std::ostream& log = std::cerr) {
  RunContext ctx;
  ctx.config = o.config.empty() ? PipelineConfig{} : PipelineConfig::load(o.config);
  if (o.seed)
    ctx.config.set("run.seed", std::to_string(*o.seed));
  if (o.out)
    ctx.config.set("run.out", o.out->string());
  ctx.config.validate();
  ctx.out = ctx.config.out();
  ctx.force = o.force;
  ctx.log = &log;
  return ctx;
}

inline void cmd_gen_dataset(const RunContext& ctx) {
  OutputLock lock(ctx.out);
  stage_dataset(ctx);
}

inline void cmd_train(const RunContext& ctx, const std::string& which) {
  if (which != "regressors" && which != "classifier" && which != "diffusion" && which != "all")
    throw ConfigError("which", "expected regressors, classifier, diffusion or all, got '" + which + "'");
  OutputLock lock(ctx.out);
  if (which == "regressors" || which == "all")
    stage_regressors(ctx);
  if (which == "classifier" || which == "all")
    stage_classifier(ctx);
  if (which == "diffusion" || which == "all")
    stage_diffusion(ctx);
}

inline void cmd_sample(const RunContext& ctx, const std::string& case_name, const std::string& mode,
                       std::optional<int> n = std::nullopt) {
  OutputLock lock(ctx.out);
  stage_sample(ctx, case_name, mode, n);
}

inline void cmd_optimize(const RunContext& ctx, const std::string& case_name) {
  OutputLock lock(ctx.out);
  stage_optimize(ctx, case_name);
}

inline void cmd_evaluate(const RunContext& ctx, const std::string& case_name) {
  OutputLock lock(ctx.out);
  stage_evaluate(ctx, case_name);
}

inline void cmd_run_all(const RunContext& ctx) {
  OutputLock lock(ctx.out);
  stage_dataset(ctx);
  stage_regressors(ctx);
  stage_classifier(ctx);
  stage_diffusion(ctx);
  for (const auto& name : ctx.config.case_names()) {
    for (const char* mode : kSampleModes)
      stage_sample(ctx, name, mode);
    stage_optimize(ctx, name);
    stage_evaluate(ctx, name);
  }
  stage_summary(ctx);
}

/// 0 success, 1 usage or configuration, 2 missing dependency, 3 numerical.
inline int exit_code(const std::exception& e) {
  if (dynamic_cast<const DependencyError*>(&e))
    return 2;
  if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const TrainingError*>(&e) ||
      dynamic_cast<const GenerationError*>(&e))
    return 3;
  return 1;
}

} // namespace hulldiff
