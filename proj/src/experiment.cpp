#include "lossscape/experiment.hpp"

#include "lossscape/parallel.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>

#ifndef LOSSSCAPE_VERSION
#define LOSSSCAPE_VERSION "unknown"
#endif
#ifndef LOSSSCAPE_GIT_REVISION
#define LOSSSCAPE_GIT_REVISION "unknown"
#endif

namespace lossscape {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw Error(key + ": expected a number, got '" + v + "'");
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw Error(key + ": expected a non-negative integer, got '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw Error(key + ": integer out of range: " + v);
  }
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(parse_uint(key, v));
}

int parse_int(const std::string& key, const std::string& v) {
  const std::uint64_t u = parse_uint(key, v);
  if (u > 1'000'000'000ULL) throw Error(key + ": integer out of range: " + v);
  return static_cast<int>(u);
}

// Shortest text that parses back to the same double.
std::string config_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define LS_REAL(KEY, MEMBER)                                                             \
  Field {                                                                                \
    KEY, [](const ExperimentConfig& c) { return config_double(c.MEMBER); },              \
        [](ExperimentConfig& c, const std::string& v) { c.MEMBER = parse_real(KEY, v); } \
  }
#define LS_SIZE(KEY, MEMBER)                                                             \
  Field {                                                                                \
    KEY, [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); },             \
        [](ExperimentConfig& c, const std::string& v) { c.MEMBER = parse_size(KEY, v); } \
  }
#define LS_INT(KEY, MEMBER)                                                             \
  Field {                                                                               \
    KEY, [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); },            \
        [](ExperimentConfig& c, const std::string& v) { c.MEMBER = parse_int(KEY, v); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"architecture", [](const ExperimentConfig& c) { return c.architecture; },
       [](ExperimentConfig& c, const std::string& v) { c.architecture = v; }},
      {"data.dir", [](const ExperimentConfig& c) { return c.data_dir.generic_string(); },
       [](ExperimentConfig& c, const std::string& v) { c.data_dir = v; }},
      LS_SIZE("data.train_cap", train_cap),
      {"data.subset_seed",
       [](const ExperimentConfig& c) { return c.subset_seed ? std::to_string(*c.subset_seed) : std::string("none"); },
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "none") {
           c.subset_seed.reset();
         } else {
           c.subset_seed = parse_uint("data.subset_seed", v);
         }
       }},
      LS_SIZE("ensemble.size", ensemble_size),
      LS_SIZE("ensemble.select", select),
      LS_REAL("sgd.learning_rate", sgd.learning_rate),
      LS_SIZE("sgd.batch_size", sgd.batch_size),
      LS_SIZE("sgd.epochs", sgd.epochs),
      LS_SIZE("lbfgs.iterations", lbfgs.iterations),
      LS_SIZE("lbfgs.memory", lbfgs.memory),
      LS_REAL("lbfgs.fallback_step", lbfgs.fallback_step),
      LS_REAL("gss.initial_step", lbfgs.line_search.initial_step),
      LS_REAL("gss.bracket_growth", lbfgs.line_search.bracket_growth),
      LS_INT("gss.max_bracket_steps", lbfgs.line_search.max_bracket_steps),
      LS_REAL("gss.tolerance", lbfgs.line_search.tolerance),
      LS_INT("gss.max_iterations", lbfgs.line_search.max_iterations),
      LS_REAL("path.lambda", path.lambda),
      LS_SIZE("path.n_fourier", path.n_fourier),
      LS_SIZE("path.grid_points", path.grid_points),
      LS_SIZE("path.iterations", path.iterations),
      LS_REAL("path.learning_rate", path.adam.learning_rate),
      LS_REAL("path.beta1", path.adam.beta1),
      LS_REAL("path.beta2", path.adam.beta2),
      LS_REAL("path.epsilon", path.adam.epsilon),
      LS_SIZE("path.n_pairs", n_pairs),
      LS_SIZE("path.landscape_subset", path_landscape_subset),
      LS_SIZE("path.histogram_bins", histogram_bins),
      LS_SIZE("synth.n_fourier", synth.n_fourier),
      LS_SIZE("synth.grid_points", synth.grid_points),
      LS_SIZE("synth.iterations", synth.iterations),
      LS_REAL("synth.learning_rate", synth.adam.learning_rate),
      {"analysis.kernel", [](const ExperimentConfig& c) { return c.kernel; },
       [](ExperimentConfig& c, const std::string& v) { c.kernel = v; }},
      LS_REAL("analysis.bandwidth", kernel_bandwidth),
      LS_INT("analysis.degree", kernel_degree),
      LS_REAL("analysis.offset", kernel_offset),
      LS_SIZE("analysis.components", components),
      {"seed", [](const ExperimentConfig& c) { return std::to_string(c.seed); },
       [](ExperimentConfig& c, const std::string& v) { c.seed = parse_uint("seed", v); }},
      LS_SIZE("workers", workers),
      {"out", [](const ExperimentConfig& c) { return c.out_dir.generic_string(); },
       [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; }},
  };
  return table;
}

#undef LS_REAL
#undef LS_SIZE
#undef LS_INT

// Keys that only say where or how fast to run; they never change artifact bytes.
bool is_runtime_key(const std::string& key) { return key == "out" || key == "workers"; }

}  // namespace

NetworkSpec ExperimentConfig::network() const {
  if (architecture == "fcp") return NetworkSpec::fcp();
  if (architecture == "autoencoder") return NetworkSpec::autoencoder();
  throw Error("unknown architecture: " + architecture);
}

Kernel ExperimentConfig::analysis_kernel() const {
  const double bw = kernel_bandwidth > 0.0 ? kernel_bandwidth : static_cast<double>(network().num_params());
  return kernel_from_string(kernel, bw, kernel_degree, kernel_offset);
}

void ExperimentConfig::validate() const {
  network();
  analysis_kernel();
  if (ensemble_size == 0) throw Error("ensemble.size must be at least 1");
  if (select == 0) throw Error("ensemble.select must be at least 1");
  if (select > ensemble_size) {
    throw Error("ensemble.select (" + std::to_string(select) + ") exceeds ensemble.size (" +
                std::to_string(ensemble_size) + ")");
  }
  if (train_cap == 0) throw Error("data.train_cap must be at least 1");
  if (!(sgd.learning_rate > 0.0) || sgd.batch_size == 0 || sgd.epochs == 0) throw Error("invalid sgd settings");
  if (lbfgs.iterations == 0 || lbfgs.memory == 0 || !(lbfgs.fallback_step > 0.0)) {
    throw Error("invalid lbfgs settings");
  }
  lbfgs.line_search.validate();
  for (const PathLossConfig* p : {&path, &synth}) {
    if (p->n_fourier == 0 || p->grid_points < 2 || p->iterations == 0) throw Error("invalid path settings");
    if (!(p->adam.learning_rate > 0.0)) throw Error("path learning rate must be positive");
  }
  if (!(path.lambda >= 0.0)) throw Error("path.lambda must be non-negative");
  if (n_pairs == 0) throw Error("path.n_pairs must be at least 1");
  if (histogram_bins == 0) throw Error("path.histogram_bins must be at least 1");
  if (components == 0) throw Error("analysis.components must be at least 1");
  if (workers == 0) throw Error("workers must be at least 1");
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  os << "schema_version = " << kConfigSchemaVersion << '\n';
  for (const Field& f : fields()) os << f.key << " = " << f.get(*this) << '\n';
  return os.str();
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      throw Error("config line " + std::to_string(lineno) + ": duplicate key " + key);
    }
    seen.push_back(key);
    if (key == "schema_version") {
      if (value != std::to_string(kConfigSchemaVersion)) throw Error("unsupported config schema_version: " + value);
      continue;
    }
    const auto it = std::find_if(fields().begin(), fields().end(), [&](const Field& f) { return key == f.key; });
    if (it == fields().end()) throw Error("config line " + std::to_string(lineno) + ": unknown key " + key);
    try {
      it->set(c, value);
    } catch (const Error& e) {
      throw Error("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  if (!fs::exists(path)) throw Error("config file not found: " + path.string());
  return parse(read_text(path));
}

std::uint64_t derived_seed(std::uint64_t master, std::uint64_t counter) { return mix_seed(master, counter); }

const std::vector<std::string>& solution_set_names() {
  static const std::vector<std::string> names = {"bfgs_train", "bfgs_test", "sgd_train", "sgd_test"};
  return names;
}

std::vector<std::pair<std::string, std::string>> default_analysis_pairs() {
  return {{"bfgs_train", "sgd_test"}, {"bfgs_test", "sgd_test"}};
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

namespace {

void say(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

std::uint64_t seed_for(std::uint64_t master, SeedStream stream, std::uint64_t k) {
  return derived_seed(master, static_cast<std::uint64_t>(stream) + k);
}

json config_snapshot(const ExperimentConfig& c) {
  json j = json::object();
  j["schema_version"] = kConfigSchemaVersion;
  for (const Field& f : fields()) {
    if (!is_runtime_key(f.key)) j[f.key] = f.get(c);
  }
  return j;
}

// Each command owns one section of manifest.json and timings.json; sections
// written by other commands into the same directory are kept.
class ManifestWriter {
 public:
  ManifestWriter(const ExperimentConfig& config, std::string command)
      : config_(config), command_(std::move(command)), start_(std::chrono::steady_clock::now()) {
    fs::create_directories(config.out_dir);
  }

  fs::path path(const std::string& rel) const { return config_.out_dir / rel; }

  void add_artifact(const std::string& rel) { artifacts_.push_back(rel); }
  json& section() { return section_; }
  void timing(const std::string& key, double seconds) { timings_[key] = seconds; }

  void commit() {
    json files = json::object();
    std::sort(artifacts_.begin(), artifacts_.end());
    for (const std::string& rel : artifacts_) files[rel] = sha256_file(path(rel));

    json entry = section_;
    entry["config"] = config_snapshot(config_);
    entry["artifacts"] = files;
    entry["scale"] = "desk";

    json manifest = load_or_empty("manifest.json");
    manifest["tool"] = {{"name", "lossscape"}, {"version", LOSSSCAPE_VERSION}, {"revision", LOSSSCAPE_GIT_REVISION}};
    manifest["commands"][command_] = entry;
    write_json(path("manifest.json"), manifest);

    timings_["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json timings = load_or_empty("timings.json");
    timings[command_] = timings_;
    write_json(path("timings.json"), timings);
  }

 private:
  json load_or_empty(const std::string& rel) const {
    const fs::path p = path(rel);
    if (!fs::exists(p)) return json::object();
    try {
      return json::parse(read_text(p));
    } catch (const json::exception&) {
      return json::object();
    }
  }

  const ExperimentConfig& config_;
  std::string command_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> artifacts_;
  json section_ = json::object();
  json timings_ = json::object();
};

std::string member_tag(std::size_t m) {
  std::string s = std::to_string(m);
  return std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

}  // namespace

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

TrainResult cmd_train(const ExperimentConfig& config, const Logger& log) {
  config.validate();
  const NetworkSpec spec = config.network();
  const MnistFiles files = MnistFiles::in_directory(config.data_dir);
  const auto [train, test] = load_mnist(files, config.train_cap, config.subset_seed);
  say(log, "train: " + std::to_string(train.size()) + " training / " + std::to_string(test.size()) +
               " test samples, " + std::to_string(spec.num_params()) + " parameters");

  ManifestWriter mw(config, "train");
  fs::create_directories(mw.path("traces"));
  fs::create_directories(mw.path("solutions"));

  const std::size_t n = config.ensemble_size;
  const NnTrainingProblem problem(spec, train, &test);
  std::vector<TrainingTrace> sgd(n), bfgs(n);
  std::vector<std::uint64_t> init_seeds(n), shuffle_seeds(n);
  for (std::size_t m = 0; m < n; ++m) {
    init_seeds[m] = seed_for(config.seed, SeedStream::init, m);
    shuffle_seeds[m] = seed_for(config.seed, SeedStream::sgd_shuffle, m);
  }

  parallel_for(n, config.workers, [&](std::size_t m) {
    const Vector w0 = init_params(spec, init_seeds[m]).values();
    SgdConfig sc = config.sgd;
    sc.seed = shuffle_seeds[m];
    sgd[m] = sgd_run(problem, w0, sc);
    bfgs[m] = lbfgs_gss_run(problem, w0, config.lbfgs);
    say(log, "member " + std::to_string(m) + ": sgd train " + format_double(sgd[m].best_train().train_loss) +
                 ", lbfgs train " + format_double(bfgs[m].best_train().train_loss));
  });

  TrainResult result;
  json members = json::array();
  for (std::size_t m = 0; m < n; ++m) {
    for (const TrainingTrace* t : {&sgd[m], &bfgs[m]}) {
      const std::string opt = t == &sgd[m] ? "sgd" : "bfgs";
      const std::string rel = "traces/" + opt + "_" + member_tag(m) + ".json";
      write_json(mw.path(rel), to_json(*t));
      mw.add_artifact(rel);
      mw.timing(opt + "_" + member_tag(m), t->wall_seconds);

      MemberSummary s;
      s.member = m;
      s.optimizer = opt;
      s.aborted = t->aborted;
      s.abort_reason = t->abort_reason;
      s.final_train_loss = t->last().train_loss;
      s.best_train_loss = t->best_train().train_loss;
      s.best_test_loss = t->best_test().test_loss;
      result.members.push_back(s);
      members.push_back({{"member", m},
                         {"optimizer", opt},
                         {"init_seed", init_seeds[m]},
                         {"shuffle_seed", opt == "sgd" ? json(shuffle_seeds[m]) : json(nullptr)},
                         {"aborted", t->aborted},
                         {"abort_reason", t->abort_reason},
                         {"final_train_loss", t->last().train_loss},
                         {"best_train_loss", s.best_train_loss},
                         {"best_test_loss", s.best_test_loss}});
      if (t->aborted) say(log, "member " + std::to_string(m) + " (" + opt + ") excluded: " + t->abort_reason);
    }
  }

  json sets = json::object();
  for (const std::string opt : {"bfgs", "sgd"}) {
    const auto& traces = opt == "sgd" ? sgd : bfgs;
    std::vector<std::size_t> alive;
    for (std::size_t m = 0; m < n; ++m) {
      if (!traces[m].aborted) alive.push_back(m);
    }
    if (alive.empty()) throw Error("every " + opt + " run failed; no solutions to select");
    std::stable_sort(alive.begin(), alive.end(), [&](std::size_t a, std::size_t b) {
      return traces[a].best_train().train_loss < traces[b].best_train().train_loss;
    });
    if (alive.size() < config.select) {
      say(log, opt + ": only " + std::to_string(alive.size()) + " runs survived; selecting all of them");
    }
    alive.resize(std::min(alive.size(), config.select));

    for (const bool early_stop : {false, true}) {
      SolutionSet set;
      set.name = opt + (early_stop ? "_test" : "_train");
      set.spec = spec;
      json prov = json::array();
      for (std::size_t m : alive) {
        const TrainingTrace& t = traces[m];
        const std::size_t idx = early_stop ? t.best_test_index : t.best_train_index;
        const TraceRecord& r = t.records.at(idx);
        set.vectors.push_back(early_stop ? t.best_test_params : t.best_train_params);
        Provenance p{t.optimizer, m, init_seeds[m], r.step, early_stop ? r.test_loss : r.train_loss};
        set.provenance.push_back(p);
        prov.push_back({{"member", m}, {"step", p.step}, {"loss", p.loss}});
      }
      const std::string rel = "solutions/" + set.name + ".bin";
      write_solution_file(mw.path(rel), spec, set.vectors);
      mw.add_artifact(rel);
      sets[set.name] = prov;
      result.sets.emplace(set.name, std::move(set));
    }
  }

  json& sec = mw.section();
  sec["network"] = spec.canonical();
  sec["train_samples"] = train.size();
  sec["test_samples"] = test.size();
  sec["members"] = members;
  sec["selected"] = sets;
  sec["seed_scheme"] = "splitmix64(master, stream + member); init stream 0, sgd shuffle stream 1000000";
  mw.commit();
  return result;
}

// ---------------------------------------------------------------------------
// Solution sets
// ---------------------------------------------------------------------------

SolutionSet load_solution_set(const fs::path& file) {
  const SolutionFile f = read_solution_file(file);
  SolutionSet s;
  s.name = file.stem().string();
  s.spec = spec_from_canonical(f.spec_text);
  s.vectors = f.vectors;
  s.provenance.resize(s.vectors.size());
  for (std::size_t i = 0; i < s.vectors.size(); ++i) s.provenance[i].member = i;
  return s;
}

std::vector<SolutionSet> load_solution_sets(const std::vector<fs::path>& files) {
  std::vector<SolutionSet> out;
  for (const fs::path& f : files) out.push_back(load_solution_set(f));
  return out;
}

namespace {

const NetworkSpec& common_spec(const std::vector<SolutionSet>& sets) {
  if (sets.empty()) throw Error("no solution sets given");
  for (const SolutionSet& s : sets) {
    if (s.vectors.empty()) throw Error("solution set " + s.name + " is empty");
    if (s.spec.canonical() != sets.front().spec.canonical()) {
      throw Error("solution sets use different networks: " + sets.front().name + " is " +
                  sets.front().spec.canonical() + ", " + s.name + " is " + s.spec.canonical());
    }
  }
  return sets.front().spec;
}

const SolutionSet& find_set(const std::vector<SolutionSet>& sets, const std::string& name) {
  for (const SolutionSet& s : sets) {
    if (s.name == name) return s;
  }
  throw Error("solution set not loaded: " + name);
}

std::uint64_t set_ordinal(const std::string& name) {
  const auto& names = solution_set_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it != names.end()) return static_cast<std::uint64_t>(it - names.begin());
  return 1000 + fnv1a(name) % 1'000'000;
}

}  // namespace

// ---------------------------------------------------------------------------
// pathsurvey
// ---------------------------------------------------------------------------

SurveyResult cmd_pathsurvey(const ExperimentConfig& config, const std::vector<SolutionSet>& sets,
                            const std::string& landscape, const Logger& log) {
  config.validate();
  if (landscape != "train" && landscape != "test") throw Error("landscape must be train or test, got " + landscape);
  const NetworkSpec& spec = common_spec(sets);
  for (const SolutionSet& s : sets) {
    if (s.vectors.size() < 2) throw Error("solution set " + s.name + " needs at least two vectors for a survey");
  }

  const MnistFiles files = MnistFiles::in_directory(config.data_dir);
  const auto [train, test] = load_mnist(files, config.train_cap, config.subset_seed);
  const NnLandscape land = nn_landscape(spec, landscape == "train" ? train : test, config.path_landscape_subset);
  say(log, "pathsurvey on " + land.describe());

  ManifestWriter mw(config, "pathsurvey_" + landscape);
  fs::create_directories(mw.path("paths"));
  fs::create_directories(mw.path("histograms"));
  fs::create_directories(mw.path("stats"));

  SurveyResult result;
  json seeds = json::object();
  double top = 0.0;
  for (const SolutionSet& s : sets) {
    const std::uint64_t seed =
        seed_for(config.seed, SeedStream::path_pairs, 2 * set_ordinal(s.name) + (landscape == "test" ? 1 : 0));
    seeds[s.name] = seed;
    const auto t0 = std::chrono::steady_clock::now();
    auto reports = barrier_survey(s.vectors, land, config.n_pairs, seed, config.path, config.workers);
    mw.timing(s.name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

    const std::string rel = "paths/" + s.name + "_" + landscape + ".jsonl";
    std::ostringstream lines;
    std::vector<double> heights;
    for (const PairReport& pr : reports) {
      json j = to_json(pr.report);
      j["set"] = s.name;
      j["landscape"] = land.describe();
      j["i"] = pr.i;
      j["j"] = pr.j;
      lines << j.dump() << '\n';
      heights.push_back(pr.report.height);
      top = std::max(top, pr.report.height);
    }
    write_text(mw.path(rel), lines.str());
    mw.add_artifact(rel);
    say(log, s.name + ": " + std::to_string(reports.size()) + " paths, median height " +
                 format_double(median(heights)));
    result.reports.emplace(s.name, std::move(reports));
  }

  // Shared bin edges so the per-set histograms line up.
  const double hi = top > 0.0 ? top : 1.0;
  json summary = json::object();
  for (const auto& [name, reports] : result.reports) {
    std::vector<double> heights;
    for (const PairReport& pr : reports) heights.push_back(pr.report.height);
    const std::string rel = "histograms/" + name + "_" + landscape + ".csv";
    write_histogram_csv(mw.path(rel), histogram(heights, config.histogram_bins, 0.0, hi));
    mw.add_artifact(rel);
    const double mean = std::accumulate(heights.begin(), heights.end(), 0.0) / static_cast<double>(heights.size());
    summary[name] = {{"count", heights.size()},
                     {"median_height", median(heights)},
                     {"mean_height", mean},
                     {"max_height", *std::max_element(heights.begin(), heights.end())}};
  }
  const std::string rel = "stats/pathsurvey_" + landscape + ".json";
  write_json(mw.path(rel), {{"landscape", land.describe()}, {"sets", summary}});
  mw.add_artifact(rel);

  mw.section()["landscape"] = land.describe();
  mw.section()["pair_seeds"] = seeds;
  mw.section()["seed_scheme"] = "splitmix64(master, 2000000 + 2 * set_ordinal + (test ? 1 : 0))";
  mw.commit();
  return result;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

AnalysisResult cmd_analyze(const ExperimentConfig& config, const std::vector<SolutionSet>& sets,
                           const std::vector<std::pair<std::string, std::string>>& pairs, const Logger& log) {
  config.validate();
  const NetworkSpec& spec = common_spec(sets);
  const Kernel kernel = config.kernel_bandwidth > 0.0 || config.kernel != "rbf"
                            ? config.analysis_kernel()
                            : Kernel::rbf(static_cast<double>(spec.num_params()));

  ManifestWriter mw(config, "analyze");
  fs::create_directories(mw.path("kpca"));
  fs::create_directories(mw.path("stats"));

  AnalysisResult result;
  for (const auto& [a_name, b_name] : pairs) {
    const SolutionSet& a = find_set(sets, a_name);
    const SolutionSet& b = find_set(sets, b_name);
    const std::string tag = a_name + "_vs_" + b_name;

    std::vector<Vector> points = a.vectors;
    points.insert(points.end(), b.vectors.begin(), b.vectors.end());
    std::vector<std::string> labels(a.vectors.size(), a_name);
    labels.insert(labels.end(), b.vectors.size(), b_name);
    KpcaModel model = kpca_fit(points, kernel, config.components);
    const std::string kpca_rel = "kpca/" + tag + ".csv";
    write_kpca_csv(mw.path(kpca_rel), labels, model.fit_scores());
    mw.add_artifact(kpca_rel);

    const ShellStats sh = shell_stats(a.vectors, b.vectors);
    json shell = {{"set_a", a_name},
                  {"set_b", b_name},
                  {"centroid_offset", sh.centroid_offset},
                  {"origin_norm", sh.origin.norm()},
                  {"mean_a", sh.mean_a},
                  {"mean_b", sh.mean_b},
                  {"median_a", sh.median_a},
                  {"median_b", sh.median_b},
                  {"distances_a", sh.distances_a},
                  {"distances_b", sh.distances_b},
                  {"kpca_kernel", kernel.describe()},
                  {"kpca_eigenvalues", std::vector<double>(model.eigenvalues().begin(), model.eigenvalues().end())}};
    const std::string shell_rel = "stats/shell_" + tag + ".json";
    write_json(mw.path(shell_rel), shell);
    mw.add_artifact(shell_rel);

    std::ostringstream csv;
    csv << "set,index,distance\n";
    for (std::size_t i = 0; i < sh.distances_a.size(); ++i) {
      csv << a_name << ',' << i << ',' << format_double(sh.distances_a[i]) << '\n';
    }
    for (std::size_t i = 0; i < sh.distances_b.size(); ++i) {
      csv << b_name << ',' << i << ',' << format_double(sh.distances_b[i]) << '\n';
    }
    const std::string dist_rel = "stats/shell_" + tag + "_distances.csv";
    write_text(mw.path(dist_rel), csv.str());
    mw.add_artifact(dist_rel);

    say(log, tag + ": median distance " + format_double(sh.median_a) + " vs " + format_double(sh.median_b));
    result.kpca.emplace(tag, std::move(model));
    result.shells.emplace(tag, sh);
  }

  json comps = json::object();
  for (const SolutionSet& s : sets) {
    const ComponentStats cs = component_stats(s.vectors);
    comps[s.name] = {{"mean", cs.mean}, {"stddev", cs.stddev}, {"count", cs.count}};
    result.components.emplace(s.name, cs);
  }
  write_json(mw.path("stats/components.json"), comps);
  mw.add_artifact("stats/components.json");

  mw.section()["network"] = spec.canonical();
  mw.section()["kernel"] = kernel.describe();
  mw.commit();
  return result;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

SynthResult cmd_synth(const ExperimentConfig& config, const Logger& log) {
  config.validate();
  const GaussianMixture2D land;
  const Vector w1 = GaussianMixture2D::minimum_a();
  const Vector w2 = GaussianMixture2D::minimum_b();

  ManifestWriter mw(config, "synth");
  fs::create_directories(mw.path("paths"));
  fs::create_directories(mw.path("stats"));

  SynthResult result;
  result.lambdas = {10.0, 100.0, 1000.0};
  const FourierPath straight(w1, w2, config.synth.n_fourier, config.synth.grid_points);
  result.straight = path_loss(straight, land, 0.0);
  say(log, "straight path height " + format_double(result.straight.height));

  result.paths.resize(result.lambdas.size(), PathResult{straight, {}, {}, false, {}});
  parallel_for(result.lambdas.size(), config.workers, [&](std::size_t k) {
    PathLossConfig pc = config.synth;
    pc.lambda = result.lambdas[k];
    result.paths[k] = optimize_path(w1, w2, land, pc);
  });

  std::ostringstream jsonl;
  {
    json j = to_json(result.straight);
    j["name"] = "straight";
    jsonl << j.dump() << '\n';
  }
  json heights = {{"straight", result.straight.height}};
  for (std::size_t k = 0; k < result.lambdas.size(); ++k) {
    const PathResult& pr = result.paths[k];
    if (pr.aborted) say(log, "lambda " + format_double(result.lambdas[k]) + ": " + pr.abort_reason);
    json j = to_json(pr.report);
    j["name"] = "optimized";
    j["coefficients"] = json::array();
    for (Eigen::Index n = 0; n < pr.path.coefficients.cols(); ++n) {
      j["coefficients"].push_back({pr.path.coefficients(0, n), pr.path.coefficients(1, n)});
    }
    jsonl << j.dump() << '\n';
    heights["lambda_" + std::to_string(static_cast<long long>(result.lambdas[k]))] = pr.report.height;
    say(log, "lambda " + format_double(result.lambdas[k]) + ": height " + format_double(pr.report.height));
  }
  write_text(mw.path("paths/synth.jsonl"), jsonl.str());
  mw.add_artifact("paths/synth.jsonl");

  std::ostringstream csv;
  csv << "t,straight";
  for (double l : result.lambdas) csv << ",lambda_" << static_cast<long long>(l);
  csv << '\n';
  for (std::size_t m = 0; m < straight.num_points(); ++m) {
    csv << format_double(straight.grid[m]) << ',' << format_double(result.straight.losses[m]);
    for (const PathResult& pr : result.paths) csv << ',' << format_double(pr.report.losses[m]);
    csv << '\n';
  }
  write_text(mw.path("paths/synth_profiles.csv"), csv.str());
  mw.add_artifact("paths/synth_profiles.csv");

  write_json(mw.path("stats/synth.json"), {{"heights", heights},
                                           {"endpoint_a", {w1[0], w1[1]}},
                                           {"endpoint_b", {w2[0], w2[1]}},
                                           {"grid_points", config.synth.grid_points}});
  mw.add_artifact("stats/synth.json");
  mw.commit();
  return result;
}

}  // namespace lossscape
