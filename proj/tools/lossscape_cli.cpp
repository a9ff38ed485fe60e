// lossscape: train ensembles, survey barrier heights, analyze solution geometry.

#include "lossscape/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace fs = std::filesystem;
using namespace lossscape;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Config file (key = value)")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--seed", c.seed, "Master seed");
  cmd->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(c.config);
  if (!c.out.empty()) cfg.out_dir = c.out;
  if (c.seed) cfg.seed = *c.seed;
  if (c.workers) cfg.workers = *c.workers;
  cfg.validate();
  return cfg;
}

std::vector<SolutionSet> load_named(const fs::path& dir, const std::vector<std::string>& names) {
  std::vector<fs::path> files;
  for (const std::string& n : names) {
    const fs::path f = dir / (n + ".bin");
    if (!fs::exists(f)) throw Error("solution file not found: " + f.string());
    files.push_back(f);
  }
  return load_solution_sets(files);
}

void log_line(const std::string& msg) { std::cerr << msg << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loss-landscape exploration toolkit"};
  app.require_subcommand(1);

  Common train_opts, survey_opts, analyze_opts, synth_opts;

  auto* train = app.add_subcommand("train", "Train the ensemble with SGD and L-BFGS-GSS and store solution sets");
  add_common(train, train_opts);
  bool print_config = false;
  train->add_flag("--print-config", print_config, "Print the resolved config and exit");

  auto* survey = app.add_subcommand("pathsurvey", "Barrier heights between pairs of solutions");
  add_common(survey, survey_opts);
  std::string landscape = "train";
  std::vector<std::string> survey_sets;
  std::string survey_dir;
  survey->add_option("--landscape", landscape, "Landscape to evaluate paths on")->check(CLI::IsMember({"train", "test"}));
  survey->add_option("--sets", survey_sets, "Set names (default: all four on train, test-selected sets on test)");
  survey->add_option("--solutions", survey_dir, "Directory holding <set>.bin (default: <out>/solutions)");

  auto* analyze = app.add_subcommand("analyze", "kPCA, shell and component statistics of solution sets");
  add_common(analyze, analyze_opts);
  std::vector<std::string> pair_args;
  std::string analyze_dir;
  analyze->add_option("--pair", pair_args, "Set pair a:b for kPCA and shell statistics (repeatable)");
  analyze->add_option("--solutions", analyze_dir, "Directory holding <set>.bin (default: <out>/solutions)");

  auto* synth = app.add_subcommand("synth", "Low-loss paths on the 2D synthetic landscape");
  add_common(synth, synth_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      const ExperimentConfig cfg = resolve(train_opts);
      if (print_config) {
        std::cout << cfg.to_text();
        return 0;
      }
      const TrainResult r = cmd_train(cfg, log_line);
      for (const auto& [name, set] : r.sets) std::cout << name << ": " << set.vectors.size() << " vectors\n";
    } else if (survey->parsed()) {
      const ExperimentConfig cfg = resolve(survey_opts);
      if (survey_sets.empty()) {
        survey_sets = landscape == "train" ? solution_set_names() : std::vector<std::string>{"bfgs_test", "sgd_test"};
      }
      const fs::path dir = survey_dir.empty() ? cfg.out_dir / "solutions" : fs::path(survey_dir);
      const SurveyResult r = cmd_pathsurvey(cfg, load_named(dir, survey_sets), landscape, log_line);
      for (const auto& [name, reports] : r.reports) {
        std::vector<double> h;
        for (const PairReport& p : reports) h.push_back(p.report.height);
        std::cout << name << ": " << reports.size() << " paths, median height " << format_double(median(h)) << '\n';
      }
    } else if (analyze->parsed()) {
      const ExperimentConfig cfg = resolve(analyze_opts);
      std::vector<std::pair<std::string, std::string>> pairs;
      for (const std::string& p : pair_args) {
        const auto colon = p.find(':');
        if (colon == std::string::npos) throw Error("--pair expects a:b, got " + p);
        pairs.emplace_back(p.substr(0, colon), p.substr(colon + 1));
      }
      if (pairs.empty()) pairs = default_analysis_pairs();
      std::vector<std::string> names;
      for (const auto& [a, b] : pairs) {
        for (const std::string& n : {a, b}) {
          if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
        }
      }
      for (const std::string& n : solution_set_names()) {
        const fs::path dir = analyze_dir.empty() ? cfg.out_dir / "solutions" : fs::path(analyze_dir);
        if (std::find(names.begin(), names.end(), n) == names.end() && fs::exists(dir / (n + ".bin"))) {
          names.push_back(n);
        }
      }
      const fs::path dir = analyze_dir.empty() ? cfg.out_dir / "solutions" : fs::path(analyze_dir);
      const AnalysisResult r = cmd_analyze(cfg, load_named(dir, names), pairs, log_line);
      for (const auto& [tag, sh] : r.shells) {
        std::cout << tag << ": median distance " << format_double(sh.median_a) << " vs "
                  << format_double(sh.median_b) << '\n';
      }
      for (const auto& [name, cs] : r.components) {
        std::cout << name << ": mean " << format_double(cs.mean) << " sd " << format_double(cs.stddev) << '\n';
      }
    } else if (synth->parsed()) {
      const SynthResult r = cmd_synth(resolve(synth_opts), log_line);
      std::cout << "straight: " << format_double(r.straight.height) << '\n';
      for (std::size_t k = 0; k < r.lambdas.size(); ++k) {
        std::cout << "lambda " << r.lambdas[k] << ": " << format_double(r.paths[k].report.height) << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
