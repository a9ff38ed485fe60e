#pragma once

#include "lossscape/analysis.hpp"
#include "lossscape/io.hpp"
#include "lossscape/mnist.hpp"
#include "lossscape/optim.hpp"
#include "lossscape/pathfinder.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lossscape {

inline constexpr int kConfigSchemaVersion = 1;

/// Everything one experiment needs. Read from `key = value` text (see
/// README.md for the keys).
struct ExperimentConfig {
  std::string architecture = "fcp";  // fcp | autoencoder

  std::filesystem::path data_dir = "data/mnist5k";
  std::size_t train_cap = 4000;
  std::optional<std::uint64_t> subset_seed;

  std::size_t ensemble_size = 12;
  std::size_t select = 8;

  SgdConfig sgd{0.1, 64, 30, 0};
  LbfgsGssConfig lbfgs;

  PathLossConfig path = PathLossConfig::for_network();
  PathLossConfig synth = PathLossConfig::for_synthetic(10.0);  // lambda is swept
  std::size_t n_pairs = 10;
  std::size_t path_landscape_subset = 256;  // 0 = whole dataset
  std::size_t histogram_bins = 20;

  std::string kernel = "rbf";
  double kernel_bandwidth = 0.0;  // 0 = number of network parameters
  int kernel_degree = 2;
  double kernel_offset = 1.0;
  std::size_t components = 2;

  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::filesystem::path out_dir = "out";

  NetworkSpec network() const;
  Kernel analysis_kernel() const;

  /// Throws Error on inconsistent settings (e.g. select > ensemble_size).
  void validate() const;

  /// Canonical `key = value` text; parse(to_text()) reproduces the config.
  std::string to_text() const;
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// Seed for stream `counter` of the run; distinct counters give independent streams.
std::uint64_t derived_seed(std::uint64_t master, std::uint64_t counter);

/// Counter bases for derived_seed.
enum class SeedStream : std::uint64_t {
  init = 0,
  sgd_shuffle = 1'000'000,
  path_pairs = 2'000'000,
};

struct Provenance {
  std::string optimizer;
  std::size_t member = 0;
  std::uint64_t init_seed = 0;
  std::size_t step = 0;
  double loss = 0.0;  // train loss (train sets) or test loss (test sets) at the selected step
};

/// A labeled ensemble of optimized parameter vectors.
struct SolutionSet {
  std::string name;  // bfgs_train, bfgs_test, sgd_train, sgd_test
  NetworkSpec spec;
  std::vector<Vector> vectors;
  std::vector<Provenance> provenance;
};

struct MemberSummary {
  std::size_t member = 0;
  std::string optimizer;
  bool aborted = false;
  std::string abort_reason;
  double final_train_loss = 0.0;
  double best_train_loss = 0.0;
  double best_test_loss = 0.0;
};

struct TrainResult {
  std::map<std::string, SolutionSet> sets;
  std::vector<MemberSummary> members;
};

struct SurveyResult {
  std::map<std::string, std::vector<PairReport>> reports;  // by set name
};

struct AnalysisResult {
  std::map<std::string, KpcaModel> kpca;          // by "a_vs_b"
  std::map<std::string, ShellStats> shells;       // by "a_vs_b"
  std::map<std::string, ComponentStats> components;  // by set name
};

struct SynthResult {
  PathReport straight;
  std::vector<double> lambdas;
  std::vector<PathResult> paths;
};

using Logger = std::function<void(const std::string&)>;

/// Names of the four solution sets in their canonical order.
const std::vector<std::string>& solution_set_names();

/// Trains the ensemble with both optimizers, keeps the `select` members with
/// the lowest training loss per optimizer and writes solutions/, traces/ and
/// the manifest.
TrainResult cmd_train(const ExperimentConfig& config, const Logger& log = {});

/// Loads solution sets written by cmd_train; the set name is the file stem.
SolutionSet load_solution_set(const std::filesystem::path& file);
std::vector<SolutionSet> load_solution_sets(const std::vector<std::filesystem::path>& files);

/// Barrier survey per set on the training or test landscape; writes paths/*.jsonl and histograms/*.csv.
SurveyResult cmd_pathsurvey(const ExperimentConfig& config, const std::vector<SolutionSet>& sets,
                            const std::string& landscape, const Logger& log = {});

/// kPCA, shell and component statistics; `pairs` lists (set_a, set_b) names
/// for the kPCA and shell outputs. Writes kpca/*.csv and stats/*.
AnalysisResult cmd_analyze(const ExperimentConfig& config, const std::vector<SolutionSet>& sets,
                           const std::vector<std::pair<std::string, std::string>>& pairs, const Logger& log = {});

/// Straight and optimized paths between the two minima of the 2D landscape
/// for lambda in {10, 100, 1000}; writes the loss profiles and heights.
SynthResult cmd_synth(const ExperimentConfig& config, const Logger& log = {});

/// Default kPCA/shell pairings: (bfgs_train, sgd_test) and (bfgs_test, sgd_test).
std::vector<std::pair<std::string, std::string>> default_analysis_pairs();

}  // namespace lossscape
