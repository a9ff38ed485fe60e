#pragma once

#include "lossscape/landscape.hpp"
#include "lossscape/optim.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace lossscape {

/// Straight line plus a truncated sine series between two landscape points:
///
///   w(t) = t * endpoint_i + (1 - t) * endpoint_j + sum_{n=1..N_F} b_n sin(n pi t),
///
/// so w(0) = endpoint_j and w(1) = endpoint_i regardless of the coefficients.
/// The grid holds M equally spaced values of t covering [0, 1] inclusive.
struct FourierPath {
  Vector endpoint_i;
  Vector endpoint_j;
  Matrix coefficients;  // dim x N_F; column n-1 holds b_n
  std::vector<double> grid;

  FourierPath(Vector endpoint_i, Vector endpoint_j, std::size_t n_fourier = 10, std::size_t grid_points = 50);

  std::size_t dim() const { return static_cast<std::size_t>(endpoint_i.size()); }
  std::size_t num_terms() const { return static_cast<std::size_t>(coefficients.cols()); }
  std::size_t num_points() const { return grid.size(); }
};

/// sin(n pi t), exactly zero at t = 0 and t = 1.
double sine_basis(std::size_t n, double t);

Vector path_point(const FourierPath& path, double t);

struct PathReport {
  double height = 0.0;             // max over the grid of the landscape value
  std::vector<double> losses;      // landscape value at each grid point
  double total_loss = 0.0;         // sum of losses + lambda * length_penalty
  double length_penalty = 0.0;     // sum of squared segment lengths
  std::vector<double> coefficient_norms;
  double lambda = 0.0;
  std::size_t iterations = 0;      // optimizer iterations run
  std::size_t best_iteration = 0;  // iterate the report describes
};

PathReport path_loss(const FourierPath& path, const ScalarLandscape& landscape, double lambda);

/// dL/db_n for every n, as a dim x N_F matrix.
Matrix path_loss_grad(const FourierPath& path, const ScalarLandscape& landscape, double lambda);

struct PathLossConfig {
  double lambda = 1e-4;
  AdamConfig adam;
  std::size_t iterations = 100;
  std::size_t n_fourier = 10;
  std::size_t grid_points = 50;

  /// Defaults for network loss landscapes.
  static PathLossConfig for_network();
  /// Defaults for the 2D Gaussian-mixture landscape.
  static PathLossConfig for_synthetic(double lambda);
};

struct PathTraceEntry {
  double total_loss = 0.0;
  double height = 0.0;
};

struct PathResult {
  FourierPath path;  // coefficients of the lowest-height iterate
  PathReport report;
  std::vector<PathTraceEntry> trace;  // one entry per evaluated iterate, starting from b = 0
  bool aborted = false;
  std::string abort_reason;
};

/// Adam on the total path loss starting from zero coefficients. The result
/// describes the iterate with the smallest height seen.
PathResult optimize_path(const Vector& endpoint_i, const Vector& endpoint_j, const ScalarLandscape& landscape,
                         const PathLossConfig& config);

/// Distinct unordered pairs (i < j) from n items, sampled without replacement.
std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(std::size_t n, std::size_t n_pairs, std::uint64_t seed);

struct PairReport {
  std::size_t i = 0;
  std::size_t j = 0;
  PathReport report;
};

std::vector<PairReport> barrier_survey(const std::vector<Vector>& set, const ScalarLandscape& landscape,
                                       std::size_t n_pairs, std::uint64_t seed, const PathLossConfig& config,
                                       std::size_t workers = 1);

}  // namespace lossscape
