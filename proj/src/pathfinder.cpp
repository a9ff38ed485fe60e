#include "lossscape/pathfinder.hpp"

#include "lossscape/parallel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace lossscape {

namespace {

// M x N_F table of sin(n pi t_m).
Matrix basis_table(const FourierPath& path) {
  Matrix s(static_cast<Eigen::Index>(path.num_points()), static_cast<Eigen::Index>(path.num_terms()));
  for (Eigen::Index m = 0; m < s.rows(); ++m) {
    for (Eigen::Index n = 0; n < s.cols(); ++n) s(m, n) = sine_basis(static_cast<std::size_t>(n + 1), path.grid[static_cast<std::size_t>(m)]);
  }
  return s;
}

// dim x M matrix whose columns are w(t_m).
Matrix grid_points(const FourierPath& path, const Matrix& basis) {
  const auto m = static_cast<Eigen::Index>(path.num_points());
  Eigen::RowVectorXd t(m);
  for (Eigen::Index k = 0; k < m; ++k) t[k] = path.grid[static_cast<std::size_t>(k)];
  Matrix w = path.endpoint_i * t + path.endpoint_j * (1.0 - t.array()).matrix();
  w.noalias() += path.coefficients * basis.transpose();
  return w;
}

void check_dims(const FourierPath& path, const ScalarLandscape& landscape) {
  if (path.dim() != landscape.dim()) {
    throw Error("path dimension " + std::to_string(path.dim()) + " does not match landscape dimension " +
                std::to_string(landscape.dim()));
  }
}

double squared_segment_lengths(const Matrix& w) {
  return (w.rightCols(w.cols() - 1) - w.leftCols(w.cols() - 1)).colwise().squaredNorm().sum();
}

[[noreturn]] void non_finite(double t) {
  std::ostringstream os;
  os.precision(17);
  os << "non-finite landscape value at t = " << t;
  throw Error(os.str());
}

PathReport make_report(const FourierPath& path, std::vector<double> losses, double penalty, double lambda) {
  PathReport r;
  r.lambda = lambda;
  r.length_penalty = penalty;
  r.height = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (double l : losses) {
    r.height = std::max(r.height, l);
    sum += l;
  }
  r.total_loss = sum + lambda * penalty;
  r.losses = std::move(losses);
  for (Eigen::Index n = 0; n < path.coefficients.cols(); ++n) r.coefficient_norms.push_back(path.coefficients.col(n).norm());
  return r;
}

}  // namespace

FourierPath::FourierPath(Vector endpoint_i_, Vector endpoint_j_, std::size_t n_fourier, std::size_t grid_points_)
    : endpoint_i(std::move(endpoint_i_)), endpoint_j(std::move(endpoint_j_)) {
  if (endpoint_i.size() != endpoint_j.size()) throw Error("path endpoints differ in dimension");
  if (grid_points_ < 2) throw Error("path grid needs at least two points");
  coefficients = Matrix::Zero(endpoint_i.size(), static_cast<Eigen::Index>(n_fourier));
  grid.resize(grid_points_);
  for (std::size_t m = 0; m < grid_points_; ++m) grid[m] = static_cast<double>(m) / static_cast<double>(grid_points_ - 1);
}

double sine_basis(std::size_t n, double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return std::sin(static_cast<double>(n) * std::numbers::pi * t);
}

Vector path_point(const FourierPath& path, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error("path parameter t must lie in [0, 1]");
  Vector w = t * path.endpoint_i + (1.0 - t) * path.endpoint_j;
  for (std::size_t n = 1; n <= path.num_terms(); ++n) {
    const double s = sine_basis(n, t);
    if (s != 0.0) w += s * path.coefficients.col(static_cast<Eigen::Index>(n - 1));
  }
  return w;
}

PathReport path_loss(const FourierPath& path, const ScalarLandscape& landscape, double lambda) {
  check_dims(path, landscape);
  const Matrix w = grid_points(path, basis_table(path));
  std::vector<double> losses(path.num_points());
  for (std::size_t m = 0; m < losses.size(); ++m) {
    losses[m] = landscape.value(w.col(static_cast<Eigen::Index>(m)));
    if (!std::isfinite(losses[m])) non_finite(path.grid[m]);
  }
  return make_report(path, std::move(losses), squared_segment_lengths(w), lambda);
}

Matrix path_loss_grad(const FourierPath& path, const ScalarLandscape& landscape, double lambda) {
  check_dims(path, landscape);
  const Matrix basis = basis_table(path);
  const Matrix w = grid_points(path, basis);
  const Eigen::Index m = w.cols();
  // Endpoint rows of the basis are exactly zero, so their gradients never contribute.
  Matrix g = Matrix::Zero(w.rows(), m);
  Vector gm;
  for (Eigen::Index k = 1; k + 1 < m; ++k) {
    landscape.value_and_gradient(w.col(k), gm);
    if (!gm.allFinite()) non_finite(path.grid[static_cast<std::size_t>(k)]);
    g.col(k) = gm;
  }
  const Matrix d = w.rightCols(m - 1) - w.leftCols(m - 1);
  const Matrix ds = basis.bottomRows(m - 1) - basis.topRows(m - 1);
  Matrix out = g * basis;
  out.noalias() += (2.0 * lambda) * d * ds;
  return out;
}

PathLossConfig PathLossConfig::for_network() { return {}; }

PathLossConfig PathLossConfig::for_synthetic(double lambda) {
  PathLossConfig c;
  c.lambda = lambda;
  c.adam.learning_rate = 0.05;
  c.iterations = 200;
  c.grid_points = 100;
  return c;
}

PathResult optimize_path(const Vector& endpoint_i, const Vector& endpoint_j, const ScalarLandscape& landscape,
                         const PathLossConfig& config) {
  if (!(config.lambda >= 0.0)) throw Error("lambda must be nonnegative");
  PathResult result{FourierPath(endpoint_i, endpoint_j, config.n_fourier, config.grid_points), {}, {}, false, {}};
  FourierPath& path = result.path;
  check_dims(path, landscape);

  FourierPath work = path;
  const Matrix basis = basis_table(work);
  const Eigen::Index m = basis.rows();
  const Matrix dbasis = basis.bottomRows(m - 1) - basis.topRows(m - 1);
  const auto dim = static_cast<Eigen::Index>(work.dim());

  const double l_start = landscape.value(work.endpoint_j);
  const double l_end = landscape.value(work.endpoint_i);
  if (!std::isfinite(l_start) || !std::isfinite(l_end)) {
    result.aborted = true;
    result.abort_reason = "non-finite landscape value at a path endpoint";
    return result;
  }

  AdamState adam(static_cast<std::size_t>(dim * work.coefficients.cols()), config.adam);
  Matrix g = Matrix::Zero(dim, m);
  Vector gm;
  double best_height = std::numeric_limits<double>::infinity();

  for (std::size_t k = 0; k <= config.iterations; ++k) {
    const bool last = k == config.iterations;
    const Matrix w = grid_points(work, basis);
    std::vector<double> losses(static_cast<std::size_t>(m));
    losses.front() = l_start;
    losses.back() = l_end;
    try {
      for (Eigen::Index j = 1; j + 1 < m; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        if (last) {
          losses[ju] = landscape.value(w.col(j));
        } else {
          losses[ju] = landscape.value_and_gradient(w.col(j), gm);
          if (!gm.allFinite()) non_finite(work.grid[ju]);
          g.col(j) = gm;
        }
        if (!std::isfinite(losses[ju])) non_finite(work.grid[ju]);
      }
    } catch (const Error& e) {
      result.aborted = true;
      result.abort_reason = e.what();
      break;
    }

    PathReport report = make_report(work, std::move(losses), squared_segment_lengths(w), config.lambda);
    result.trace.push_back({report.total_loss, report.height});
    if (report.height < best_height) {
      best_height = report.height;
      report.best_iteration = k;
      result.report = std::move(report);
      path.coefficients = work.coefficients;
    }
    if (last) break;

    Matrix grad = g * basis;
    grad.noalias() += (2.0 * config.lambda) * (w.rightCols(m - 1) - w.leftCols(m - 1)) * dbasis;
    adam.update({work.coefficients.data(), static_cast<std::size_t>(work.coefficients.size())},
                {grad.data(), static_cast<std::size_t>(grad.size())});
  }
  result.report.iterations = result.trace.empty() ? 0 : result.trace.size() - 1;
  return result;
}

std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(std::size_t n, std::size_t n_pairs, std::uint64_t seed) {
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) all.emplace_back(i, j);
  }
  if (n_pairs >= all.size()) return all;
  // Partial Fisher-Yates: the first n_pairs slots end up a uniform sample.
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < n_pairs; ++k) {
    const std::size_t r = k + static_cast<std::size_t>(rng() % (all.size() - k));
    std::swap(all[k], all[r]);
  }
  all.resize(n_pairs);
  return all;
}

std::vector<PairReport> barrier_survey(const std::vector<Vector>& set, const ScalarLandscape& landscape,
                                       std::size_t n_pairs, std::uint64_t seed, const PathLossConfig& config,
                                       std::size_t workers) {
  if (set.size() < 2) throw Error("barrier survey needs at least two points");
  const auto pairs = sample_pairs(set.size(), n_pairs, seed);
  std::vector<PairReport> out(pairs.size());
  parallel_for(pairs.size(), workers, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    PathResult r = optimize_path(set[i], set[j], landscape, config);
    if (r.aborted) throw Error("path " + std::to_string(i) + "-" + std::to_string(j) + ": " + r.abort_reason);
    out[k] = {i, j, std::move(r.report)};
  });
  return out;
}

}  // namespace lossscape
