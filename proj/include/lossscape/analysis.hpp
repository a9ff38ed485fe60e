#pragma once

#include "lossscape/types.hpp"

#include <string>
#include <vector>

namespace lossscape {

/// k(x, x'): linear x^T x', polynomial (x^T x' + C)^n, or rbf exp(-|x - x'|^2 / bandwidth)
/// where bandwidth = 2 sigma^2.
struct Kernel {
  enum class Kind { linear, polynomial, rbf };

  Kind kind = Kind::linear;
  int degree = 2;
  double offset = 1.0;
  double bandwidth = 1.0;

  static Kernel linear() { return {}; }
  static Kernel polynomial(int degree, double offset);
  static Kernel rbf(double bandwidth);

  double operator()(const Vector& a, const Vector& b) const;
  std::string describe() const;
};

Kernel kernel_from_string(const std::string& name, double bandwidth, int degree = 2, double offset = 1.0);

/// K_ij = k(x_i, x_j); symmetric by construction.
Matrix kernel_matrix(const std::vector<Vector>& points, const Kernel& kernel);

/// K - 1_N K - K 1_N + 1_N K 1_N, with 1_N the N x N matrix of 1/N.
Matrix center_kernel(const Matrix& k);

/// Kernel PCA fitted on a set of points. Component k's eigenvector is scaled
/// so that lambda_k * |alpha_k|^2 = 1, making fit-point scores sqrt(lambda_k) v_k.
class KpcaModel {
 public:
  const std::vector<Vector>& fit_points() const { return points_; }
  const Kernel& kernel() const { return kernel_; }
  const Vector& eigenvalues() const { return eigenvalues_; }  // descending, all > 1e-12
  const Matrix& alphas() const { return alphas_; }            // N x components
  std::size_t components() const { return static_cast<std::size_t>(alphas_.cols()); }

  /// Scores of the fit points (N x components).
  const Matrix& fit_scores() const { return scores_; }

  /// Scores of a new point, with its kernel vector centered by the fit-time means.
  Vector project(const Vector& x) const;

 private:
  friend KpcaModel kpca_fit(const std::vector<Vector>&, const Kernel&, std::size_t);

  std::vector<Vector> points_;
  Kernel kernel_;
  Vector eigenvalues_;
  Matrix alphas_;
  Matrix scores_;
  Vector kernel_row_means_;
  double kernel_mean_ = 0.0;
};

KpcaModel kpca_fit(const std::vector<Vector>& points, const Kernel& kernel, std::size_t n_components);

Vector kpca_project(const KpcaModel& model, const Vector& x);

/// Distances of two solution sets from the midpoint of their centroids.
struct ShellStats {
  Vector centroid_a;
  Vector centroid_b;
  Vector origin;                  // (centroid_a + centroid_b) / 2
  double centroid_offset = 0.0;   // |centroid_a - origin| = |centroid_b - origin| = |centroid_a - centroid_b| / 2
  std::vector<double> distances_a;
  std::vector<double> distances_b;
  double mean_a = 0.0, mean_b = 0.0;
  double median_a = 0.0, median_b = 0.0;
};

ShellStats shell_stats(const std::vector<Vector>& set_a, const std::vector<Vector>& set_b);

/// Mean and (population) standard deviation of all components of a set's
/// vectors laid end to end.
struct ComponentStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

ComponentStats component_stats(const std::vector<Vector>& set);
std::vector<ComponentStats> component_stats(const std::vector<std::vector<Vector>>& sets);

double median(std::vector<double> values);

}  // namespace lossscape
