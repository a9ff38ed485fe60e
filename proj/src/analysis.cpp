#include "lossscape/analysis.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace lossscape {

namespace {

constexpr double kMinEigenvalue = 1e-12;

void check_same_dim(const std::vector<Vector>& points, Eigen::Index dim) {
  for (const auto& p : points) {
    if (p.size() != dim) throw Error("points differ in dimension");
  }
}

Eigen::Index first_significant(const Vector& v) {
  const double scale = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-8 * scale) return i;
  }
  return 0;
}

}  // namespace

Kernel Kernel::polynomial(int degree, double offset) {
  if (degree < 1) throw Error("polynomial kernel degree must be at least 1");
  Kernel k;
  k.kind = Kind::polynomial;
  k.degree = degree;
  k.offset = offset;
  return k;
}

Kernel Kernel::rbf(double bandwidth) {
  if (!(bandwidth > 0.0)) throw Error("rbf bandwidth must be positive");
  Kernel k;
  k.kind = Kind::rbf;
  k.bandwidth = bandwidth;
  return k;
}

double Kernel::operator()(const Vector& a, const Vector& b) const {
  if (a.size() != b.size()) throw Error("kernel arguments differ in dimension");
  switch (kind) {
    case Kind::linear: return a.dot(b);
    case Kind::polynomial: return std::pow(a.dot(b) + offset, degree);
    case Kind::rbf: return std::exp(-(a - b).squaredNorm() / bandwidth);
  }
  return 0.0;
}

std::string Kernel::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::linear: os << "linear"; break;
    case Kind::polynomial: os << "polynomial(degree=" << degree << ",offset=" << offset << ")"; break;
    case Kind::rbf: os << "rbf(bandwidth=" << bandwidth << ")"; break;
  }
  return os.str();
}

Kernel kernel_from_string(const std::string& name, double bandwidth, int degree, double offset) {
  if (name == "linear") return Kernel::linear();
  if (name == "polynomial") return Kernel::polynomial(degree, offset);
  if (name == "rbf") return Kernel::rbf(bandwidth);
  throw Error("unknown kernel: " + name);
}

Matrix kernel_matrix(const std::vector<Vector>& points, const Kernel& kernel) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n > 0) check_same_dim(points, points.front().size());
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = i == j && kernel.kind == Kernel::Kind::rbf
                           ? 1.0
                           : kernel(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Matrix center_kernel(const Matrix& k) {
  if (k.rows() != k.cols()) throw Error("kernel matrix must be square");
  const Eigen::RowVectorXd col_means = k.colwise().mean();
  const Vector row_means = k.rowwise().mean();
  const double total = k.mean();
  Matrix c = k;
  c.rowwise() -= col_means;
  c.colwise() -= row_means;
  c.array() += total;
  return c;
}

KpcaModel kpca_fit(const std::vector<Vector>& points, const Kernel& kernel, std::size_t n_components) {
  if (points.size() < 2) throw Error("kernel PCA needs at least two points");
  const Matrix k = kernel_matrix(points, kernel);
  const Matrix kc = center_kernel(k);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(kc);
  if (eig.info() != Eigen::Success) throw Error("eigen-decomposition of the centered kernel failed");

  struct Pair {
    double value;
    Vector vec;
    Eigen::Index lead;
  };
  std::vector<Pair> pairs;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double lambda = eig.eigenvalues()[i];
    if (lambda <= kMinEigenvalue) continue;
    Vector v = eig.eigenvectors().col(i);
    const Eigen::Index lead = first_significant(v);
    if (v[lead] < 0) v = -v;
    pairs.push_back({lambda, std::move(v), lead});
  }
  // Descending; within a (numerically) degenerate block, by first significant entry.
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    const double tol = 1e-10 * std::max(std::abs(a.value), std::abs(b.value));
    if (std::abs(a.value - b.value) > tol) return a.value > b.value;
    return a.lead < b.lead;
  });
  if (n_components > pairs.size()) {
    throw Error("requested " + std::to_string(n_components) + " components but only " +
                std::to_string(pairs.size()) + " positive eigenvalues");
  }

  KpcaModel model;
  const auto n = static_cast<Eigen::Index>(points.size());
  const auto c = static_cast<Eigen::Index>(n_components);
  model.points_ = points;
  model.kernel_ = kernel;
  model.eigenvalues_.resize(c);
  model.alphas_.resize(n, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    const Pair& p = pairs[static_cast<std::size_t>(j)];
    model.eigenvalues_[j] = p.value;
    model.alphas_.col(j) = p.vec / std::sqrt(p.value);
  }
  model.scores_ = kc * model.alphas_;
  model.kernel_row_means_ = k.rowwise().mean();
  model.kernel_mean_ = k.mean();
  return model;
}

Vector KpcaModel::project(const Vector& x) const {
  const auto n = static_cast<Eigen::Index>(points_.size());
  if (x.size() != points_.front().size()) throw Error("projected point has the wrong dimension");
  Vector kx(n);
  for (Eigen::Index j = 0; j < n; ++j) kx[j] = kernel_(x, points_[static_cast<std::size_t>(j)]);
  const double kx_mean = kx.mean();
  Vector centered = kx - kernel_row_means_;
  centered.array() += kernel_mean_ - kx_mean;
  return alphas_.transpose() * centered;
}

Vector kpca_project(const KpcaModel& model, const Vector& x) { return model.project(x); }

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t h = values.size() / 2;
  return values.size() % 2 ? values[h] : 0.5 * (values[h - 1] + values[h]);
}

ShellStats shell_stats(const std::vector<Vector>& set_a, const std::vector<Vector>& set_b) {
  if (set_a.empty() || set_b.empty()) throw Error("shell statistics need two nonempty sets");
  const Eigen::Index dim = set_a.front().size();
  check_same_dim(set_a, dim);
  check_same_dim(set_b, dim);

  auto centroid = [dim](const std::vector<Vector>& set) {
    Vector c = Vector::Zero(dim);
    for (const auto& v : set) c += v;
    return Vector(c / static_cast<double>(set.size()));
  };
  ShellStats s;
  s.centroid_a = centroid(set_a);
  s.centroid_b = centroid(set_b);
  s.origin = 0.5 * (s.centroid_a + s.centroid_b);
  s.centroid_offset = 0.5 * (s.centroid_a - s.centroid_b).norm();
  for (const auto& v : set_a) s.distances_a.push_back((v - s.origin).norm());
  for (const auto& v : set_b) s.distances_b.push_back((v - s.origin).norm());
  auto mean = [](const std::vector<double>& d) { return std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size()); };
  s.mean_a = mean(s.distances_a);
  s.mean_b = mean(s.distances_b);
  s.median_a = median(s.distances_a);
  s.median_b = median(s.distances_b);
  return s;
}

ComponentStats component_stats(const std::vector<Vector>& set) {
  if (set.empty()) throw Error("component statistics of an empty set");
  ComponentStats st;
  double sum = 0.0;
  for (const auto& v : set) {
    sum += v.sum();
    st.count += static_cast<std::size_t>(v.size());
  }
  if (st.count == 0) throw Error("component statistics of empty vectors");
  st.mean = sum / static_cast<double>(st.count);
  double ss = 0.0;
  for (const auto& v : set) ss += (v.array() - st.mean).square().sum();
  st.stddev = std::sqrt(ss / static_cast<double>(st.count));
  return st;
}

std::vector<ComponentStats> component_stats(const std::vector<std::vector<Vector>>& sets) {
  std::vector<ComponentStats> out;
  for (const auto& s : sets) out.push_back(component_stats(s));
  return out;
}

}  // namespace lossscape
