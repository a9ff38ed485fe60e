#include "lossscape/landscape.hpp"

#include <cmath>

namespace lossscape {

void ScalarLandscape::check_dim(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim()) {
    throw Error("point of dimension " + std::to_string(x.size()) + " on a landscape of dimension " +
                std::to_string(dim()));
  }
}

double GaussianMixture2D::value(double x, double y) {
  double f = kOffset;
  for (const auto& c : kAttractors) {
    const double dx = x - c[0], dy = y - c[1];
    f -= std::exp(-kAttractorWidth * (dx * dx + dy * dy));
  }
  for (const auto& d : kRepellers) {
    const double dx = x - d[0], dy = y - d[1];
    f += std::exp(-kRepellerWidth * (dx * dx + dy * dy));
  }
  return f;
}

std::array<double, 2> GaussianMixture2D::gradient(double x, double y) {
  std::array<double, 2> g{0.0, 0.0};
  for (const auto& c : kAttractors) {
    const double dx = x - c[0], dy = y - c[1];
    const double e = std::exp(-kAttractorWidth * (dx * dx + dy * dy));
    g[0] += 2.0 * kAttractorWidth * dx * e;
    g[1] += 2.0 * kAttractorWidth * dy * e;
  }
  for (const auto& d : kRepellers) {
    const double dx = x - d[0], dy = y - d[1];
    const double e = std::exp(-kRepellerWidth * (dx * dx + dy * dy));
    g[0] -= 2.0 * kRepellerWidth * dx * e;
    g[1] -= 2.0 * kRepellerWidth * dy * e;
  }
  return g;
}

double GaussianMixture2D::value(const Vector& x) const {
  check_dim(x);
  return value(x[0], x[1]);
}

Vector GaussianMixture2D::gradient(const Vector& x) const {
  check_dim(x);
  const auto g = gradient(x[0], x[1]);
  return Vector{{g[0], g[1]}};
}

NnLandscape::NnLandscape(NetworkSpec spec, Batch data, std::string tag)
    : spec_(std::move(spec)), data_(std::move(data)), tag_(std::move(tag)) {
  spec_.validate();
  if (data_.empty()) throw Error("landscape needs a nonempty dataset");
}

double NnLandscape::value(const Vector& x) const {
  check_dim(x);
  return loss(spec_, ParamVector(x), data_);
}

Vector NnLandscape::gradient(const Vector& x) const {
  Vector g;
  value_and_gradient(x, g);
  return g;
}

double NnLandscape::value_and_gradient(const Vector& x, Vector& grad) const {
  check_dim(x);
  LossAndGrad lg = loss_and_grad(spec_, ParamVector(x), data_);
  grad = lg.grad.values();
  return lg.loss;
}

NnLandscape nn_landscape(const NetworkSpec& spec, const Dataset& data, std::size_t subset) {
  const std::string split = data.split() == SplitTag::train ? "train" : "test";
  if (subset == 0 || subset >= data.size()) {
    return {spec, data.as_batch(), "nn:" + split + "[0:" + std::to_string(data.size()) + "]"};
  }
  return {spec, data.head(subset).as_batch(), "nn:" + split + "[0:" + std::to_string(subset) + "]"};
}

QuadraticLandscape::QuadraticLandscape(Matrix a, Vector center, double min_value)
    : a_(std::move(a)), center_(std::move(center)), min_value_(min_value) {
  if (a_.rows() != a_.cols() || a_.rows() != center_.size()) throw Error("quadratic: shape mismatch");
}

QuadraticLandscape::QuadraticLandscape(Matrix a, Vector b) : QuadraticLandscape(a, Vector::Zero(b.size()), 0.0) {
  center_ = a_.ldlt().solve(b);
  min_value_ = -0.5 * b.dot(center_);
}

QuadraticLandscape QuadraticLandscape::with_minimum(Matrix a, Vector center, double min_value) {
  return {std::move(a), std::move(center), min_value};
}

double QuadraticLandscape::value(const Vector& x) const {
  check_dim(x);
  const Vector d = x - center_;
  return 0.5 * d.dot(a_ * d) + min_value_;
}

Vector QuadraticLandscape::gradient(const Vector& x) const {
  check_dim(x);
  return a_ * (x - center_);
}

double Rosenbrock::value(const Vector& x) const {
  check_dim(x);
  const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
  return a * a + 100.0 * b * b;
}

Vector Rosenbrock::gradient(const Vector& x) const {
  check_dim(x);
  const double b = x[1] - x[0] * x[0];
  return Vector{{-2.0 * (1.0 - x[0]) - 400.0 * x[0] * b, 200.0 * b}};
}

}  // namespace lossscape
