#pragma once

#include "lossscape/mnist.hpp"
#include "lossscape/nn.hpp"

#include <array>
#include <string>

namespace lossscape {

/// A differentiable scalar field over R^dim.
///
/// Implementations are immutable after construction; value/gradient may be
/// called concurrently from several threads.
class ScalarLandscape {
 public:
  virtual ~ScalarLandscape() = default;

  virtual std::size_t dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;

  /// Returns the value and writes the gradient; override when both share work.
  virtual double value_and_gradient(const Vector& x, Vector& grad) const {
    grad = gradient(x);
    return value(x);
  }

  /// Short identity string recorded in outputs.
  virtual std::string describe() const = 0;

 protected:
  void check_dim(const Vector& x) const;
};

/// Two attracting and two repelling Gaussians plus a constant offset:
///   f(r) = -sum_i exp(-3 |r - c_i|^2) + sum_j exp(-15 |r - d_j|^2) + C.
class GaussianMixture2D final : public ScalarLandscape {
 public:
  static constexpr std::array<std::array<double, 2>, 2> kAttractors{{{-0.5, -0.5}, {0.5, 0.0}}};
  static constexpr std::array<std::array<double, 2>, 2> kRepellers{{{-0.2, -0.4}, {0.0, 0.3}}};
  static constexpr double kAttractorWidth = 3.0;
  static constexpr double kRepellerWidth = 15.0;
  static constexpr double kOffset = 1.019;

  /// The two minima the reference paths connect.
  static Vector minimum_a() { return Vector{{-0.62, -0.54}}; }
  static Vector minimum_b() { return Vector{{0.49, -0.02}}; }

  static double value(double x, double y);
  static std::array<double, 2> gradient(double x, double y);

  std::size_t dim() const override { return 2; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  std::string describe() const override { return "gaussian_mixture_2d"; }
};

/// Mean network loss over a fixed sample set, as a function of the flat parameters.
class NnLandscape final : public ScalarLandscape {
 public:
  NnLandscape(NetworkSpec spec, Batch data, std::string tag);

  std::size_t dim() const override { return spec_.num_params(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  double value_and_gradient(const Vector& x, Vector& grad) const override;
  std::string describe() const override { return tag_; }

  const NetworkSpec& spec() const { return spec_; }
  std::size_t num_samples() const { return data_.size(); }

 private:
  NetworkSpec spec_;
  Batch data_;
  std::string tag_;
};

/// Loss landscape of `spec` on `data` (or on its first `subset` samples when nonzero).
NnLandscape nn_landscape(const NetworkSpec& spec, const Dataset& data, std::size_t subset = 0);

/// f(x) = 1/2 x^T A x - b^T x with A symmetric positive definite, evaluated
/// as 1/2 (x - x*)^T A (x - x*) + f(x*).
class QuadraticLandscape final : public ScalarLandscape {
 public:
  QuadraticLandscape(Matrix a, Vector b);
  /// 1/2 (x - center)^T A (x - center) + min_value.
  static QuadraticLandscape with_minimum(Matrix a, Vector center, double min_value = 0.0);

  std::size_t dim() const override { return static_cast<std::size_t>(center_.size()); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  std::string describe() const override { return "quadratic"; }

  const Matrix& hessian() const { return a_; }
  const Vector& minimizer() const { return center_; }
  double min_value() const { return min_value_; }

 private:
  QuadraticLandscape(Matrix a, Vector center, double min_value);

  Matrix a_;
  Vector center_;
  double min_value_ = 0.0;
};

/// 2D Rosenbrock, (1 - x)^2 + 100 (y - x^2)^2.
class Rosenbrock final : public ScalarLandscape {
 public:
  std::size_t dim() const override { return 2; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  std::string describe() const override { return "rosenbrock"; }
};

}  // namespace lossscape
