#pragma once

#include "lossscape/landscape.hpp"
#include "lossscape/mnist.hpp"
#include "lossscape/nn.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lossscape {

// ---------------------------------------------------------------------------
// Training problems
// ---------------------------------------------------------------------------

/// What the trainers need from an objective: per-batch gradients over a
/// training set of `train_size()` samples, full training loss/gradient, and an
/// optional held-out loss for early stopping.
class TrainingProblem {
 public:
  virtual ~TrainingProblem() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t train_size() const = 0;
  virtual double batch_loss_and_grad(const Vector& w, std::span<const std::size_t> samples, Vector& grad) const = 0;
  virtual double train_loss(const Vector& w) const = 0;
  virtual double train_loss_and_grad(const Vector& w, Vector& grad) const = 0;
  virtual std::optional<double> test_loss(const Vector& w) const = 0;

  /// u -> train_loss(w - u * p). Implementations may precompute parts that are shared along the ray.
  virtual std::function<double(double)> line_loss(const Vector& w, const Vector& p) const {
    return [this, w, p](double u) { return train_loss(w - u * p); };
  }
};

/// Network loss on a training and a test dataset. Holds references; both
/// datasets must outlive the problem.
class NnTrainingProblem final : public TrainingProblem {
 public:
  NnTrainingProblem(NetworkSpec spec, const Dataset& train, const Dataset* test);

  std::size_t dim() const override { return spec_.num_params(); }
  std::size_t train_size() const override { return train_->size(); }
  double batch_loss_and_grad(const Vector& w, std::span<const std::size_t> samples, Vector& grad) const override;
  double train_loss(const Vector& w) const override;
  double train_loss_and_grad(const Vector& w, Vector& grad) const override;
  std::optional<double> test_loss(const Vector& w) const override;
  std::function<double(double)> line_loss(const Vector& w, const Vector& p) const override;

 private:
  NetworkSpec spec_;
  const Dataset* train_;
  const Dataset* test_;
};

/// A deterministic landscape treated as a one-sample training set.
class LandscapeProblem final : public TrainingProblem {
 public:
  explicit LandscapeProblem(const ScalarLandscape& train, const ScalarLandscape* test = nullptr)
      : train_(&train), test_(test) {}

  std::size_t dim() const override { return train_->dim(); }
  std::size_t train_size() const override { return 1; }
  double batch_loss_and_grad(const Vector& w, std::span<const std::size_t>, Vector& grad) const override {
    return train_->value_and_gradient(w, grad);
  }
  double train_loss(const Vector& w) const override { return train_->value(w); }
  double train_loss_and_grad(const Vector& w, Vector& grad) const override {
    return train_->value_and_gradient(w, grad);
  }
  std::optional<double> test_loss(const Vector& w) const override {
    if (!test_) return std::nullopt;
    return test_->value(w);
  }

 private:
  const ScalarLandscape* train_;
  const ScalarLandscape* test_;
};

// ---------------------------------------------------------------------------
// Training traces
// ---------------------------------------------------------------------------

struct TraceRecord {
  std::size_t step = 0;  // epoch (SGD) or iteration (L-BFGS-GSS); 0 is the starting point
  double train_loss = 0.0;
  double test_loss = 0.0;  // NaN when the problem has no test set
  std::uint64_t sample_gradients = 0;  // cumulative per-sample gradient evaluations
  std::uint64_t sample_losses = 0;     // cumulative per-sample forward-only evaluations
};

struct TrainingTrace {
  std::string optimizer;
  std::vector<TraceRecord> records;
  std::size_t best_train_index = 0;  // into records; never 0 when any step completed
  std::size_t best_test_index = 0;
  Vector best_train_params;  // snapshot at the minimum of training loss
  Vector best_test_params;   // snapshot at the minimum of test loss (early stopping)
  Vector final_params;
  bool aborted = false;
  std::string abort_reason;
  std::size_t line_search_fallbacks = 0;
  double wall_seconds = 0.0;

  const TraceRecord& best_train() const { return records.at(best_train_index); }
  const TraceRecord& best_test() const { return records.at(best_test_index); }
  const TraceRecord& last() const { return records.back(); }
};

// ---------------------------------------------------------------------------
// SGD
// ---------------------------------------------------------------------------

struct SgdConfig {
  double learning_rate = 0.1;
  std::size_t batch_size = 64;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
};

/// Plain mini-batch SGD, w <- w - lr * g per batch; full losses recorded once per epoch.
TrainingTrace sgd_run(const TrainingProblem& problem, const Vector& w0, const SgdConfig& config);

TrainingTrace sgd_run(const NetworkSpec& spec, const ParamVector& params0, const Dataset& train,
                      const Dataset& test, double lr, std::size_t batch_size, std::size_t epochs,
                      std::uint64_t seed);

// ---------------------------------------------------------------------------
// L-BFGS
// ---------------------------------------------------------------------------

/// The m most recent (s, y) pairs; oldest evicted first.
class LbfgsHistory {
 public:
  static constexpr double kCurvatureThreshold = 1e-10;

  explicit LbfgsHistory(std::size_t memory = 10);

  /// Stores the pair unless s^T y <= 1e-10 |s| |y|. Returns whether it was stored.
  bool push(Vector s, Vector y);
  void clear();

  std::size_t size() const { return s_.size(); }
  bool empty() const { return s_.empty(); }
  std::size_t memory() const { return memory_; }
  const std::deque<Vector>& s_list() const { return s_; }
  const std::deque<Vector>& y_list() const { return y_; }

 private:
  std::size_t memory_;
  std::deque<Vector> s_;
  std::deque<Vector> y_;
};

/// Two-loop recursion: p ~ H^{-1} grad, with H0 = (s^T y / y^T y) I from the newest
/// pair (identity when empty). The caller steps along -p.
Vector lbfgs_direction(const Vector& grad, const LbfgsHistory& hist);

// ---------------------------------------------------------------------------
// Golden section search
// ---------------------------------------------------------------------------

struct GssConfig {
  double initial_step = 1.0;
  double bracket_growth = 2.0;
  int max_bracket_steps = 40;
  double tolerance = 1e-3;  // relative to the initial bracket width
  int max_iterations = 50;

  void validate() const;
};

struct GssResult {
  double step = 0.0;
  bool bracket_failed = false;
  int evaluations = 0;
  double bracket_lo = 0.0, bracket_hi = 0.0;  // initial bracket
  std::vector<double> widths;                 // bracket width after each contraction
};

/// Minimizes f on [lo, hi] assuming the interval brackets a minimum.
GssResult golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                                  const GssConfig& config);

/// Brackets a minimum of f on [0, inf) by growing a probe step from 0, then
/// contracts it. `f0` is f(0) when already known. A first probe that does not
/// improve on f(0) is shrunk by the growth factor until it does. When no
/// bracket is found within max_bracket_steps the last probed step is returned
/// with `bracket_failed` set.
GssResult golden_section_search(const std::function<double(double)>& f, const GssConfig& config,
                                std::optional<double> f0 = std::nullopt);

// ---------------------------------------------------------------------------
// L-BFGS-GSS
// ---------------------------------------------------------------------------

struct LbfgsGssConfig {
  std::size_t iterations = 150;
  std::size_t memory = 10;
  GssConfig line_search;
  double fallback_step = 1e-3;
};

/// Full-batch quasi-Newton descent: direction from the two-loop recursion, step
/// from golden section search, w <- w - u p.
TrainingTrace lbfgs_gss_run(const TrainingProblem& problem, const Vector& w0, const LbfgsGssConfig& config);

TrainingTrace lbfgs_gss_run(const NetworkSpec& spec, const ParamVector& params0, const Dataset& train,
                            const Dataset& test, std::size_t iterations, std::size_t memory);

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  AdamState(std::size_t n, AdamConfig config = {});

  /// One bias-corrected update of `variable` in place.
  void update(std::span<double> variable, std::span<const double> grad);

  std::uint64_t step_count() const { return step_; }
  const Vector& first_moment() const { return m_; }
  const Vector& second_moment() const { return v_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  Vector m_;
  Vector v_;
  std::uint64_t step_ = 0;
};

Vector adam_step(AdamState& state, Vector variable, const Vector& grad);

}  // namespace lossscape
