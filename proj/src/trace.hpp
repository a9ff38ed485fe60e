#pragma once

// Bookkeeping shared by the SGD and L-BFGS-GSS trainers.

#include "lossscape/optim.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace lossscape::detail {

class TraceBuilder {
 public:
  TraceBuilder(std::string optimizer, const TrainingProblem& problem)
      : problem_(problem), start_(std::chrono::steady_clock::now()) {
    trace_.optimizer = std::move(optimizer);
  }

  // Records the full losses at w; the first record is the starting point and
  // does not compete for the best-train/best-test snapshots.
  void record(std::size_t step, double train_loss, const Vector& w, std::uint64_t sample_gradients,
              std::uint64_t sample_losses) {
    TraceRecord r;
    r.step = step;
    r.train_loss = train_loss;
    const auto test = problem_.test_loss(w);
    r.test_loss = test ? *test : std::numeric_limits<double>::quiet_NaN();
    r.sample_gradients = sample_gradients;
    r.sample_losses = sample_losses;
    trace_.records.push_back(r);
    const std::size_t idx = trace_.records.size() - 1;
    if (idx <= 1 || train_loss < trace_.best_train().train_loss) {
      trace_.best_train_index = idx;
      trace_.best_train_params = w;
    }
    if (std::isfinite(r.test_loss) && (idx <= 1 || !(trace_.best_test().test_loss <= r.test_loss))) {
      trace_.best_test_index = idx;
      trace_.best_test_params = w;
    }
    trace_.final_params = w;
  }

  void abort(std::string reason) {
    trace_.aborted = true;
    trace_.abort_reason = std::move(reason);
  }

  TrainingTrace& trace() { return trace_; }

  TrainingTrace finish() {
    if (trace_.best_test_params.size() == 0) {
      trace_.best_test_index = trace_.best_train_index;
      trace_.best_test_params = trace_.best_train_params;
    }
    trace_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return std::move(trace_);
  }

 private:
  const TrainingProblem& problem_;
  TrainingTrace trace_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace lossscape::detail
