#include "lossscape/optim.hpp"

#include "trace.hpp"

#include <cmath>

namespace lossscape {

TrainingTrace sgd_run(const TrainingProblem& problem, const Vector& w0, const SgdConfig& config) {
  if (!(config.learning_rate >= 0.0)) throw Error("learning rate must be nonnegative");
  if (config.epochs == 0) throw Error("epochs must be at least 1");
  if (static_cast<std::size_t>(w0.size()) != problem.dim()) throw Error("initial point has the wrong dimension");

  detail::TraceBuilder tb("sgd", problem);
  const std::uint64_t n = problem.train_size();
  std::uint64_t grads = 0;
  std::uint64_t losses = n;
  Vector w = w0;
  tb.record(0, problem.train_loss(w), w, grads, losses);

  Vector g;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const BatchPlan plan{config.batch_size, config.seed, epoch};
    for (const auto& idx : batch_indices(n, plan)) {
      const double l = problem.batch_loss_and_grad(w, idx, g);
      grads += idx.size();
      if (!std::isfinite(l) || !g.allFinite()) {
        tb.abort("non-finite mini-batch loss in epoch " + std::to_string(epoch));
        return tb.finish();
      }
      w.noalias() -= config.learning_rate * g;
    }
    const double train = problem.train_loss(w);
    losses += n;
    if (!std::isfinite(train)) {
      tb.abort("non-finite training loss after epoch " + std::to_string(epoch));
      return tb.finish();
    }
    tb.record(epoch, train, w, grads, losses);
  }
  return tb.finish();
}

TrainingTrace sgd_run(const NetworkSpec& spec, const ParamVector& params0, const Dataset& train,
                      const Dataset& test, double lr, std::size_t batch_size, std::size_t epochs,
                      std::uint64_t seed) {
  const NnTrainingProblem problem(spec, train, &test);
  return sgd_run(problem, params0.values(), SgdConfig{lr, batch_size, epochs, seed});
}

}  // namespace lossscape
