#include "lossscape/optim.hpp"

#include "trace.hpp"

#include <cmath>

namespace lossscape {

LbfgsHistory::LbfgsHistory(std::size_t memory) : memory_(memory) {
  if (memory == 0) throw Error("L-BFGS memory must be at least 1");
}

bool LbfgsHistory::push(Vector s, Vector y) {
  if (s.size() != y.size()) throw Error("s and y must have equal length");
  if (!s_.empty() && s.size() != s_.front().size()) throw Error("history pair has the wrong dimension");
  const double sy = s.dot(y);
  if (!(sy > kCurvatureThreshold * s.norm() * y.norm())) return false;
  if (s_.size() == memory_) {
    s_.pop_front();
    y_.pop_front();
  }
  s_.push_back(std::move(s));
  y_.push_back(std::move(y));
  return true;
}

void LbfgsHistory::clear() {
  s_.clear();
  y_.clear();
}

Vector lbfgs_direction(const Vector& grad, const LbfgsHistory& hist) {
  if (!grad.allFinite()) throw Error("non-finite gradient passed to L-BFGS");
  const std::size_t k = hist.size();
  const auto& s = hist.s_list();
  const auto& y = hist.y_list();
  std::vector<double> rho(k), alpha(k);
  Vector q = grad;
  for (std::size_t i = k; i-- > 0;) {
    rho[i] = 1.0 / y[i].dot(s[i]);
    alpha[i] = rho[i] * s[i].dot(q);
    q.noalias() -= alpha[i] * y[i];
  }
  const double gamma = k == 0 ? 1.0 : s.back().dot(y.back()) / y.back().squaredNorm();
  Vector r = gamma * q;
  for (std::size_t i = 0; i < k; ++i) {
    const double beta = rho[i] * y[i].dot(r);
    r.noalias() += (alpha[i] - beta) * s[i];
  }
  if (!r.allFinite()) throw Error("non-finite L-BFGS direction (corrupted history)");
  return r;
}

TrainingTrace lbfgs_gss_run(const TrainingProblem& problem, const Vector& w0, const LbfgsGssConfig& config) {
  if (config.iterations == 0) throw Error("iterations must be at least 1");
  if (static_cast<std::size_t>(w0.size()) != problem.dim()) throw Error("initial point has the wrong dimension");
  config.line_search.validate();

  detail::TraceBuilder tb("lbfgs_gss", problem);
  const std::uint64_t n = problem.train_size();
  std::uint64_t grads = 0;
  std::uint64_t losses = 0;

  LbfgsHistory hist(config.memory);
  Vector w = w0;
  Vector g;
  double f = problem.train_loss_and_grad(w, g);
  grads += n;
  tb.record(0, f, w, grads, losses);
  if (!std::isfinite(f)) {
    tb.abort("non-finite training loss at the starting point");
    return tb.finish();
  }

  Vector g_new;
  for (std::size_t k = 1; k <= config.iterations; ++k) {
    const Vector p = lbfgs_direction(g, hist);
    const GssResult ls = golden_section_search(problem.line_loss(w, p), config.line_search, f);
    losses += static_cast<std::uint64_t>(ls.evaluations) * n;
    double u = ls.step;
    if (ls.bracket_failed) {
      u = config.fallback_step;
      ++tb.trace().line_search_fallbacks;
      hist.clear();
    }
    Vector w_new = w - u * p;
    const double f_new = problem.train_loss_and_grad(w_new, g_new);
    grads += n;
    if (!std::isfinite(f_new) || !g_new.allFinite()) {
      tb.abort("non-finite training loss at iteration " + std::to_string(k));
      return tb.finish();
    }
    hist.push(w_new - w, g_new - g);
    w = std::move(w_new);
    g = g_new;
    f = f_new;
    tb.record(k, f, w, grads, losses);
  }
  return tb.finish();
}

TrainingTrace lbfgs_gss_run(const NetworkSpec& spec, const ParamVector& params0, const Dataset& train,
                            const Dataset& test, std::size_t iterations, std::size_t memory) {
  const NnTrainingProblem problem(spec, train, &test);
  LbfgsGssConfig config;
  config.iterations = iterations;
  config.memory = memory;
  return lbfgs_gss_run(problem, params0.values(), config);
}

}  // namespace lossscape
