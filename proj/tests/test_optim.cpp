#include "lossscape/optim.hpp"

#include "testing.hpp"

#include <Eigen/Eigenvalues>

#include <limits>
#include <numbers>

using namespace lossscape;
using lossscape::testing::rel_err;

namespace {

const double kInvPhi = 1.0 / std::numbers::phi;

Matrix random_spd(Eigen::Index n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix q = Eigen::HouseholderQR<Matrix>(Matrix::NullaryExpr(n, n, [&] {
                     return std::normal_distribution<double>(0, 1)(rng);
                   })).householderQ();
  Vector eig(n);
  for (Eigen::Index i = 0; i < n; ++i) eig[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return q * eig.asDiagonal() * q.transpose();
}

// f(w) = -w while w < 2.5, NaN beyond.
class Cliff final : public ScalarLandscape {
 public:
  std::size_t dim() const override { return 1; }
  double value(const Vector& x) const override {
    return x[0] < 2.5 ? -x[0] : std::numeric_limits<double>::quiet_NaN();
  }
  Vector gradient(const Vector&) const override { return Vector::Constant(1, -1.0); }
  std::string describe() const override { return "cliff"; }
};

std::pair<Dataset, Dataset> mnist_subset(std::size_t n) {
  return load_mnist(MnistFiles::in_directory(LOSSSCAPE_DATA_DIR), n);
}

}  // namespace

// ---------------------------------------------------------------------------
// SGD
// ---------------------------------------------------------------------------

TEST_CASE("sgd on (w - 3)^2 converges to 3") {
  const QuadraticLandscape f(Matrix::Constant(1, 1, 2.0), Vector::Constant(1, 6.0));
  const LandscapeProblem problem(f);
  const TrainingTrace t = sgd_run(problem, Vector::Zero(1), {0.1, 1, 100, 0});
  CHECK(std::abs(t.final_params[0] - 3.0) < 1e-6);
  CHECK(t.records.size() == 101);
}

TEST_CASE("sgd with zero learning rate leaves parameters unchanged") {
  const QuadraticLandscape f(random_spd(4, 1, 2, 1), Vector::Ones(4));
  const LandscapeProblem problem(f);
  const Vector w0 = Vector::LinSpaced(4, -1, 1);
  const TrainingTrace t = sgd_run(problem, w0, {0.0, 1, 5, 0});
  CHECK(t.final_params == w0);
  for (const TraceRecord& r : t.records) CHECK(r.train_loss == t.records.front().train_loss);
}

TEST_CASE("sgd aborts on a non-finite loss") {
  const Cliff cliff;
  const LandscapeProblem problem(cliff);
  const TrainingTrace t = sgd_run(problem, Vector::Zero(1), {1.0, 1, 10, 0});
  CHECK(t.aborted);
  CHECK(!t.abort_reason.empty());
  CHECK(t.records.size() < 11);
}

TEST_CASE("sgd rejects bad settings") {
  const QuadraticLandscape f(Matrix::Identity(1, 1), Vector::Zero(1));
  const LandscapeProblem problem(f);
  CHECK_THROWS_AS(sgd_run(problem, Vector::Zero(1), {-1.0, 1, 1, 0}), Error);
  CHECK_THROWS_AS(sgd_run(problem, Vector::Zero(1), {0.1, 1, 0, 0}), Error);
  CHECK_THROWS_AS(sgd_run(problem, Vector::Zero(2), {0.1, 1, 1, 0}), Error);
}

TEST_CASE("sgd on a network: loss drops, traces are reproducible, early stopping is tracked") {
  const auto [train, test] = mnist_subset(1000);
  const NetworkSpec spec = NetworkSpec::fcp();
  const ParamVector p0 = init_params(spec, 3);
  const TrainingTrace a = sgd_run(spec, p0, train, test, 0.1, 64, 20, 9);
  CHECK(a.last().train_loss < std::log(10.0));
  CHECK(a.records.size() == 21);
  CHECK(a.best_test_index >= 1);
  CHECK(a.best_train_index >= 1);
  for (const TraceRecord& r : a.records) {
    CHECK(r.test_loss >= a.best_test().test_loss);
    if (r.step >= 1) CHECK(r.train_loss >= a.best_train().train_loss);
  }
  CHECK(a.records[5].sample_gradients == 5 * 1000);

  const TrainingTrace b = sgd_run(spec, p0, train, test, 0.1, 64, 20, 9);
  CHECK(a.final_params == b.final_params);
  CHECK(a.best_test_params == b.best_test_params);
  for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].train_loss == b.records[i].train_loss);
}

// ---------------------------------------------------------------------------
// L-BFGS two-loop recursion
// ---------------------------------------------------------------------------

TEST_CASE("empty history returns the gradient") {
  std::mt19937_64 rng(1);
  const Vector g = lossscape::testing::random_vector(7, rng);
  const LbfgsHistory h(5);
  CHECK(lbfgs_direction(g, h) == g);
}

TEST_CASE("one stored pair matches the closed-form BFGS update") {
  std::mt19937_64 rng(2);
  const Vector g = lossscape::testing::random_vector(5, rng);
  const Vector s = lossscape::testing::random_vector(5, rng);
  for (const Vector& y : {Vector(s), Vector(s + 0.3 * lossscape::testing::random_vector(5, rng))}) {
    REQUIRE(s.dot(y) > 0);
    LbfgsHistory h(3);
    REQUIRE(h.push(s, y));
    const double rho = 1.0 / y.dot(s);
    const double gamma = s.dot(y) / y.dot(y);
    const Matrix I = Matrix::Identity(5, 5);
    const Matrix H = (I - rho * s * y.transpose()) * (gamma * I) * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    CHECK(rel_err(lbfgs_direction(g, h), H * g) < 1e-14);
  }
  LbfgsHistory h(1);
  h.push(s, s);
  CHECK(rel_err(lbfgs_direction(g, h), g) < 1e-14);
}

TEST_CASE("two-loop recursion reproduces the inverse Hessian on a quadratic") {
  // Pairs from exact line searches are conjugate, so six of them pin down A^{-1} in six dimensions.
  const Eigen::Index n = 6;
  const Matrix A = random_spd(n, 0.5, 20.0, 3);
  std::mt19937_64 rng(4);
  Vector x = lossscape::testing::random_vector(n, rng);
  LbfgsHistory h(10);
  for (int k = 0; k < n; ++k) {
    const Vector g = A * x;
    const Vector p = lbfgs_direction(g, h);
    const double u = g.dot(p) / p.dot(A * p);
    const Vector s = -u * p;
    REQUIRE(h.push(s, A * s));
    x += s;
  }
  REQUIRE(h.size() == static_cast<std::size_t>(n));
  for (int trial = 0; trial < 5; ++trial) {
    const Vector g = lossscape::testing::random_vector(n, rng);
    CHECK(rel_err(lbfgs_direction(g, h), A.ldlt().solve(g)) < 1e-6);
  }
}

TEST_CASE("history eviction and curvature safeguard") {
  LbfgsHistory h(2);
  const Vector e0 = Vector::Unit(3, 0), e1 = Vector::Unit(3, 1), e2 = Vector::Unit(3, 2);
  CHECK(h.push(e0, e0));
  CHECK(h.push(e1, 2 * e1));
  CHECK(h.push(e2, 3 * e2));
  CHECK(h.size() == 2);
  CHECK(h.s_list().front() == e1);
  CHECK(h.y_list().back() == 3 * e2);
  CHECK_FALSE(h.push(e0, -e0));
  CHECK_FALSE(h.push(e0, e1));
  CHECK(h.size() == 2);
  CHECK_THROWS_AS(h.push(Vector::Ones(2), Vector::Ones(2)), Error);
  CHECK_THROWS_AS(h.push(Vector::Ones(3), Vector::Ones(2)), Error);
  CHECK_THROWS_AS(LbfgsHistory(0), Error);
  Vector bad = Vector::Ones(3);
  bad[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(lbfgs_direction(bad, h), Error);
}

// ---------------------------------------------------------------------------
// Golden section search
// ---------------------------------------------------------------------------

TEST_CASE("golden section finds the vertex of (u - 3)^2 on [0, 10]") {
  const GssConfig cfg;
  const GssResult r = golden_section_minimize([](double u) { return (u - 3) * (u - 3); }, 0.0, 10.0, cfg);
  CHECK(std::abs(r.step - 3.0) <= cfg.tolerance * 10.0);
  CHECK_FALSE(r.bracket_failed);
}

TEST_CASE("bracket contracts by 1/phi per iteration") {
  GssConfig cfg;
  cfg.tolerance = 1e-9;
  cfg.max_iterations = 20;
  const GssResult r = golden_section_minimize([](double u) { return (u - 3) * (u - 3); }, 0.0, 10.0, cfg);
  REQUIRE(r.widths.size() == 20);
  for (std::size_t k = 1; k <= 20; ++k) {
    CHECK(rel_err(r.widths[k - 1], 10.0 * std::pow(kInvPhi, static_cast<double>(k))) < 1e-12);
  }
}

TEST_CASE("golden section on a kinked unimodal function") {
  const GssConfig cfg;
  const GssResult r = golden_section_minimize([](double u) { return std::abs(u - 1); }, 0.0, 10.0, cfg);
  CHECK(std::abs(r.step - 1.0) <= cfg.tolerance * 10.0);
  const GssResult s = golden_section_search([](double u) { return std::abs(u - 1); }, cfg);
  CHECK(std::abs(s.step - 1.0) <= cfg.tolerance * (s.bracket_hi - s.bracket_lo));
}

TEST_CASE("search expands a bracket from zero") {
  const GssConfig cfg;
  const auto f = [](double u) { return (u - 3) * (u - 3); };
  const GssResult r = golden_section_search(f, cfg);
  CHECK(r.bracket_lo <= 3.0);
  CHECK(r.bracket_hi >= 3.0);
  CHECK(std::abs(r.step - 3.0) <= cfg.tolerance * (r.bracket_hi - r.bracket_lo));
  CHECK(r.evaluations > 0);
}

TEST_CASE("search shrinks an overshooting first probe") {
  const GssConfig cfg;
  const auto f = [](double u) { return (u - 1e-3) * (u - 1e-3); };
  const GssResult r = golden_section_search(f, cfg);
  CHECK_FALSE(r.bracket_failed);
  CHECK(r.bracket_hi < 1.0);
  CHECK(f(r.step) < f(0.0));
  CHECK(std::abs(r.step - 1e-3) <= cfg.tolerance * r.bracket_hi);
}

TEST_CASE("bracketing failures are flagged") {
  GssConfig cfg;
  cfg.max_bracket_steps = 5;
  const GssResult down = golden_section_search([](double u) { return -u; }, cfg);
  CHECK(down.bracket_failed);
  CHECK(down.step == 32.0);
  const GssResult up = golden_section_search([](double u) { return u; }, cfg);
  CHECK(up.bracket_failed);
}

TEST_CASE("the returned step is no worse than the bracket ends") {
  const GssConfig cfg;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> c(0.01, 50.0);
  for (int i = 0; i < 50; ++i) {
    const double centre = c(rng);
    const auto f = [centre](double u) { return std::pow(std::abs(u - centre), 1.5) - 1.0; };
    const GssResult r = golden_section_search(f, cfg);
    REQUIRE_FALSE(r.bracket_failed);
    CHECK(f(r.step) <= std::max(f(r.bracket_lo), f(r.bracket_hi)));
    CHECK(f(r.step) <= f(0.0));
  }
}

TEST_CASE("non-finite values count as increases") {
  const GssConfig cfg;
  const auto f = [](double u) { return u > 5 ? std::numeric_limits<double>::quiet_NaN() : (u - 4) * (u - 4); };
  const GssResult r = golden_section_search(f, cfg);
  CHECK(std::abs(r.step - 4.0) < 0.01);
}

TEST_CASE("gss config validation") {
  GssConfig cfg;
  cfg.bracket_growth = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.tolerance = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK_THROWS_AS(golden_section_minimize([](double u) { return u; }, 1.0, 1.0, GssConfig{}), Error);
}

// ---------------------------------------------------------------------------
// L-BFGS-GSS
// ---------------------------------------------------------------------------

TEST_CASE("l-bfgs-gss solves a 10-dim SPD quadratic within 15 iterations") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed + 100);
    const auto f = QuadraticLandscape::with_minimum(random_spd(10, 1.0, 10.0, seed), lossscape::testing::random_vector(10, rng));
    const LandscapeProblem problem(f);
    LbfgsGssConfig cfg;
    cfg.iterations = 15;
    const TrainingTrace t = lbfgs_gss_run(problem, lossscape::testing::random_vector(10, rng), cfg);
    CHECK(f.gradient(t.final_params).norm() < 1e-8);
    for (std::size_t k = 1; k < t.records.size(); ++k) {
      CHECK(t.records[k].train_loss <= t.records[k - 1].train_loss + 1e-12);
    }
  }
}

TEST_CASE("l-bfgs-gss never increases an SPD quadratic") {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const Matrix A = random_spd(8, 0.01, 100.0, seed);
    std::mt19937_64 rng(seed);
    const QuadraticLandscape f(A, lossscape::testing::random_vector(8, rng));
    const LandscapeProblem problem(f);
    LbfgsGssConfig cfg;
    cfg.iterations = 30;
    const TrainingTrace t = lbfgs_gss_run(problem, lossscape::testing::random_vector(8, rng, 10.0), cfg);
    for (std::size_t k = 1; k < t.records.size(); ++k) {
      CHECK(t.records[k].train_loss <= t.records[k - 1].train_loss + 1e-12 * std::abs(t.records[k - 1].train_loss));
    }
  }
}

TEST_CASE("l-bfgs-gss on Rosenbrock") {
  const Rosenbrock f;
  const LandscapeProblem problem(f);
  LbfgsGssConfig cfg;
  cfg.iterations = 200;
  const TrainingTrace t = lbfgs_gss_run(problem, Vector{{-1.2, 1.0}}, cfg);
  CHECK(f.value(t.best_train_params) < 1e-6);
}

TEST_CASE("l-bfgs-gss counts gradient and loss evaluations") {
  const Rosenbrock f;
  const LandscapeProblem problem(f);
  LbfgsGssConfig cfg;
  cfg.iterations = 5;
  const TrainingTrace t = lbfgs_gss_run(problem, Vector{{-1.2, 1.0}}, cfg);
  REQUIRE(t.records.size() == 6);
  for (std::size_t k = 0; k < t.records.size(); ++k) CHECK(t.records[k].sample_gradients == k + 1);
  CHECK(t.last().sample_losses > 5);
  CHECK_THROWS_AS(lbfgs_gss_run(problem, Vector::Zero(3), cfg), Error);
}

TEST_CASE("l-bfgs-gss beats sgd on training loss for the same gradient budget") {
  const auto [train, test] = mnist_subset(1000);
  const NetworkSpec spec = NetworkSpec::fcp();
  const ParamVector p0 = init_params(spec, 1);
  const TrainingTrace bfgs = lbfgs_gss_run(spec, p0, train, test, 100, 10);
  // One L-BFGS-GSS iteration takes one full-batch gradient, i.e. one epoch of per-sample gradients.
  const TrainingTrace sgd = sgd_run(spec, p0, train, test, 0.1, 64, 100, 2);
  REQUIRE(bfgs.last().sample_gradients == sgd.last().sample_gradients + 1000);
  CHECK(bfgs.last().train_loss < sgd.last().train_loss);
  CHECK_FALSE(bfgs.aborted);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

TEST_CASE("adam first step moves each coordinate by about the learning rate") {
  const AdamConfig cfg{0.01, 0.9, 0.999, 1e-8};
  AdamState st(3, cfg);
  CHECK(st.first_moment().isZero());
  CHECK(st.second_moment().isZero());
  const Vector g{{0.5, -2.0, 1e-3}};
  const Vector x = adam_step(st, Vector::Zero(3), g);
  CHECK(st.step_count() == 1);
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(x[i] == doctest::Approx(-0.01 * g[i] / (std::abs(g[i]) + 1e-8)).epsilon(1e-12));
    CHECK(std::abs(std::abs(x[i]) - 0.01) < 1e-6);
  }
}

TEST_CASE("adam with zero gradient stays put") {
  AdamState st(4);
  Vector x = Vector::LinSpaced(4, -1, 1);
  const Vector x0 = x;
  for (int i = 0; i < 100; ++i) x = adam_step(st, x, Vector::Zero(4));
  CHECK(x == x0);
  CHECK(st.step_count() == 100);
}

TEST_CASE("adam minimizes a 1D quadratic") {
  AdamState st(1, {0.05, 0.9, 0.999, 1e-8});
  Vector x = Vector::Constant(1, 5.0);
  for (int i = 0; i < 500; ++i) x = adam_step(st, x, 2.0 * (x.array() - 1.5).matrix());
  CHECK(std::abs(x[0] - 1.5) < 1e-3);
}

TEST_CASE("adam matches a hand-rolled update sequence") {
  const AdamConfig cfg{0.1, 0.8, 0.9, 1e-6};
  AdamState st(1, cfg);
  double x = 1.0, m = 0.0, v = 0.0;
  Vector xv = Vector::Constant(1, 1.0);
  for (int t = 1; t <= 10; ++t) {
    const double g = std::sin(static_cast<double>(t)) + x;
    m = 0.8 * m + 0.2 * g;
    v = 0.9 * v + 0.1 * g * g;
    const double mh = m / (1 - std::pow(0.8, t)), vh = v / (1 - std::pow(0.9, t));
    x -= 0.1 * mh / (std::sqrt(vh) + 1e-6);
    xv = adam_step(st, xv, Vector::Constant(1, std::sin(static_cast<double>(t)) + xv[0]));
    CHECK(xv[0] == doctest::Approx(x).epsilon(1e-13));
  }
  CHECK_THROWS_AS(adam_step(st, Vector::Zero(2), Vector::Zero(2)), Error);
}
