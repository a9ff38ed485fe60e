#include "lossscape/nn.hpp"

#include "testing.hpp"

#include <algorithm>
#include <cstring>
#include <numbers>

using namespace lossscape;
using lossscape::testing::rel_err;

namespace {

Batch random_labeled(std::size_t n, int in, int classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Batch b;
  b.inputs.resize(static_cast<Eigen::Index>(n), in);
  for (Eigen::Index i = 0; i < b.inputs.size(); ++i) b.inputs.data()[i] = u(rng);
  for (std::size_t i = 0; i < n; ++i) b.labels.push_back(static_cast<int>(rng() % static_cast<unsigned>(classes)));
  return b;
}

Batch random_unlabeled(std::size_t n, int in, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Batch b;
  b.inputs.resize(static_cast<Eigen::Index>(n), in);
  for (Eigen::Index i = 0; i < b.inputs.size(); ++i) b.inputs.data()[i] = u(rng);
  return b;
}

ParamVector random_params(const NetworkSpec& spec, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  return ParamVector(lossscape::testing::random_vector(spec.num_params(), rng, scale));
}

// Reverse-mode gradient against central differences on `probes` random coordinates.
double gradient_audit(const NetworkSpec& spec, const ParamVector& p, const Batch& b, std::size_t probes,
                      std::uint64_t seed) {
  const Vector g = loss_and_grad(spec, p, b).grad.values();
  std::mt19937_64 rng(seed);
  Vector fd(static_cast<Eigen::Index>(probes)), an(static_cast<Eigen::Index>(probes));
  for (std::size_t k = 0; k < probes; ++k) {
    const auto i = static_cast<Eigen::Index>(rng() % spec.num_params());
    fd[static_cast<Eigen::Index>(k)] = lossscape::testing::central_difference(
        [&](const Vector& x) { return loss(spec, ParamVector(x), b); }, p.values(), i, 1e-5);
    an[static_cast<Eigen::Index>(k)] = g[i];
  }
  return rel_err(an, fd);
}

// Straight-line forward pass used as an oracle for small networks.
double scalar_loop_loss(const NetworkSpec& spec, const ParamVector& p, const Batch& b) {
  double total = 0.0;
  for (Eigen::Index s = 0; s < b.inputs.rows(); ++s) {
    std::vector<double> a(b.inputs.row(s).data(), b.inputs.row(s).data() + b.inputs.cols());
    std::size_t off = 0;
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
      const int in = spec.layer_sizes[l], out = spec.layer_sizes[l + 1];
      std::vector<double> z(static_cast<std::size_t>(out), 0.0);
      for (int r = 0; r < out; ++r) {
        for (int c = 0; c < in; ++c) z[static_cast<std::size_t>(r)] += p[off + static_cast<std::size_t>(r * in + c)] * a[static_cast<std::size_t>(c)];
      }
      off += static_cast<std::size_t>(in * out);
      if (spec.use_bias[l]) {
        for (int r = 0; r < out; ++r) z[static_cast<std::size_t>(r)] += p[off + static_cast<std::size_t>(r)];
        off += static_cast<std::size_t>(out);
      }
      for (double& v : z) {
        switch (spec.activations[l]) {
          case Activation::relu: v = v > 0 ? v : 0; break;
          case Activation::softplus: v = std::log(1 + std::exp(v)); break;
          case Activation::sigmoid: v = 1 / (1 + std::exp(-v)); break;
          case Activation::identity: break;
        }
      }
      a = z;
    }
    if (spec.loss_kind == LossKind::cross_entropy_softmax) {
      double sum_exp = 0;
      for (double v : a) sum_exp += std::exp(v);
      total += std::log(sum_exp) - a[static_cast<std::size_t>(b.labels[static_cast<std::size_t>(s)])];
    } else {
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b.inputs(s, static_cast<Eigen::Index>(k));
        total += d * d / static_cast<double>(a.size());
      }
    }
  }
  return total / static_cast<double>(b.inputs.rows());
}

}  // namespace

TEST_CASE("parameter counts of the two reference networks") {
  CHECK(NetworkSpec::fcp().num_params() == 784 * 50 + 50 * 50 + 50 * 10);
  CHECK(NetworkSpec::fcp().num_params() == 42200);
  CHECK(NetworkSpec::autoencoder().num_params() == 52224);
}

TEST_CASE("parameter count includes biases") {
  const NetworkSpec spec{{3, 4, 2}, {Activation::relu, Activation::identity}, {true, false},
                         LossKind::cross_entropy_softmax};
  CHECK(spec.num_params() == 3 * 4 + 4 + 4 * 2);
  CHECK(spec.weight_offset(1) == 16);
  CHECK(spec.bias_offset(0) == 12);
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(NetworkSpec({{5}, {}, {}, LossKind::mean_squared_error}).validate(), Error);
  CHECK_THROWS_AS(NetworkSpec({{5, 0}, {Activation::relu}, {false}, LossKind::mean_squared_error}).validate(), Error);
  CHECK_THROWS_AS(NetworkSpec({{5, 2}, {}, {false}, LossKind::mean_squared_error}).validate(), Error);
  CHECK_NOTHROW(NetworkSpec::fcp().validate());
}

TEST_CASE("canonical text identifies the network") {
  CHECK(NetworkSpec::fcp().canonical() == "784-50-50-10|relu,relu,identity|0,0,0|cross_entropy");
  CHECK(NetworkSpec::fcp().hash() != NetworkSpec::autoencoder().hash());
}

TEST_CASE("flatten and unflatten round trip bit-identically") {
  for (const NetworkSpec& spec :
       {NetworkSpec::fcp(), NetworkSpec::autoencoder(),
        NetworkSpec{{7, 5, 3}, {Activation::sigmoid, Activation::identity}, {true, true}, LossKind::mean_squared_error}}) {
    const ParamVector v = random_params(spec, 11, 1.0);
    const Network net = unflatten(spec, v);
    const ParamVector back = flatten(net);
    REQUIRE(back.size() == v.size());
    CHECK(std::memcmp(back.values().data(), v.values().data(), sizeof(double) * v.size()) == 0);
  }
}

TEST_CASE("layout is layer-major, row-major, bias after weights") {
  const NetworkSpec spec{{2, 2, 1}, {Activation::identity, Activation::identity}, {true, false},
                         LossKind::mean_squared_error};
  ParamVector v(spec.num_params());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  const Network net = unflatten(spec, v);
  CHECK(net.layers[0].weight(0, 1) == 1.0);
  CHECK(net.layers[0].weight(1, 0) == 2.0);
  CHECK(net.layers[0].bias[1] == 5.0);
  CHECK(net.layers[1].weight(0, 0) == 6.0);
}

TEST_CASE("unflatten rejects a wrong length") {
  CHECK_THROWS_AS(unflatten(NetworkSpec::fcp(), ParamVector(10)), Error);
}

TEST_CASE("zero parameters give a uniform softmax") {
  const Batch b = random_labeled(17, 784, 10, 3);
  CHECK(loss(NetworkSpec::fcp(), ParamVector(42200), b) == doctest::Approx(std::log(10.0)).epsilon(1e-14));
  CHECK(loss(NetworkSpec::fcp(), ParamVector(42200), b) == doctest::Approx(2.302585).epsilon(1e-6));
}

TEST_CASE("toy 4-2-2 network matches a scalar-loop forward pass") {
  const NetworkSpec spec{{4, 2, 2}, {Activation::relu, Activation::identity}, {true, true},
                         LossKind::cross_entropy_softmax};
  const ParamVector p = random_params(spec, 2024, 0.8);
  const Batch b = random_labeled(3, 4, 2, 7);
  CHECK(rel_err(loss(spec, p, b), scalar_loop_loss(spec, p, b)) < 1e-14);

  const NetworkSpec ae{{4, 2, 4}, {Activation::softplus, Activation::sigmoid}, {false, true},
                       LossKind::mean_squared_error};
  const ParamVector q = random_params(ae, 5, 0.8);
  const Batch u = random_unlabeled(3, 4, 8);
  CHECK(rel_err(loss(ae, q, u), scalar_loop_loss(ae, q, u)) < 1e-14);
}

TEST_CASE("exact reconstruction has zero loss and zero gradient") {
  // Identity network 3-3 with identity activation regressing onto its own inputs.
  const NetworkSpec spec{{3, 3}, {Activation::identity}, {false}, LossKind::mean_squared_error};
  ParamVector p(9);
  p[0] = p[4] = p[8] = 1.0;
  const Batch b = random_unlabeled(5, 3, 9);
  const LossAndGrad lg = loss_and_grad(spec, p, b);
  CHECK(lg.loss == 0.0);
  CHECK(lg.grad.values().norm() < 1e-12);
}

TEST_CASE("single linear unit matches the closed-form gradient") {
  const NetworkSpec spec{{2, 1}, {Activation::identity}, {false}, LossKind::mean_squared_error};
  ParamVector w(2);
  w[0] = 0.3;
  w[1] = -1.7;
  Batch b;
  b.inputs = RowMatrix{{0.25, 0.5}};
  b.targets = RowMatrix{{0.9}};
  const LossAndGrad lg = loss_and_grad(spec, w, b);
  const double r = 0.3 * 0.25 - 1.7 * 0.5 - 0.9;
  CHECK(lg.loss == doctest::Approx(r * r).epsilon(1e-15));
  CHECK(lg.grad[0] == doctest::Approx(2 * r * 0.25).epsilon(1e-15));
  CHECK(lg.grad[1] == doctest::Approx(2 * r * 0.5).epsilon(1e-15));
}

TEST_CASE("reverse-mode gradients match central differences") {
  SUBCASE("fcp") {
    const NetworkSpec spec = NetworkSpec::fcp();
    const Batch b = random_labeled(8, 784, 10, 1);
    CHECK(gradient_audit(spec, init_params(spec, 1), b, 60, 2) < 1e-5);
  }
  SUBCASE("autoencoder") {
    const NetworkSpec spec = NetworkSpec::autoencoder();
    const Batch b = random_unlabeled(6, 784, 3);
    CHECK(gradient_audit(spec, init_params(spec, 4), b, 60, 5) < 1e-5);
  }
  SUBCASE("biases and every activation") {
    for (Activation act : {Activation::relu, Activation::softplus, Activation::sigmoid, Activation::identity}) {
      const NetworkSpec spec{{6, 5, 4, 3}, {act, Activation::sigmoid, Activation::identity}, {true, true, true},
                             LossKind::cross_entropy_softmax};
      const Batch b = random_labeled(9, 6, 3, 6);
      CHECK(gradient_audit(spec, random_params(spec, 7, 0.7), b, 50, 8) < 1e-5);
      const NetworkSpec reg{{6, 5, 6}, {act, Activation::sigmoid}, {true, false}, LossKind::mean_squared_error};
      CHECK(gradient_audit(reg, random_params(reg, 9, 0.7), random_unlabeled(4, 6, 10), 50, 11) < 1e-5);
    }
  }
}

TEST_CASE("loss and loss_and_grad agree") {
  const NetworkSpec spec = NetworkSpec::fcp();
  const Batch b = random_labeled(20, 784, 10, 12);
  const ParamVector p = init_params(spec, 13);
  CHECK(loss_and_grad(spec, p, b).loss == loss(spec, p, b));
}

TEST_CASE("softmax stays finite for large parameters") {
  const NetworkSpec spec{{784, 10}, {Activation::identity}, {false}, LossKind::cross_entropy_softmax};
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  ParamVector p(spec.num_params());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = u(rng);
  const Batch b = random_labeled(5, 784, 10, 15);
  const LossAndGrad lg = loss_and_grad(spec, p, b);
  CHECK(std::isfinite(lg.loss));
  CHECK(lg.grad.values().allFinite());
  CHECK(std::isfinite(loss(NetworkSpec::fcp(), init_params(NetworkSpec::fcp(), 1), b)));
}

TEST_CASE("loss is invariant to batch order") {
  const NetworkSpec spec = NetworkSpec::fcp();
  const Batch b = random_labeled(12, 784, 10, 16);
  Batch r = b;
  r.inputs = b.inputs.colwise().reverse();
  std::reverse(r.labels.begin(), r.labels.end());
  const ParamVector p = init_params(spec, 17);
  CHECK(loss(spec, p, b) == doctest::Approx(loss(spec, p, r)).epsilon(1e-14));
}

TEST_CASE("relu slope at zero is zero") {
  const NetworkSpec spec{{1, 1, 1}, {Activation::relu, Activation::identity}, {false, false},
                         LossKind::mean_squared_error};
  ParamVector p(2);
  p[0] = 1.0;
  p[1] = 1.0;
  Batch b;
  b.inputs = RowMatrix{{0.0}};
  b.targets = RowMatrix{{1.0}};
  const LossAndGrad lg = loss_and_grad(spec, p, b);
  CHECK(lg.grad[0] == 0.0);
}

TEST_CASE("dimension errors") {
  const NetworkSpec spec = NetworkSpec::fcp();
  const Batch b = random_labeled(3, 784, 10, 18);
  CHECK_THROWS_AS(loss(spec, ParamVector(5), b), Error);
  CHECK_THROWS_AS(loss(spec, ParamVector(spec.num_params()), random_labeled(3, 100, 10, 1)), Error);
  CHECK_THROWS_AS(loss(spec, ParamVector(spec.num_params()), Batch{}), Error);
  Batch bad = b;
  bad.labels[0] = 10;
  CHECK_THROWS_AS(loss(spec, ParamVector(spec.num_params()), bad), Error);
}

TEST_CASE("init is deterministic and seed-sensitive") {
  const NetworkSpec spec = NetworkSpec::fcp();
  const ParamVector a = init_params(spec, 42);
  CHECK(a == init_params(spec, 42));
  const ParamVector b = init_params(spec, 43);
  std::size_t differ = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differ += a[i] != b[i];
  CHECK(static_cast<double>(differ) >= 0.99 * static_cast<double>(a.size()));
}

TEST_CASE("init scale per layer") {
  for (const NetworkSpec& spec : {NetworkSpec::fcp(), NetworkSpec::autoencoder()}) {
    const ParamVector p = init_params(spec, 99);
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
      const auto in = static_cast<std::size_t>(spec.layer_sizes[l]);
      const auto out = static_cast<std::size_t>(spec.layer_sizes[l + 1]);
      if (in * out < 1000) continue;
      const auto seg = p.values().segment(static_cast<Eigen::Index>(spec.weight_offset(l)),
                                          static_cast<Eigen::Index>(in * out));
      const double mean = seg.mean();
      const double sd = std::sqrt((seg.array() - mean).square().mean());
      const double a = std::sqrt(6.0 / static_cast<double>(in + out));
      CHECK(std::abs(sd / (a / std::sqrt(3.0)) - 1.0) < 0.2);
      CHECK(seg.cwiseAbs().maxCoeff() <= a);
    }
  }
}

TEST_CASE("line loss equals the loss along the ray") {
  for (const NetworkSpec& spec :
       {NetworkSpec::fcp(),
        NetworkSpec{{6, 5, 3}, {Activation::softplus, Activation::identity}, {true, true}, LossKind::cross_entropy_softmax}}) {
    const Batch b = random_labeled(10, spec.input_size(), 3, 19);
    const ParamVector p = random_params(spec, 20, 0.3);
    std::mt19937_64 rng(21);
    const Vector d = lossscape::testing::random_vector(spec.num_params(), rng, 0.1);
    const LineLoss line(spec, p, d, b);
    for (double u : {0.0, 0.25, 1.0, 3.5}) {
      CHECK(rel_err(line(u), loss(spec, ParamVector(p.values() - u * d), b)) < 1e-12);
    }
  }
}

TEST_CASE("predict returns probabilities") {
  const NetworkSpec spec = NetworkSpec::fcp();
  const Batch b = random_labeled(4, 784, 10, 22);
  const RowMatrix probs = predict(spec, init_params(spec, 23), b.inputs);
  CHECK(probs.rows() == 4);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(probs.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
}
