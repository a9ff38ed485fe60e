#include "lossscape/nn.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace lossscape {

namespace {

using ConstWeightMap = Eigen::Map<const RowMatrix>;
using WeightMap = Eigen::Map<RowMatrix>;

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }
double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Matrix activate(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::softplus: return z.unaryExpr([](double v) { return softplus(v); });
    case Activation::sigmoid: return z.unaryExpr([](double v) { return sigmoid(v); });
    case Activation::identity: return z;
  }
  return z;
}

// Elementwise f'(z), given z and f(z).
Matrix activation_slope(Activation a, const Matrix& z, const Matrix& fz) {
  switch (a) {
    case Activation::relu: return (z.array() > 0.0).cast<double>().matrix();
    case Activation::softplus: return z.unaryExpr([](double v) { return sigmoid(v); });
    case Activation::sigmoid: return (fz.array() * (1.0 - fz.array())).matrix();
    case Activation::identity: return Matrix::Ones(z.rows(), z.cols());
  }
  return Matrix::Ones(z.rows(), z.cols());
}

void check_inputs(const NetworkSpec& spec, const ParamVector& params, const Batch& batch) {
  if (params.size() != spec.num_params()) {
    throw Error("parameter length " + std::to_string(params.size()) + " does not match network (" +
                std::to_string(spec.num_params()) + ")");
  }
  if (batch.empty()) throw Error("empty batch");
  if (batch.inputs.cols() != spec.input_size()) {
    throw Error("batch has " + std::to_string(batch.inputs.cols()) + " input columns, network expects " +
                std::to_string(spec.input_size()));
  }
  if (spec.loss_kind == LossKind::cross_entropy_softmax) {
    if (batch.labels.size() != batch.size()) throw Error("label count does not match sample count");
    for (int y : batch.labels) {
      if (y < 0 || y >= spec.output_size()) throw Error("label out of range: " + std::to_string(y));
    }
  } else {
    const RowMatrix& t = batch.targets.size() == 0 ? batch.inputs : batch.targets;
    if (t.rows() != batch.inputs.rows() || t.cols() != spec.output_size()) {
      throw Error("regression targets do not match batch/output shape");
    }
  }
}

struct ForwardPass {
  std::vector<Matrix> pre;   // z_l, out x n
  std::vector<Matrix> post;  // f(z_l), out x n
};

// Runs layers first..L-1; fp.pre[first - 1] and fp.post[first - 1] must be set when first > 0.
void forward_from(const NetworkSpec& spec, const double* p, std::size_t first, ForwardPass& fp) {
  for (std::size_t l = first; l < spec.num_layers(); ++l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    ConstWeightMap w(p + spec.weight_offset(l), out, in);
    fp.pre[l].noalias() = w * fp.post[l - 1];
    if (spec.use_bias[l]) {
      Eigen::Map<const Vector> b(p + spec.bias_offset(l), out);
      fp.pre[l].colwise() += b;
    }
    fp.post[l] = activate(spec.activations[l], fp.pre[l]);
  }
}

ForwardPass forward(const NetworkSpec& spec, const ParamVector& params, const RowMatrix& inputs) {
  ForwardPass fp;
  fp.pre.resize(spec.num_layers());
  fp.post.resize(spec.num_layers());
  const double* p = params.values().data();
  const int out = spec.layer_sizes[1];
  fp.pre[0].noalias() = ConstWeightMap(p, out, spec.layer_sizes[0]) * inputs.transpose();
  if (spec.use_bias[0]) fp.pre[0].colwise() += Eigen::Map<const Vector>(p + spec.bias_offset(0), out);
  fp.post[0] = activate(spec.activations[0], fp.pre[0]);
  forward_from(spec, p, 1, fp);
  return fp;
}

// Column-wise log-sum-exp of the logits.
Eigen::RowVectorXd log_sum_exp(const Matrix& z) {
  Eigen::RowVectorXd m = z.colwise().maxCoeff();
  Eigen::RowVectorXd s = (z.rowwise() - m).array().exp().colwise().sum().log().matrix();
  return m + s;
}

// Returns the loss and writes dLoss/dz for the last layer into `dz`.
double output_loss(const NetworkSpec& spec, const ForwardPass& fp, const Batch& batch, Matrix* dz) {
  const std::size_t last = spec.num_layers() - 1;
  const auto n = static_cast<double>(batch.size());
  if (spec.loss_kind == LossKind::cross_entropy_softmax) {
    const Matrix& logits = fp.post[last];
    const Eigen::RowVectorXd lse = log_sum_exp(logits);
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.cols(); ++i) {
      total += lse[i] - logits(batch.labels[static_cast<std::size_t>(i)], i);
    }
    if (dz) {
      // Softmax cross-entropy is fused: dL/dlogits = softmax - onehot.
      Matrix g = (logits.rowwise() - lse).array().exp().matrix();
      for (Eigen::Index i = 0; i < g.cols(); ++i) g(batch.labels[static_cast<std::size_t>(i)], i) -= 1.0;
      g /= n;
      if (spec.activations[last] != Activation::identity) {
        g = g.cwiseProduct(activation_slope(spec.activations[last], fp.pre[last], fp.post[last]));
      }
      *dz = std::move(g);
    }
    return total / n;
  }
  const RowMatrix& targets = batch.targets.size() == 0 ? batch.inputs : batch.targets;
  Matrix diff = fp.post[last] - targets.transpose();
  const double denom = n * static_cast<double>(spec.output_size());
  const double value = diff.squaredNorm() / denom;
  if (dz) {
    diff *= 2.0 / denom;
    *dz = diff.cwiseProduct(activation_slope(spec.activations[last], fp.pre[last], fp.post[last]));
  }
  return value;
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::softplus: return "softplus";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
  }
  return "?";
}

std::string to_string(LossKind k) {
  return k == LossKind::cross_entropy_softmax ? "cross_entropy" : "mse";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "softplus") return Activation::softplus;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "identity") return Activation::identity;
  throw Error("unknown activation: " + s);
}

NetworkSpec NetworkSpec::fcp() {
  return {{784, 50, 50, 10},
          {Activation::relu, Activation::relu, Activation::identity},
          {false, false, false},
          LossKind::cross_entropy_softmax};
}

NetworkSpec NetworkSpec::autoencoder() {
  return {{784, 32, 32, 32, 784},
          {Activation::softplus, Activation::softplus, Activation::softplus, Activation::sigmoid},
          {false, false, false, false},
          LossKind::mean_squared_error};
}

std::size_t NetworkSpec::num_params() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const auto out = static_cast<std::size_t>(layer_sizes[l + 1]);
    n += static_cast<std::size_t>(layer_sizes[l]) * out;
    if (use_bias[l]) n += out;
  }
  return n;
}

std::size_t NetworkSpec::weight_offset(std::size_t l) const {
  std::size_t off = 0;
  for (std::size_t k = 0; k < l; ++k) {
    const auto out = static_cast<std::size_t>(layer_sizes[k + 1]);
    off += static_cast<std::size_t>(layer_sizes[k]) * out + (use_bias[k] ? out : 0);
  }
  return off;
}

std::size_t NetworkSpec::bias_offset(std::size_t l) const {
  return weight_offset(l) + static_cast<std::size_t>(layer_sizes[l]) * static_cast<std::size_t>(layer_sizes[l + 1]);
}

std::string NetworkSpec::canonical() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < layer_sizes.size(); ++i) os << (i ? "-" : "") << layer_sizes[i];
  os << '|';
  for (std::size_t i = 0; i < activations.size(); ++i) os << (i ? "," : "") << to_string(activations[i]);
  os << '|';
  for (std::size_t i = 0; i < use_bias.size(); ++i) os << (i ? "," : "") << (use_bias[i] ? 1 : 0);
  os << '|' << to_string(loss_kind);
  return os.str();
}

void NetworkSpec::validate() const {
  if (layer_sizes.size() < 2) throw Error("network needs at least two layer sizes");
  for (int s : layer_sizes) {
    if (s <= 0) throw Error("layer sizes must be positive");
  }
  if (activations.size() != num_layers() || use_bias.size() != num_layers()) {
    throw Error("activations/use_bias must have one entry per weight layer");
  }
}

ParamVector flatten(const Network& net) {
  const NetworkSpec& spec = net.spec;
  ParamVector v(spec.num_params());
  double* p = v.view().data();
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const Layer& layer = net.layers.at(l);
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    if (layer.weight.rows() != out || layer.weight.cols() != in) throw Error("layer weight shape mismatch");
    WeightMap(p + spec.weight_offset(l), out, in) = layer.weight;
    if (spec.use_bias[l]) {
      if (layer.bias.size() != out) throw Error("layer bias shape mismatch");
      Eigen::Map<Vector>(p + spec.bias_offset(l), out) = layer.bias;
    }
  }
  return v;
}

Network unflatten(const NetworkSpec& spec, const ParamVector& v) {
  spec.validate();
  if (v.size() != spec.num_params()) throw Error("parameter length does not match network");
  Network net{spec, {}};
  const double* p = v.values().data();
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    Layer layer;
    layer.weight = ConstWeightMap(p + spec.weight_offset(l), out, in);
    if (spec.use_bias[l]) layer.bias = Eigen::Map<const Vector>(p + spec.bias_offset(l), out);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

ParamVector init_params(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamVector v(spec.num_params());
  double* p = v.view().data();
  // mt19937_64 output is fixed by the standard; the distributions are not, so map bits by hand.
  std::mt19937_64 rng(seed);
  auto uniform01 = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    double* w = p + spec.weight_offset(l);
    for (std::size_t i = 0; i < static_cast<std::size_t>(in) * static_cast<std::size_t>(out); ++i) {
      w[i] = a * (2.0 * uniform01() - 1.0);
    }
  }
  return v;
}

double loss(const NetworkSpec& spec, const ParamVector& params, const Batch& batch) {
  check_inputs(spec, params, batch);
  const ForwardPass fp = forward(spec, params, batch.inputs);
  return output_loss(spec, fp, batch, nullptr);
}

LossAndGrad loss_and_grad(const NetworkSpec& spec, const ParamVector& params, const Batch& batch) {
  check_inputs(spec, params, batch);
  const ForwardPass fp = forward(spec, params, batch.inputs);
  LossAndGrad out;
  Matrix dz;
  out.loss = output_loss(spec, fp, batch, &dz);
  out.grad = ParamVector(spec.num_params());
  double* g = out.grad.view().data();
  const double* p = params.values().data();

  for (std::size_t l = spec.num_layers(); l-- > 0;) {
    const int in = spec.layer_sizes[l];
    const int out_size = spec.layer_sizes[l + 1];
    WeightMap gw(g + spec.weight_offset(l), out_size, in);
    if (l == 0) {
      gw.noalias() = dz * batch.inputs;
    } else {
      gw.noalias() = dz * fp.post[l - 1].transpose();
    }
    if (spec.use_bias[l]) Eigen::Map<Vector>(g + spec.bias_offset(l), out_size) = dz.rowwise().sum();
    if (l == 0) break;
    ConstWeightMap w(p + spec.weight_offset(l), out_size, in);
    Matrix da = w.transpose() * dz;
    dz = da.cwiseProduct(activation_slope(spec.activations[l - 1], fp.pre[l - 1], fp.post[l - 1]));
  }
  return out;
}

LineLoss::LineLoss(NetworkSpec spec, const ParamVector& params, const Vector& direction, const Batch& batch)
    : spec_(std::move(spec)), params_(params.values()), direction_(direction), batch_(&batch) {
  check_inputs(spec_, params, batch);
  if (direction.size() != params_.size()) throw Error("direction length does not match network");
  const int in = spec_.layer_sizes[0];
  const int out = spec_.layer_sizes[1];
  base_.noalias() = ConstWeightMap(params_.data(), out, in) * batch.inputs.transpose();
  slope_.noalias() = ConstWeightMap(direction_.data(), out, in) * batch.inputs.transpose();
  if (spec_.use_bias[0]) {
    base_.colwise() += params_.segment(static_cast<Eigen::Index>(spec_.bias_offset(0)), out);
    slope_.colwise() += direction_.segment(static_cast<Eigen::Index>(spec_.bias_offset(0)), out);
  }
}

double LineLoss::operator()(double u) const {
  const Vector point = params_ - u * direction_;
  ForwardPass fp;
  fp.pre.resize(spec_.num_layers());
  fp.post.resize(spec_.num_layers());
  fp.pre[0] = base_ - u * slope_;
  fp.post[0] = activate(spec_.activations[0], fp.pre[0]);
  forward_from(spec_, point.data(), 1, fp);
  return output_loss(spec_, fp, *batch_, nullptr);
}

RowMatrix predict(const NetworkSpec& spec, const ParamVector& params, const RowMatrix& inputs) {
  if (params.size() != spec.num_params()) throw Error("parameter length does not match network");
  if (inputs.cols() != spec.input_size()) throw Error("input width does not match network");
  const ForwardPass fp = forward(spec, params, inputs);
  const Matrix& last = fp.post.back();
  if (spec.loss_kind == LossKind::cross_entropy_softmax) {
    const Eigen::RowVectorXd lse = log_sum_exp(last);
    return (last.rowwise() - lse).array().exp().matrix().transpose();
  }
  return last.transpose();
}

}  // namespace lossscape
