#pragma once

#include "lossscape/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lossscape {

enum class Activation { relu, softplus, sigmoid, identity };
enum class LossKind { cross_entropy_softmax, mean_squared_error };

std::string to_string(Activation a);
std::string to_string(LossKind k);
Activation activation_from_string(const std::string& s);

/// Layer structure of a dense feedforward network.
///
/// `activations[l]`, `use_bias[l]` describe weight layer l, which maps
/// `layer_sizes[l]` inputs to `layer_sizes[l + 1]` outputs. For the softmax
/// cross-entropy loss the last activation is normally `identity` (logits).
struct NetworkSpec {
  std::vector<int> layer_sizes;
  std::vector<Activation> activations;
  std::vector<bool> use_bias;
  LossKind loss_kind = LossKind::cross_entropy_softmax;

  /// 784-50-50-10 classifier, ReLU hidden units, no biases.
  static NetworkSpec fcp();
  /// 784-32-32-32-784 autoencoder, softplus hidden units, sigmoid output, no biases.
  static NetworkSpec autoencoder();

  std::size_t num_layers() const { return layer_sizes.size() - 1; }
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  std::size_t num_params() const;

  /// Offset of layer l's weight block inside the flat parameter vector.
  std::size_t weight_offset(std::size_t l) const;
  /// Offset of layer l's bias block (only meaningful when use_bias[l]).
  std::size_t bias_offset(std::size_t l) const;

  /// Canonical text form, e.g. "784-50-50-10|relu,relu,identity|0,0,0|cross_entropy".
  std::string canonical() const;
  std::uint64_t hash() const { return fnv1a(canonical()); }

  /// Throws Error when the structure is inconsistent.
  void validate() const;

  bool operator==(const NetworkSpec&) const = default;
};

/// Flat vector of every weight and bias. Its length is fixed at construction.
///
/// Layout: layer-major; within a layer the (out x in) weight matrix in
/// row-major order, followed by the layer's biases when present.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t n) : values_(Vector::Zero(static_cast<Eigen::Index>(n))) {}
  explicit ParamVector(Vector values) : values_(std::move(values)) {}

  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  double& operator[](std::size_t i) { return values_[static_cast<Eigen::Index>(i)]; }

  const Vector& values() const { return values_; }
  /// Mutable view with the length pinned.
  Eigen::Map<Vector> view() { return {values_.data(), values_.size()}; }
  std::span<const double> span() const { return {values_.data(), size()}; }

  bool operator==(const ParamVector& o) const {
    return values_.size() == o.values_.size() && values_ == o.values_;
  }

 private:
  Vector values_;
};

/// Inputs and targets for one loss evaluation.
///
/// Classifiers read `labels`; squared-error networks regress onto `targets`,
/// or onto `inputs` when `targets` is empty (autoencoder).
struct Batch {
  RowMatrix inputs;
  std::vector<int> labels;
  RowMatrix targets;

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
  bool empty() const { return inputs.rows() == 0; }
};

struct Layer {
  RowMatrix weight;  // out x in
  Vector bias;       // empty when the layer has no bias
};

/// Structured view of a parameter vector.
struct Network {
  NetworkSpec spec;
  std::vector<Layer> layers;
};

ParamVector flatten(const Network& net);
Network unflatten(const NetworkSpec& spec, const ParamVector& v);

/// Scaled-uniform init: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)); biases zero.
ParamVector init_params(const NetworkSpec& spec, std::uint64_t seed);

struct LossAndGrad {
  double loss = 0.0;
  ParamVector grad;
};

/// Mean per-sample loss over the batch.
double loss(const NetworkSpec& spec, const ParamVector& params, const Batch& batch);

/// Mean loss and its exact gradient by reverse-mode differentiation.
LossAndGrad loss_and_grad(const NetworkSpec& spec, const ParamVector& params, const Batch& batch);

/// Loss along the ray params - u * direction. The first layer is linear in u,
/// so its pre-activations are computed once and each call costs only the
/// remaining layers. Keeps a reference to `batch`.
class LineLoss {
 public:
  LineLoss(NetworkSpec spec, const ParamVector& params, const Vector& direction, const Batch& batch);
  double operator()(double u) const;

 private:
  NetworkSpec spec_;
  Vector params_;
  Vector direction_;
  const Batch* batch_;
  Matrix base_;   // first-layer pre-activations at u = 0
  Matrix slope_;  // their derivative in -u
};

/// Network outputs (n x out): softmax probabilities or final activations.
RowMatrix predict(const NetworkSpec& spec, const ParamVector& params, const RowMatrix& inputs);

}  // namespace lossscape
