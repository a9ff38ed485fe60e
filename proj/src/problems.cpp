#include "lossscape/optim.hpp"

#include <memory>

namespace lossscape {

NnTrainingProblem::NnTrainingProblem(NetworkSpec spec, const Dataset& train, const Dataset* test)
    : spec_(std::move(spec)), train_(&train), test_(test) {
  spec_.validate();
  if (train.empty()) throw Error("training set is empty");
}

double NnTrainingProblem::batch_loss_and_grad(const Vector& w, std::span<const std::size_t> samples,
                                              Vector& grad) const {
  LossAndGrad lg = loss_and_grad(spec_, ParamVector(w), train_->gather(samples));
  grad = lg.grad.values();
  return lg.loss;
}

double NnTrainingProblem::train_loss(const Vector& w) const {
  return loss(spec_, ParamVector(w), train_->as_batch());
}

double NnTrainingProblem::train_loss_and_grad(const Vector& w, Vector& grad) const {
  LossAndGrad lg = loss_and_grad(spec_, ParamVector(w), train_->as_batch());
  grad = lg.grad.values();
  return lg.loss;
}

std::optional<double> NnTrainingProblem::test_loss(const Vector& w) const {
  if (!test_ || test_->empty()) return std::nullopt;
  return loss(spec_, ParamVector(w), test_->as_batch());
}

std::function<double(double)> NnTrainingProblem::line_loss(const Vector& w, const Vector& p) const {
  auto ray = std::make_shared<const LineLoss>(spec_, ParamVector(w), p, train_->as_batch());
  return [ray](double u) { return (*ray)(u); };
}

}  // namespace lossscape
