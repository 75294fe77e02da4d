#pragma once

#include <span>

#include "cvrl/error.hpp"

namespace cvrl {

// Linear warmup over the first warmup_epochs, then half-period cosine decay
// from base_lr to ~0 over the remaining steps.
struct ScheduleConfig {
  double base_lr = 0.32;
  int warmup_epochs = 5;
  int total_epochs = 0;
  int steps_per_epoch = 0;

  long warmup_steps() const { return static_cast<long>(warmup_epochs) * steps_per_epoch; }
  long total_steps() const { return static_cast<long>(total_epochs) * steps_per_epoch; }
};

double lr_at(const ScheduleConfig& config, long step);

// Classic momentum update: v <- momentum*v + (g + weight_decay*p); p <- p - lr*v.
template <typename S>
void sgd_step(std::span<S> params, std::span<const S> grads, std::span<S> velocity, double lr,
              double momentum = 0.9, double weight_decay = 0.0) {
  if (grads.size() != params.size() || velocity.size() != params.size())
    throw bounds_error("sgd_step: parameter/gradient/velocity shapes disagree");
  const S m = static_cast<S>(momentum);
  const S wd = static_cast<S>(weight_decay);
  const S step_lr = static_cast<S>(lr);
  for (std::size_t i = 0; i < params.size(); ++i) {
    S g = grads[i];
    if (wd != S(0)) g += wd * params[i];
    velocity[i] = m * velocity[i] + g;
    params[i] -= step_lr * velocity[i];
  }
}

}  // namespace cvrl
