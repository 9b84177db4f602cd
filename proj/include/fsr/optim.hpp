#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "fsr/unet.hpp"

namespace fsr {

/// Adam moment estimates, shapes mirroring the model's parameter registry.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<std::vector<float>> m;  // first moments
  std::vector<std::vector<float>> v;  // second moments

  /// Zero moments shaped like the model's parameters.
  static AdamState init_for(const UNetModel& model, double lr = 1e-3);
};

/// One Adam update over every parameter:
///   t += 1; m = b1*m + (1-b1)*g; v = b2*v + (1-b2)*g^2;
///   theta -= lr * m_hat / (sqrt(v_hat) + eps)  with bias-corrected moments.
/// Throws NumericError on a non-finite gradient, naming the parameter.
void adam_step(UNetModel& model, const ParameterGradients& grads, AdamState& state);

/// ReduceLROnPlateau: halve the learning rate after `patience` consecutive
/// epochs without relative improvement, never below min_lr.
struct PlateauScheduler {
  double factor = 0.5;
  int patience = 3;
  double min_lr = 1e-6;
  double rel_threshold = 1e-4;
  double best_loss = std::numeric_limits<double>::infinity();
  int epochs_since_improve = 0;
};

/// Feeds one epoch loss; returns the (possibly reduced) learning rate.
double scheduler_step(PlateauScheduler& sched, double epoch_loss, double current_lr);

}  // namespace fsr
