#include "fsr/optim.hpp"

#include <cmath>

#include "fsr/error.hpp"

namespace fsr {

AdamState AdamState::init_for(const UNetModel& model, double lr) {
  AdamState s;
  s.lr = lr;
  for (const auto& p : model.parameters()) {
    s.m.emplace_back(p.values->size(), 0.0f);
    s.v.emplace_back(p.values->size(), 0.0f);
  }
  return s;
}

void adam_step(UNetModel& model, const ParameterGradients& grads, AdamState& state) {
  auto params = model.parameters();
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw ArgumentError("adam_step: gradient/state tensor count mismatch");

  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

  for (std::size_t i = 0; i < params.size(); ++i) {
    std::vector<float>& theta = *params[i].values;
    const std::vector<float>& g = grads[i];
    if (g.size() != theta.size())
      throw ArgumentError("adam_step: gradient shape mismatch for " + params[i].name);

    std::vector<float>& m = state.m[i];
    std::vector<float>& v = state.v[i];
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double gj = g[j];
      if (!std::isfinite(gj))
        throw NumericError("adam_step: non-finite gradient in " + params[i].name);
      const double mj = state.beta1 * m[j] + (1.0 - state.beta1) * gj;
      const double vj = state.beta2 * v[j] + (1.0 - state.beta2) * gj * gj;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double m_hat = mj / bc1;
      const double v_hat = vj / bc2;
      theta[j] = static_cast<float>(theta[j] - state.lr * m_hat / (std::sqrt(v_hat) + state.eps));
    }
  }
}

double scheduler_step(PlateauScheduler& sched, double epoch_loss, double current_lr) {
  if (epoch_loss < sched.best_loss * (1.0 - sched.rel_threshold)) {
    sched.best_loss = epoch_loss;
    sched.epochs_since_improve = 0;
    return current_lr;
  }
  sched.epochs_since_improve += 1;
  if (sched.epochs_since_improve >= sched.patience) {
    sched.epochs_since_improve = 0;
    if (current_lr <= sched.min_lr) return current_lr;  // keeps lr non-increasing
    const double reduced = current_lr * sched.factor;
    return reduced > sched.min_lr ? reduced : sched.min_lr;
  }
  return current_lr;
}

}  // namespace fsr
