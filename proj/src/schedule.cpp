#include "cvrl/schedule.hpp"

#include <cmath>
#include <string>

namespace cvrl {

double lr_at(const ScheduleConfig& config, long step) {
  if (!(config.base_lr > 0.0)) throw config_error("schedule: base_lr must be positive");
  if (config.steps_per_epoch < 1) throw config_error("schedule: steps_per_epoch must be >= 1");
  if (config.warmup_epochs < 0 || config.warmup_epochs >= config.total_epochs)
    throw config_error("schedule: requires 0 <= warmup_epochs < total_epochs");
  long total = config.total_steps();
  if (step < 0 || step >= total)
    throw bounds_error("schedule: step " + std::to_string(step) + " outside [0, " +
                       std::to_string(total) + ")");

  long warmup = config.warmup_steps();
  if (step < warmup) {
    // starts at base_lr / warmup so the very first step is nonzero
    return config.base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  }
  double progress = static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
  constexpr double kPi = 3.14159265358979323846;
  return config.base_lr * 0.5 * (1.0 + std::cos(kPi * progress));
}

}  // namespace cvrl
