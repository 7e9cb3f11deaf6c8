#pragma once

#include "erc/tape.hpp"

#include <string>
#include <vector>

namespace erc {

// Linear warmup to base_lr over the first warmup_fraction of total_steps,
// flat afterwards.
struct WarmupSchedule {
  double base_lr = 1e-3;
  double warmup_fraction = 0.0;
  long total_steps = 1;

  double lr(long step) const {
    const double ramp = warmup_fraction * static_cast<double>(total_steps);
    if (ramp <= 0.0) return base_lr;
    const double f = static_cast<double>(step) / ramp;
    return base_lr * (f < 1.0 ? f : 1.0);
  }
};

class Optimizer {
 public:
  enum class Kind { SGD, Adam };

  Optimizer(Kind kind, double lr, double weight_decay = 0.0)
      : kind_(kind), lr_(lr), weight_decay_(weight_decay) {}

  // Applies one update from the accumulated grads, then leaves grads intact
  // (callers clear them). Throws NumericError on non-finite gradients.
  void step(std::vector<Param*>& params);

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  long step_count() const { return step_count_; }

  // Adam defaults; the source material names Adam without constants.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

 private:
  Kind kind_;
  double lr_;
  double weight_decay_;
  long step_count_ = 0;
};

void zero_grads(std::vector<Param*>& params);

// Versioned JSON checkpoint of ordered (name, shape, values) records.
void save_checkpoint(const std::string& path, const std::vector<Param*>& params);
void load_checkpoint(const std::string& path, std::vector<Param*>& params);
std::string checkpoint_to_string(const std::vector<Param*>& params);

}  // namespace erc
