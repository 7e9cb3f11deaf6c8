#pragma once

#include "erc/optim.hpp"
#include "erc/reader.hpp"

#include <cstdint>
#include <vector>

namespace erc {

// Faithful applies an optimizer update after every inner paragraph step.
// Accumulate sums encoder gradients over all paragraphs (head gradients taken
// at k = 0 only) and applies a single update per question, which makes the
// total gradient exactly equal to the full-retention baseline.
enum class TrainMode { Faithful, Accumulate };

struct MemoryReport {
  long peak_retained_scalars = 0;
  long pass1_peak = 0;
  std::vector<long> pass2_peaks;
  int paragraph_count = 0;
  long param_scalars = 0;
  long pin_scalars = 0;
  std::vector<double> losses;  // per inner step
};

struct TrainOptions {
  TrainMode mode = TrainMode::Accumulate;
  bool apply_updates = true;  // false: leave gradients accumulated, no step
  bool dropout = false;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;  // dropout stream id
};

// First forward pass: every paragraph encoded in Discard mode under the
// current parameters; only the (C+1) x d mention-sum matrices survive.
std::vector<Mat> pass1(ReaderModel& model, const Question& q, MemoryCounter* counter,
                       const TrainOptions& opts);

// Second pass for paragraph k: recompute H^k with retention, backpropagate
// through it, and either update immediately (Faithful) or accumulate.
double pass2_step(ReaderModel& model, const Question& q, int k, const std::vector<Mat>& pins,
                  Optimizer& opt, MemoryCounter* counter, const TrainOptions& opts);

MemoryReport train_question(ReaderModel& model, const Question& q, Optimizer& opt,
                            const TrainOptions& opts);

// Full-retention baseline: one graph over every paragraph, one update.
double naive_train_question(ReaderModel& model, const Question& q, Optimizer& opt,
                            const TrainOptions& opts, MemoryReport* report = nullptr);

}  // namespace erc
