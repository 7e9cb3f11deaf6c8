#include "erc/trainer.hpp"

#include <algorithm>

namespace erc {

namespace {

long pins_size(const std::vector<Mat>& pins) {
  long n = 0;
  for (const Mat& m : pins) n += static_cast<long>(m.size());
  return n;
}

}  // namespace

std::vector<Mat> pass1(ReaderModel& model, const Question& q, MemoryCounter* counter,
                       const TrainOptions& opts) {
  if (q.paragraphs.empty()) throw ContractError("empty passage");
  q.validate();
  std::vector<Mat> pins;
  pins.reserve(q.paragraphs.size());
  for (int k = 0; k < static_cast<int>(q.paragraphs.size()); ++k) {
    Tape tape(Tape::Mode::Discard, counter, opts.seed, opts.step);
    Var sums = paragraph_sums_graph(tape, model, q, k, opts.dropout);
    pins.push_back(sums.value());
    if (counter != nullptr) counter->add(static_cast<long>(pins.back().size()));
  }
  return pins;
}

double pass2_step(ReaderModel& model, const Question& q, int k, const std::vector<Mat>& pins,
                  Optimizer& opt, MemoryCounter* counter, const TrainOptions& opts) {
  if (k < 0 || k >= static_cast<int>(q.paragraphs.size()))
    throw ContractError("pass2_step: paragraph index out of range");
  const bool keep_head_grads = opts.mode == TrainMode::Faithful || k == 0;
  std::vector<Mat> saved_head;
  if (!keep_head_grads)
    for (Param* p : model.head_params()) saved_head.push_back(p->grad);
  double loss_value = 0.0;
  {
    Tape tape(Tape::Mode::Retain, counter, opts.seed, opts.step);
    Var loss = loss_full_graph(tape, model, q, k, pins, opts.dropout);
    loss_value = loss.scalar();
    tape.backward(loss);
  }
  if (!keep_head_grads) {
    auto head = model.head_params();
    for (std::size_t i = 0; i < head.size(); ++i) head[i]->grad = saved_head[i];
  }
  if (opts.mode == TrainMode::Faithful && opts.apply_updates) {
    auto params = model.params();
    opt.step(params);
    zero_grads(params);
  }
  return loss_value;
}

MemoryReport train_question(ReaderModel& model, const Question& q, Optimizer& opt,
                            const TrainOptions& opts) {
  MemoryReport report;
  report.paragraph_count = static_cast<int>(q.paragraphs.size());
  report.param_scalars = model.param_scalars();

  MemoryCounter counter;
  counter.add(report.param_scalars);

  std::vector<Mat> pins = pass1(model, q, &counter, opts);
  report.pin_scalars = pins_size(pins);
  report.pass1_peak = counter.peak();
  long peak = counter.peak();

  if (opts.mode == TrainMode::Accumulate && opts.apply_updates) {
    auto params = model.params();
    zero_grads(params);
  }
  for (int k = 0; k < static_cast<int>(q.paragraphs.size()); ++k) {
    counter.reset_peak();
    report.losses.push_back(pass2_step(model, q, k, pins, opt, &counter, opts));
    report.pass2_peaks.push_back(counter.peak());
    peak = std::max(peak, counter.peak());
  }
  if (opts.mode == TrainMode::Accumulate && opts.apply_updates) {
    auto params = model.params();
    opt.step(params);
    zero_grads(params);
  }
  counter.sub(report.pin_scalars);
  report.peak_retained_scalars = peak;
  return report;
}

double naive_train_question(ReaderModel& model, const Question& q, Optimizer& opt,
                            const TrainOptions& opts, MemoryReport* report) {
  if (q.paragraphs.empty()) throw ContractError("empty passage");
  q.validate();
  MemoryCounter counter;
  counter.add(model.param_scalars());
  double loss_value = 0.0;
  {
    Tape tape(Tape::Mode::Retain, &counter, opts.seed, opts.step);
    Var loss = naive_loss_graph(tape, model, q, opts.dropout);
    loss_value = loss.scalar();
    if (opts.apply_updates) {
      auto params = model.params();
      zero_grads(params);
    }
    tape.backward(loss);
  }
  if (opts.apply_updates) {
    auto params = model.params();
    opt.step(params);
    zero_grads(params);
  }
  if (report != nullptr) {
    report->paragraph_count = static_cast<int>(q.paragraphs.size());
    report->param_scalars = model.param_scalars();
    report->peak_retained_scalars = counter.peak();
    report->losses = {loss_value};
  }
  return loss_value;
}

}  // namespace erc
