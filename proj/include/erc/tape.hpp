#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace erc {

using Mat = Eigen::MatrixXd;

struct TapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : TapeError {
  using TapeError::TapeError;
};
// Thrown when backward touches a value that was discarded during the forward
// pass. The two-pass trainer relies on this never degrading into silently
// wrong gradients.
struct NotRetainedError : TapeError {
  using TapeError::TapeError;
};
struct DomainError : TapeError {
  using TapeError::TapeError;
};
struct NumericError : TapeError {
  using TapeError::TapeError;
};
struct ContractError : TapeError {
  using TapeError::TapeError;
};

// Tracks retained activation scalars across the tapes of one training step.
// Counts scalars, not bytes, so the numbers are platform independent.
class MemoryCounter {
 public:
  void add(long n) {
    current_ += n;
    if (current_ > peak_) peak_ = current_;
  }
  void sub(long n) { current_ -= n; }
  long current() const { return current_; }
  long peak() const { return peak_; }
  void reset_peak() { peak_ = current_; }

 private:
  long current_ = 0;
  long peak_ = 0;
};

// A named trainable parameter. Lives outside any tape; gradients accumulate
// into `grad` until explicitly cleared.
struct Param {
  std::string name;
  Mat value;
  Mat grad;
  Mat adam_m;
  Mat adam_v;
  bool trainable = true;

  Param(std::string n, Mat v)
      : name(std::move(n)), value(std::move(v)), grad(Mat::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
  long size() const { return static_cast<long>(value.size()); }
};

class Tape;

// Handle to a tape node. Carries the forward value so computation can proceed
// even when the tape itself stores nothing (Discard mode).
struct Var {
  int id = -1;
  std::shared_ptr<const Mat> val;
  Tape* tape = nullptr;

  const Mat& value() const { return *val; }
  long rows() const { return val->rows(); }
  long cols() const { return val->cols(); }
  double scalar() const { return (*val)(0, 0); }
};

class Tape {
 public:
  enum class Mode { Retain, Discard };

  using BackwardFn = std::function<void(Tape&, int self, const Mat& grad)>;

  explicit Tape(Mode mode = Mode::Retain, MemoryCounter* counter = nullptr,
                std::uint64_t seed = 0, std::uint64_t step = 0)
      : mode_(mode), counter_(counter), seed_(seed), step_(step) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  Mode mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t step() const { return step_; }

  Var leaf(Param& p);
  Var constant(Mat m);

  // Store the value of `v` in its node even in Discard mode, so it survives
  // the forward pass. Counted as retained.
  void pin(const Var& v);

  // Reverse sweep from a scalar loss, accumulating into Param::grad of every
  // reachable trainable leaf. Raises NotRetainedError on a Discard-mode tape.
  void backward(const Var& loss);

  long retained_scalars() const { return retained_; }
  std::size_t num_nodes() const { return nodes_.size(); }

  // --- used by op implementations ---
  Var emit(Mat value, std::vector<int> inputs, BackwardFn fn, bool requires_grad);
  const Mat& value(int id) const;
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  void accumulate(int id, const Mat& g);
  int next_id() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    std::vector<int> inputs;
    std::optional<Mat> value;
    Mat grad;  // 0x0 when unset
    Param* param = nullptr;
    BackwardFn backward;
    bool requires_grad = false;
  };

  void retain_value(Node& n, Mat v);

  Mode mode_;
  MemoryCounter* counter_;
  std::uint64_t seed_;
  std::uint64_t step_;
  std::vector<Node> nodes_;
  long retained_ = 0;
};

// ---- ops ----

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_rowwise(const Var& x, const Var& b);  // b: 1 x cols, broadcast over rows
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var log_elem(const Var& a);
Var sum_all(const Var& a);  // 1x1
Var concat_cols(const Var& a, const Var& b);
Var vstack(const std::vector<Var>& parts);
Var slice_cols(const Var& a, int start, int n);
Var sum_rows_at(const Var& x, const std::vector<int>& rows);  // 1 x cols; empty -> zeros
Var softmax_rows(const Var& a);
Var max_over_rows(const Var& a);  // column-wise max, 1 x cols
Var dropout(const Var& a, double p, bool train);
Var embedding_rows(Tape& t, Param& table, const std::vector<int>& ids);
Var window_rows(const Var& x, int h, bool same_length);
Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var cross_entropy_logits(const Var& scores, int target);  // scores: n x 1
Var bce_with_logit(const Var& logit, bool label);          // logit: 1 x 1

inline Var affine(const Var& x, const Var& w, const Var& b) {
  return add_rowwise(matmul(x, w), b);
}

}  // namespace erc
