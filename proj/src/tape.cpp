#include "erc/tape.hpp"

#include "erc/rng.hpp"

#include <cmath>
#include <utility>

namespace erc {

namespace {

void check(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

}  // namespace

Tape::~Tape() {
  if (counter_ != nullptr && retained_ > 0) counter_->sub(retained_);
}

void Tape::retain_value(Node& n, Mat v) {
  retained_ += static_cast<long>(v.size());
  if (counter_ != nullptr) counter_->add(static_cast<long>(v.size()));
  n.value = std::move(v);
}

Var Tape::leaf(Param& p) {
  Node n;
  n.param = &p;
  n.requires_grad = p.trainable;
  const int id = next_id();
  nodes_.push_back(std::move(n));
  // the value lives in the Param, not on the tape; share without copying
  auto alias = std::shared_ptr<const Mat>(&p.value, [](const Mat*) {});
  return Var{id, std::move(alias), this};
}

Var Tape::constant(Mat m) {
  Node n;
  n.requires_grad = false;
  const int id = next_id();
  nodes_.push_back(std::move(n));
  retain_value(nodes_.back(), m);
  return Var{id, std::make_shared<Mat>(std::move(m)), this};
}

void Tape::pin(const Var& v) {
  Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.value.has_value() || n.param != nullptr) return;
  retain_value(n, *v.val);
}

Var Tape::emit(Mat value, std::vector<int> inputs, BackwardFn fn, bool requires_grad) {
  Node n;
  n.inputs = std::move(inputs);
  n.backward = std::move(fn);
  n.requires_grad = requires_grad;
  const int id = next_id();
  nodes_.push_back(std::move(n));
  auto shared = std::make_shared<Mat>(std::move(value));
  if (mode_ == Mode::Retain) retain_value(nodes_.back(), *shared);
  return Var{id, std::move(shared), this};
}

const Mat& Tape::value(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.param != nullptr) return n.param->value;
  if (!n.value.has_value())
    throw NotRetainedError("activation not retained (node " + std::to_string(id) + ")");
  return *n.value;
}

void Tape::accumulate(int id, const Mat& g) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.requires_grad) return;
  if (n.param != nullptr) {
    n.param->grad += g;
    return;
  }
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

void Tape::backward(const Var& loss) {
  if (loss.tape != this) throw ContractError("backward: loss from a different tape");
  if (loss.rows() != 1 || loss.cols() != 1) throw ContractError("backward: loss must be scalar");
  if (mode_ == Mode::Discard)
    throw NotRetainedError("activation not retained: backward on a Discard-mode tape");
  Node& top = nodes_[static_cast<std::size_t>(loss.id)];
  if (top.grad.size() == 0)
    top.grad = Mat::Ones(1, 1);
  else
    top.grad += Mat::Ones(1, 1);
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) continue;
    if (n.backward) {
      if (!n.grad.allFinite()) throw NumericError("non-finite gradient at node " + std::to_string(id));
      n.backward(*this, id, n.grad);
    }
    n.grad.resize(0, 0);
  }
}

// ---- ops ----

namespace {

Tape& tape_of(const Var& a) {
  if (a.tape == nullptr) throw ContractError("op on detached Var");
  return *a.tape;
}

bool any_grad(Tape& t, std::initializer_list<const Var*> vs) {
  for (const Var* v : vs)
    if (t.requires_grad(v->id)) return true;
  return false;
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  check(a.cols() == b.rows(), "matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                                  " vs " + std::to_string(b.rows()) + ")");
  Mat out = a.value() * b.value();
  const int ia = a.id, ib = b.id;
  return t.emit(std::move(out), {ia, ib},
                [ia, ib](Tape& tp, int, const Mat& g) {
                  if (tp.requires_grad(ia)) tp.accumulate(ia, g * tp.value(ib).transpose());
                  if (tp.requires_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * g);
                },
                any_grad(t, {&a, &b}));
}

Var transpose(const Var& a) {
  Tape& t = tape_of(a);
  const int ia = a.id;
  return t.emit(a.value().transpose(), {ia},
                [ia](Tape& tp, int, const Mat& g) { tp.accumulate(ia, g.transpose()); },
                t.requires_grad(ia));
}

Var add(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  check(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  const int ia = a.id, ib = b.id;
  return t.emit(a.value() + b.value(), {ia, ib},
                [ia, ib](Tape& tp, int, const Mat& g) {
                  tp.accumulate(ia, g);
                  tp.accumulate(ib, g);
                },
                any_grad(t, {&a, &b}));
}

Var sub(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  check(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  const int ia = a.id, ib = b.id;
  return t.emit(a.value() - b.value(), {ia, ib},
                [ia, ib](Tape& tp, int, const Mat& g) {
                  tp.accumulate(ia, g);
                  tp.accumulate(ib, -g);
                },
                any_grad(t, {&a, &b}));
}

Var mul(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  check(a.rows() == b.rows() && a.cols() == b.cols(), "mul: shape mismatch");
  const int ia = a.id, ib = b.id;
  return t.emit(a.value().cwiseProduct(b.value()), {ia, ib},
                [ia, ib](Tape& tp, int, const Mat& g) {
                  if (tp.requires_grad(ia)) tp.accumulate(ia, g.cwiseProduct(tp.value(ib)));
                  if (tp.requires_grad(ib)) tp.accumulate(ib, g.cwiseProduct(tp.value(ia)));
                },
                any_grad(t, {&a, &b}));
}

Var scale(const Var& a, double c) {
  Tape& t = tape_of(a);
  const int ia = a.id;
  return t.emit(a.value() * c, {ia},
                [ia, c](Tape& tp, int, const Mat& g) { tp.accumulate(ia, g * c); },
                t.requires_grad(ia));
}

Var add_rowwise(const Var& x, const Var& b) {
  Tape& t = tape_of(x);
  check(b.rows() == 1 && b.cols() == x.cols(), "add_rowwise: bias must be 1 x cols");
  Mat out = x.value();
  out.rowwise() += b.value().row(0);
  const int ix = x.id, ib = b.id;
  return t.emit(std::move(out), {ix, ib},
                [ix, ib](Tape& tp, int, const Mat& g) {
                  tp.accumulate(ix, g);
                  if (tp.requires_grad(ib)) tp.accumulate(ib, g.colwise().sum());
                },
                any_grad(t, {&x, &b}));
}

Var relu(const Var& a) {
  Tape& t = tape_of(a);
  const int ia = a.id;
  return t.emit(a.value().cwiseMax(0.0), {ia},
                [ia](Tape& tp, int, const Mat& g) {
                  const Mat& x = tp.value(ia);
                  tp.accumulate(ia, (x.array() > 0.0).cast<double>().matrix().cwiseProduct(g));
                },
                t.requires_grad(ia));
}

Var sigmoid(const Var& a) {
  Tape& t = tape_of(a);
  Mat y = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  const int ia = a.id;
  return t.emit(std::move(y), {ia},
                [ia](Tape& tp, int self, const Mat& g) {
                  const Mat& y = tp.value(self);
                  tp.accumulate(ia, g.cwiseProduct((y.array() * (1.0 - y.array())).matrix()));
                },
                t.requires_grad(ia));
}

Var log_elem(const Var& a) {
  Tape& t = tape_of(a);
  if ((a.value().array() <= 0.0).any()) throw DomainError("log of non-positive value");
  const int ia = a.id;
  return t.emit(a.value().array().log().matrix(), {ia},
                [ia](Tape& tp, int, const Mat& g) {
                  tp.accumulate(ia, g.cwiseQuotient(tp.value(ia)));
                },
                t.requires_grad(ia));
}

Var sum_all(const Var& a) {
  Tape& t = tape_of(a);
  Mat out(1, 1);
  out(0, 0) = a.value().sum();
  const int ia = a.id;
  const long r = a.rows(), c = a.cols();
  return t.emit(std::move(out), {ia},
                [ia, r, c](Tape& tp, int, const Mat& g) {
                  tp.accumulate(ia, Mat::Constant(r, c, g(0, 0)));
                },
                t.requires_grad(ia));
}

Var concat_cols(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  check(a.rows() == b.rows(), "concat_cols: row mismatch");
  Mat out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  const int ia = a.id, ib = b.id;
  const long ca = a.cols(), cb = b.cols();
  return t.emit(std::move(out), {ia, ib},
                [ia, ib, ca, cb](Tape& tp, int, const Mat& g) {
                  tp.accumulate(ia, g.leftCols(ca));
                  tp.accumulate(ib, g.rightCols(cb));
                },
                any_grad(t, {&a, &b}));
}

Var vstack(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("vstack: no parts");
  Tape& t = tape_of(parts.front());
  long rows = 0;
  const long cols = parts.front().cols();
  for (const Var& p : parts) {
    check(p.cols() == cols, "vstack: column mismatch");
    rows += p.rows();
  }
  Mat out(rows, cols);
  std::vector<int> ids;
  std::vector<long> sizes;
  long at = 0;
  bool grad = false;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
    ids.push_back(p.id);
    sizes.push_back(p.rows());
    grad = grad || t.requires_grad(p.id);
  }
  return t.emit(std::move(out), ids,
                [ids, sizes](Tape& tp, int, const Mat& g) {
                  long at = 0;
                  for (std::size_t i = 0; i < ids.size(); ++i) {
                    tp.accumulate(ids[i], g.middleRows(at, sizes[i]));
                    at += sizes[i];
                  }
                },
                grad);
}

Var slice_cols(const Var& a, int start, int n) {
  Tape& t = tape_of(a);
  check(start >= 0 && n >= 0 && start + n <= a.cols(), "slice_cols: out of range");
  const int ia = a.id;
  const long rows = a.rows(), cols = a.cols();
  return t.emit(a.value().middleCols(start, n), {ia},
                [ia, start, n, rows, cols](Tape& tp, int, const Mat& g) {
                  Mat gx = Mat::Zero(rows, cols);
                  gx.middleCols(start, n) = g;
                  tp.accumulate(ia, gx);
                },
                t.requires_grad(ia));
}

Var sum_rows_at(const Var& x, const std::vector<int>& rows) {
  Tape& t = tape_of(x);
  for (int r : rows)
    if (r < 0 || r >= x.rows())
      throw ContractError("sum_rows_at: row index " + std::to_string(r) + " out of range");
  Mat out = Mat::Zero(1, x.cols());
  for (int r : rows) out += x.value().row(r);
  const int ix = x.id;
  const long nr = x.rows(), nc = x.cols();
  auto idx = rows;
  return t.emit(std::move(out), {ix},
                [ix, idx, nr, nc](Tape& tp, int, const Mat& g) {
                  Mat gx = Mat::Zero(nr, nc);
                  for (int r : idx) gx.row(r) += g.row(0);
                  tp.accumulate(ix, gx);
                },
                t.requires_grad(ix));
}

Var softmax_rows(const Var& a) {
  Tape& t = tape_of(a);
  Mat y = a.value();
  for (long r = 0; r < y.rows(); ++r) {
    const double mx = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - mx).exp();
    y.row(r) /= y.row(r).sum();
  }
  const int ia = a.id;
  return t.emit(std::move(y), {ia},
                [ia](Tape& tp, int self, const Mat& g) {
                  const Mat& y = tp.value(self);
                  Mat gx(y.rows(), y.cols());
                  for (long r = 0; r < y.rows(); ++r) {
                    const double dot = g.row(r).dot(y.row(r));
                    gx.row(r) = (g.row(r).array() - dot).matrix().cwiseProduct(y.row(r));
                  }
                  tp.accumulate(ia, gx);
                },
                t.requires_grad(ia));
}

Var max_over_rows(const Var& a) {
  Tape& t = tape_of(a);
  check(a.rows() >= 1, "max_over_rows: empty input");
  Mat out(1, a.cols());
  for (long c = 0; c < a.cols(); ++c) out(0, c) = a.value().col(c).maxCoeff();
  const int ia = a.id;
  return t.emit(std::move(out), {ia},
                [ia](Tape& tp, int, const Mat& g) {
                  const Mat& x = tp.value(ia);
                  Mat gx = Mat::Zero(x.rows(), x.cols());
                  for (long c = 0; c < x.cols(); ++c) {
                    long arg = 0;
                    x.col(c).maxCoeff(&arg);
                    gx(arg, c) = g(0, c);
                  }
                  tp.accumulate(ia, gx);
                },
                t.requires_grad(ia));
}

Var dropout(const Var& a, double p, bool train) {
  Tape& t = tape_of(a);
  if (!train || p == 0.0) return a;
  if (p < 0.0 || p >= 1.0) throw ContractError("dropout: p must be in [0,1)");
  const int node = t.next_id();
  const auto mask_for = [p](const Tape& tp, int id, long rows, long cols) {
    CounterRng rng(tp.seed(), tp.step(), static_cast<std::uint64_t>(id));
    Mat m(rows, cols);
    const double keep = 1.0 - p;
    for (long i = 0; i < rows; ++i)
      for (long j = 0; j < cols; ++j) m(i, j) = rng.next_double() < keep ? 1.0 / keep : 0.0;
    return m;
  };
  Mat mask = mask_for(t, node, a.rows(), a.cols());
  const int ia = a.id;
  return t.emit(a.value().cwiseProduct(mask), {ia},
                [ia, mask_for](Tape& tp, int self, const Mat& g) {
                  // the mask is a pure function of (seed, step, node id); recompute
                  Mat m = mask_for(tp, self, g.rows(), g.cols());
                  tp.accumulate(ia, g.cwiseProduct(m));
                },
                t.requires_grad(ia));
}

Var embedding_rows(Tape& t, Param& table, const std::vector<int>& ids) {
  for (int id : ids)
    if (id < 0 || id >= table.value.rows())
      throw ContractError("embedding_rows: id " + std::to_string(id) + " out of vocabulary");
  Var leaf = t.leaf(table);
  Mat out(static_cast<long>(ids.size()), table.value.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<long>(i)) = table.value.row(ids[i]);
  const int il = leaf.id;
  auto idx = ids;
  return t.emit(std::move(out), {il},
                [il, idx](Tape& tp, int, const Mat& g) {
                  if (!tp.requires_grad(il)) return;
                  Mat gx = Mat::Zero(tp.value(il).rows(), tp.value(il).cols());
                  for (std::size_t i = 0; i < idx.size(); ++i)
                    gx.row(idx[i]) += g.row(static_cast<long>(i));
                  tp.accumulate(il, gx);
                },
                t.requires_grad(il));
}

Var window_rows(const Var& x, int h, bool same_length) {
  Tape& t = tape_of(x);
  check(h >= 1, "window_rows: window must be positive");
  const long n = x.rows(), c = x.cols();
  const long out_rows = same_length ? n : n - h + 1;
  check(out_rows >= 1, "window_rows: sequence shorter than window");
  Mat out = Mat::Zero(out_rows, h * c);
  for (long i = 0; i < out_rows; ++i)
    for (int j = 0; j < h; ++j)
      if (i + j < n) out.block(i, j * c, 1, c) = x.value().row(i + j);
  const int ix = x.id;
  return t.emit(std::move(out), {ix},
                [ix, h, n, c, out_rows](Tape& tp, int, const Mat& g) {
                  Mat gx = Mat::Zero(n, c);
                  for (long i = 0; i < out_rows; ++i)
                    for (int j = 0; j < h; ++j)
                      if (i + j < n) gx.row(i + j) += g.block(i, static_cast<long>(j) * c, 1, c);
                  tp.accumulate(ix, gx);
                },
                t.requires_grad(ix));
}

Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps) {
  Tape& t = tape_of(x);
  const long c = x.cols();
  check(gamma.rows() == 1 && gamma.cols() == c, "layer_norm: gamma must be 1 x cols");
  check(beta.rows() == 1 && beta.cols() == c, "layer_norm: beta must be 1 x cols");
  Mat y(x.rows(), c);
  for (long r = 0; r < x.rows(); ++r) {
    const double mu = x.value().row(r).mean();
    const double var = (x.value().row(r).array() - mu).square().mean();
    y.row(r) = ((x.value().row(r).array() - mu) / std::sqrt(var + eps)) * gamma.value().row(0).array() +
               beta.value().row(0).array();
  }
  const int ix = x.id, ig = gamma.id, ib = beta.id;
  return t.emit(std::move(y), {ix, ig, ib},
                [ix, ig, ib, eps](Tape& tp, int, const Mat& g) {
                  const Mat& x = tp.value(ix);
                  const Mat& gam = tp.value(ig);
                  const long c = x.cols();
                  Mat gx(x.rows(), c);
                  Mat ggam = Mat::Zero(1, c);
                  Mat gbeta = Mat::Zero(1, c);
                  for (long r = 0; r < x.rows(); ++r) {
                    const double mu = x.row(r).mean();
                    const double var = (x.row(r).array() - mu).square().mean();
                    const double inv = 1.0 / std::sqrt(var + eps);
                    Eigen::ArrayXXd xhat = (x.row(r).array() - mu) * inv;
                    Eigen::ArrayXXd gy = g.row(r).array();
                    ggam.array() += gy * xhat;
                    gbeta.array() += gy;
                    Eigen::ArrayXXd gxh = gy * gam.row(0).array();
                    const double m1 = gxh.mean();
                    const double m2 = (gxh * xhat).mean();
                    gx.row(r) = (inv * (gxh - m1 - xhat * m2)).matrix();
                  }
                  tp.accumulate(ix, gx);
                  if (tp.requires_grad(ig)) tp.accumulate(ig, ggam);
                  if (tp.requires_grad(ib)) tp.accumulate(ib, gbeta);
                },
                any_grad(t, {&x, &gamma, &beta}));
}

Var cross_entropy_logits(const Var& scores, int target) {
  Tape& t = tape_of(scores);
  check(scores.cols() == 1, "cross_entropy_logits: scores must be n x 1");
  if (target < 0 || target >= scores.rows())
    throw ContractError("cross_entropy_logits: target out of range");
  const Eigen::VectorXd s = scores.value().col(0);
  const double mx = s.maxCoeff();
  const double lse = mx + std::log((s.array() - mx).exp().sum());
  Mat out(1, 1);
  out(0, 0) = lse - s(target);
  const int is = scores.id;
  return t.emit(std::move(out), {is},
                [is, target](Tape& tp, int, const Mat& g) {
                  const Eigen::VectorXd s = tp.value(is).col(0);
                  const double mx = s.maxCoeff();
                  Eigen::VectorXd p = (s.array() - mx).exp();
                  p /= p.sum();
                  p(target) -= 1.0;
                  tp.accumulate(is, (g(0, 0) * p).matrix());
                },
                t.requires_grad(is));
}

Var bce_with_logit(const Var& logit, bool label) {
  Tape& t = tape_of(logit);
  check(logit.rows() == 1 && logit.cols() == 1, "bce_with_logit: logit must be scalar");
  const double x = logit.scalar();
  // -log sigmoid(x) for positives, -log(1 - sigmoid(x)) for negatives,
  // via the stable softplus form
  const double z = label ? -x : x;
  Mat out(1, 1);
  out(0, 0) = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  const int il = logit.id;
  return t.emit(std::move(out), {il},
                [il, label](Tape& tp, int, const Mat& g) {
                  const double x = tp.value(il)(0, 0);
                  const double s = 1.0 / (1.0 + std::exp(-x));
                  Mat gx(1, 1);
                  gx(0, 0) = g(0, 0) * (s - (label ? 1.0 : 0.0));
                  tp.accumulate(il, gx);
                },
                t.requires_grad(il));
}

}  // namespace erc
