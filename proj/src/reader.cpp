#include "erc/reader.hpp"

#include "erc/rng.hpp"

#include <algorithm>
#include <cmath>

namespace erc {

void Question::validate() const {
  if (candidates.empty()) throw ContractError("question " + id + ": no candidates");
  if (std::find(candidates.begin(), candidates.end(), answer) == candidates.end())
    throw ContractError("question " + id + ": answer not among candidates");
  for (const auto& [entity, positions] : mentions) {
    for (const auto& [k, t] : positions) {
      if (k < 0 || k >= static_cast<int>(paragraphs.size()))
        throw ContractError("question " + id + ": mention paragraph index out of range");
      if (t < 0 || t >= static_cast<int>(paragraphs[static_cast<std::size_t>(k)].size()))
        throw ContractError("question " + id + ": mention position out of range");
    }
  }
}

int Question::answer_index() const { return candidate_index(answer); }

int Question::candidate_index(const std::string& entity) const {
  auto it = std::find(candidates.begin(), candidates.end(), entity);
  if (it == candidates.end())
    throw ContractError("entity " + entity + " is not a candidate of question " + id);
  return static_cast<int>(it - candidates.begin());
}

std::vector<int> Question::mention_positions(int k, const std::string& entity) const {
  std::vector<int> out;
  auto it = mentions.find(entity);
  if (it == mentions.end()) return out;
  for (const auto& [pk, pt] : it->second)
    if (pk == k) out.push_back(pt);
  return out;
}

ReaderModel::ReaderModel(const ReaderConfig& cfg, std::uint64_t seed)
    : config(cfg),
      encoder(cfg.encoder, seed),
      head_w("head.w", Mat()),
      head_b("head.b", Mat::Zero(1, cfg.head_dim)),
      theta("head.theta", Mat()) {
  if (cfg.head_dim < 1) throw ContractError("reader config: head_dim must be positive");
  CounterRng rng(seed, /*stream=*/0x4ead54ead);
  const int d2 = 2 * cfg.encoder.model_dim;
  head_w.value = Mat(d2, cfg.head_dim);
  const double sw = 1.0 / std::sqrt(static_cast<double>(d2));
  for (long r = 0; r < head_w.value.rows(); ++r)
    for (long c = 0; c < head_w.value.cols(); ++c) head_w.value(r, c) = sw * rng.next_normal();
  head_w.grad = Mat::Zero(d2, cfg.head_dim);
  theta.value = Mat(cfg.head_dim, 1);
  const double st = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim));
  for (long r = 0; r < theta.value.rows(); ++r) theta.value(r, 0) = st * rng.next_normal();
  theta.grad = Mat::Zero(cfg.head_dim, 1);
}

std::vector<Param*> ReaderModel::params() {
  std::vector<Param*> out = encoder.params();
  out.push_back(&head_w);
  out.push_back(&head_b);
  out.push_back(&theta);
  return out;
}

long ReaderModel::param_scalars() {
  long n = 0;
  for (Param* p : params()) n += p->size();
  return n;
}

Var mention_sum(const Var& h, const std::vector<int>& para_positions, int offset) {
  std::vector<int> rows;
  rows.reserve(para_positions.size());
  for (int t : para_positions) rows.push_back(t + offset);
  return sum_rows_at(h, rows);
}

Var paragraph_sums_graph(Tape& tape, ReaderModel& model, const Question& q, int k, bool train) {
  if (k < 0 || k >= static_cast<int>(q.paragraphs.size()))
    throw ContractError("paragraph index " + std::to_string(k) + " out of range");
  Var h = encode(tape, model.encoder, q.query_tokens, q.paragraphs[static_cast<std::size_t>(k)],
                 train);
  const int offset = paragraph_offset(q.query_tokens.size());
  std::vector<Var> rows;
  rows.reserve(q.candidates.size() + 1);
  rows.push_back(mention_sum(h, q.mention_positions(k, q.query_entity), offset));
  for (const std::string& c : q.candidates)
    rows.push_back(mention_sum(h, q.mention_positions(k, c), offset));
  return vstack(rows);
}

Mat paragraph_sums(const ReaderModel& model, const Question& q, int k, bool train,
                   std::uint64_t seed, std::uint64_t step) {
  Tape tape(Tape::Mode::Retain, nullptr, seed, step);
  return paragraph_sums_graph(tape, const_cast<ReaderModel&>(model), q, k, train).value();
}

namespace {

// theta^T relu(W e + b) for each candidate row of the accumulated sums
std::vector<double> scores_from_total(const ReaderModel& model, const Mat& total) {
  const long d = model.config.encoder.model_dim;
  const long c = total.rows() - 1;
  std::vector<double> scores(static_cast<std::size_t>(c));
  Eigen::RowVectorXd e(2 * d);
  for (long i = 0; i < c; ++i) {
    e << total.row(0), total.row(1 + i);
    Eigen::RowVectorXd z =
        ((e * model.head_w.value + model.head_b.value.row(0)).array().max(0.0)).matrix();
    scores[static_cast<std::size_t>(i)] = (z * model.theta.value)(0, 0);
  }
  return scores;
}

int argmax_lowest(const std::vector<double>& scores) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(scores.size()); ++i)
    if (scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(best)]) best = i;
  return best;
}

// C x 2d fresh [query-sum ++ candidate-sum] rows from a sums matrix
Var candidate_matrix(const Var& sums) {
  const long c = sums.rows() - 1;
  Var qs = sum_rows_at(sums, {0});
  std::vector<Var> rows;
  rows.reserve(static_cast<std::size_t>(c));
  for (long i = 0; i < c; ++i)
    rows.push_back(concat_cols(qs, sum_rows_at(sums, {static_cast<int>(1 + i)})));
  return vstack(rows);
}

Var scores_graph(Tape& tape, ReaderModel& model, const Var& e_mat) {
  Var z = relu(affine(e_mat, tape.leaf(model.head_w), tape.leaf(model.head_b)));
  return matmul(z, tape.leaf(model.theta));
}

}  // namespace

std::vector<double> candidate_scores(const ReaderModel& model, const Question& q) {
  q.validate();
  Mat total;
  for (int k = 0; k < static_cast<int>(q.paragraphs.size()); ++k) {
    Mat s = paragraph_sums(model, q, k, /*train=*/false);
    total = (k == 0) ? s : Mat(total + s);
  }
  return scores_from_total(model, total);
}

double score_candidate(const ReaderModel& model, const Question& q, const std::string& candidate) {
  const int i = q.candidate_index(candidate);
  return candidate_scores(model, q)[static_cast<std::size_t>(i)];
}

std::string predict(const ReaderModel& model, const Question& q) {
  auto scores = candidate_scores(model, q);
  return q.candidates[static_cast<std::size_t>(argmax_lowest(scores))];
}

Var loss_full_graph(Tape& tape, ReaderModel& model, const Question& q, int k,
                    const std::vector<Mat>& pins, bool train) {
  if (k < 0 || k >= static_cast<int>(q.paragraphs.size()))
    throw ContractError("loss_full: paragraph index out of range");
  if (pins.size() != q.paragraphs.size())
    throw ContractError("loss_full: pins must cover every paragraph");
  const long d = model.config.encoder.model_dim;
  const long c = static_cast<long>(q.candidates.size());

  Var fresh = candidate_matrix(paragraph_sums_graph(tape, model, q, k, train));

  Mat rest = Mat::Zero(c + 1, d);
  for (int kp = 0; kp < static_cast<int>(pins.size()); ++kp)
    if (kp != k) rest += pins[static_cast<std::size_t>(kp)];
  Mat rest_rows(c, 2 * d);
  for (long i = 0; i < c; ++i) rest_rows.row(i) << rest.row(0), rest.row(1 + i);

  Var e_mat = add(fresh, tape.constant(std::move(rest_rows)));
  Var scores = scores_graph(tape, model, e_mat);
  return cross_entropy_logits(scores, q.answer_index());
}

Var naive_loss_graph(Tape& tape, ReaderModel& model, const Question& q, bool train) {
  if (q.paragraphs.empty()) throw ContractError("empty passage");
  Var total = paragraph_sums_graph(tape, model, q, 0, train);
  for (int k = 1; k < static_cast<int>(q.paragraphs.size()); ++k)
    total = add(total, paragraph_sums_graph(tape, model, q, k, train));
  Var scores = scores_graph(tape, model, candidate_matrix(total));
  return cross_entropy_logits(scores, q.answer_index());
}

Var independent_loss_graph(Tape& tape, ReaderModel& model, const Question& q, bool train) {
  if (q.paragraphs.empty()) throw ContractError("empty passage");
  Var loss;
  for (int k = 0; k < static_cast<int>(q.paragraphs.size()); ++k) {
    Var sums = paragraph_sums_graph(tape, model, q, k, train);
    Var scores = scores_graph(tape, model, candidate_matrix(sums));
    Var ce = cross_entropy_logits(scores, q.answer_index());
    loss = (k == 0) ? ce : add(loss, ce);
  }
  return loss;
}

std::vector<double> independent_scores(const ReaderModel& model, const Question& q) {
  q.validate();
  std::vector<double> best;
  for (int k = 0; k < static_cast<int>(q.paragraphs.size()); ++k) {
    Mat sums = paragraph_sums(model, q, k, /*train=*/false);
    auto scores = scores_from_total(model, sums);
    if (k == 0) {
      best = scores;
    } else {
      for (std::size_t i = 0; i < best.size(); ++i) best[i] = std::max(best[i], scores[i]);
    }
  }
  return best;
}

std::string independent_predict(const ReaderModel& model, const Question& q) {
  auto scores = independent_scores(model, q);
  return q.candidates[static_cast<std::size_t>(argmax_lowest(scores))];
}

Question oracle_filter(const Question& q) {
  Question out;
  out.id = q.id;
  out.query_relation = q.query_relation;
  out.query_entity = q.query_entity;
  out.query_tokens = q.query_tokens;
  out.candidates = q.candidates;
  out.answer = q.answer;
  std::vector<int> keep;
  for (int k = 0; k < static_cast<int>(q.paragraphs.size()); ++k)
    if (!q.mention_positions(k, q.answer).empty()) keep.push_back(k);
  if (keep.empty()) throw ContractError("empty passage: answer mentioned in no paragraph");
  std::vector<int> remap(q.paragraphs.size(), -1);
  for (int nk = 0; nk < static_cast<int>(keep.size()); ++nk) {
    remap[static_cast<std::size_t>(keep[static_cast<std::size_t>(nk)])] = nk;
    out.paragraphs.push_back(q.paragraphs[static_cast<std::size_t>(keep[static_cast<std::size_t>(nk)])]);
  }
  for (const auto& [entity, positions] : q.mentions) {
    std::vector<std::array<int, 2>> kept;
    for (const auto& [k, t] : positions)
      if (remap[static_cast<std::size_t>(k)] >= 0) kept.push_back({remap[static_cast<std::size_t>(k)], t});
    if (!kept.empty()) out.mentions[entity] = kept;
  }
  return out;
}

}  // namespace erc
