#include <doctest.h>

#include "erc/encoder.hpp"
#include "erc/rng.hpp"

#include <algorithm>
#include <vector>

using namespace erc;

namespace {

EncoderConfig tiny_config() {
  EncoderConfig cfg;
  cfg.num_layers = 2;
  cfg.model_dim = 8;
  cfg.num_heads = 2;
  cfg.ffn_dim = 12;
  cfg.max_positions = 16;
  cfg.vocab_size = 10;
  cfg.dropout_p = 0.0;
  return cfg;
}

Mat randn(CounterRng& rng, long r, long c) {
  Mat m(r, c);
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < c; ++j) m(i, j) = rng.next_normal();
  return m;
}

}  // namespace

TEST_CASE("config validation") {
  EncoderConfig cfg = tiny_config();
  cfg.num_heads = 3;  // does not divide d=8
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = tiny_config();
  cfg.model_dim = 0;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
}

TEST_CASE("attention with a single key returns V exactly") {
  CounterRng rng(1, 0);
  Tape t;
  Mat v = randn(rng, 1, 3);
  Var out = attention(t.constant(randn(rng, 1, 4)), t.constant(randn(rng, 1, 4)),
                      t.constant(v));
  CHECK((out.value() - v).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("attention with equal logits averages V") {
  CounterRng rng(2, 0);
  Tape t;
  Mat v = randn(rng, 3, 2);
  // Q orthogonal to all keys: zero query makes every logit zero
  Var out = attention(t.constant(Mat::Zero(1, 4)), t.constant(randn(rng, 3, 4)),
                      t.constant(v));
  Mat mean = v.colwise().mean();
  CHECK((out.value() - mean).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("attention rows are convex combinations of V rows") {
  CounterRng rng(3, 0);
  Tape t;
  Mat q = randn(rng, 3, 2), k = randn(rng, 3, 2), v = randn(rng, 3, 2);
  Mat w = softmax_rows(scale(matmul(t.constant(q), transpose(t.constant(k))),
                             1.0 / std::sqrt(2.0)))
              .value();
  for (long i = 0; i < 3; ++i) CHECK(std::abs(w.row(i).sum() - 1.0) < 1e-12);
  Mat out = attention(t.constant(q), t.constant(k), t.constant(v)).value();
  for (long j = 0; j < v.cols(); ++j) {
    const double lo = v.col(j).minCoeff(), hi = v.col(j).maxCoeff();
    for (long i = 0; i < 3; ++i) {
      CHECK(out(i, j) >= lo - 1e-12);
      CHECK(out(i, j) <= hi + 1e-12);
    }
  }
}

TEST_CASE("encode output has one row per input position (start + q + sep + para)") {
  EncoderParams params(tiny_config(), 5);
  Tape t;
  std::vector<int> q = {3, 4, 5}, para = {6, 7, 8, 9};
  Var h = encode(t, params, q, para, false);
  CHECK(h.rows() == static_cast<long>(q.size()) + 2 + static_cast<long>(para.size()));
  CHECK(h.cols() == 8);
  CHECK(paragraph_offset(q.size()) == 5);
}

TEST_CASE("different paragraphs give different contextual embeddings") {
  EncoderParams params(tiny_config(), 5);
  Tape t;
  Mat h1 = encode(t, params, {3, 4}, {5, 6, 7}, false).value();
  Mat h2 = encode(t, params, {3, 4}, {8, 9, 7}, false).value();
  CHECK((h1 - h2).cwiseAbs().maxCoeff() > 1e-8);
}

TEST_CASE("eval-mode encoding is bitwise reproducible") {
  EncoderParams params(tiny_config(), 5);
  Mat first, second;
  {
    Tape t;
    first = encode(t, params, {3, 4}, {5, 6, 7}, false).value();
  }
  {
    Tape t(Tape::Mode::Discard);
    second = encode(t, params, {3, 4}, {5, 6, 7}, false).value();
  }
  CHECK(first == second);
}

TEST_CASE("relabeling oracle: permuting vocab rows and ids together is a no-op") {
  EncoderConfig cfg = tiny_config();
  EncoderParams params(cfg, 5);
  std::vector<int> perm(static_cast<std::size_t>(cfg.vocab_size));
  for (int i = 0; i < cfg.vocab_size; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::swap(perm[3], perm[7]);
  std::swap(perm[4], perm[9]);

  EncoderParams relabeled(cfg, 5);
  for (int i = 0; i < cfg.vocab_size; ++i)
    relabeled.token_emb.value.row(perm[static_cast<std::size_t>(i)]) =
        params.token_emb.value.row(i);

  auto remap = [&](std::vector<int> ids) {
    for (int& id : ids) id = perm[static_cast<std::size_t>(id)];
    return ids;
  };
  Tape t;
  Mat h1 = encode(t, params, {3, 4}, {4, 6, 3}, false).value();
  Mat h2 = encode(t, relabeled, remap({3, 4}), remap({4, 6, 3}), false).value();
  CHECK(h1 == h2);
}

TEST_CASE("overlong input is an explicit error, not a silent truncation") {
  EncoderParams params(tiny_config(), 5);
  Tape t;
  std::vector<int> para(20, 3);  // 2 + 2 + 20 > max_positions = 16
  CHECK_THROWS_AS(encode(t, params, {3, 4}, para, false), ContractError);
}

TEST_CASE("token ids outside the vocabulary are rejected") {
  EncoderParams params(tiny_config(), 5);
  Tape t;
  CHECK_THROWS(encode(t, params, {3}, {10}, false));
}
