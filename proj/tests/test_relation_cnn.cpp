#include <doctest.h>

#include "erc/relation_cnn.hpp"
#include "erc/rng.hpp"

#include <cmath>

using namespace erc;

namespace {

CnnConfig tiny_config() {
  CnnConfig cfg;
  cfg.pad_length = 8;
  cfg.max_distance = 4;
  cfg.residual_depth = 2;
  cfg.window = 2;
  cfg.word_dim = 4;
  cfg.pos_dim = 2;
  cfg.channels = 4;
  cfg.dropout_p = 0.0;
  cfg.vocab_size = 6;
  return cfg;
}

SentenceInstance tiny_instance(const CnnConfig& cfg) {
  return make_instance(cfg, {2, 3, 4, 5, 3, 2}, 1, 4, true, "e1", "e2");
}

}  // namespace

TEST_CASE("stock defaults match the documented hyper-parameters") {
  CnnConfig cfg;
  CHECK(cfg.pad_length == 100);
  CHECK(cfg.max_distance == 30);
  CHECK(cfg.residual_depth == 4);
  CHECK(cfg.window == 2);
  CHECK(cfg.word_dim == 50);
  CHECK(cfg.pos_dim == 5);
  CHECK(cfg.channels == 50);
  CHECK(cfg.dropout_p == 0.2);
  CHECK(cfg.l2 == 1e-4);
  CHECK(cfg.learning_rate == 5e-5);
}

TEST_CASE("config validation") {
  CnnConfig cfg = tiny_config();
  cfg.pad_length = 1;  // L < h
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = tiny_config();
  cfg.residual_depth = 3;  // must pair into blocks
  CHECK_THROWS_AS(cfg.validate(), ContractError);
}

TEST_CASE("token embedding concatenates word and clamped position rows") {
  CnnConfig cfg = tiny_config();
  CnnModel model(cfg, 1);
  SentenceInstance inst = tiny_instance(cfg);
  Tape t;
  Mat x = token_embed_graph(t, model, inst).value();
  CHECK(x.rows() == cfg.pad_length);
  CHECK(x.cols() == cfg.word_dim + 2 * cfg.pos_dim);

  // row i: [W(t_i); P1(p1-i); P2(p2-i)] with the k - i distance convention
  const int i = 3;
  const int d1 = inst.p1 - i;  // -2
  const int d2 = inst.p2 - i;  // 1
  Mat expect(1, cfg.word_dim + 2 * cfg.pos_dim);
  expect << model.word_emb.value.row(inst.tokens[static_cast<std::size_t>(i)]),
      model.pos1_emb.value.row(d1 + cfg.max_distance),
      model.pos2_emb.value.row(d2 + cfg.max_distance);
  CHECK(x.row(i) == expect.row(0));

  // i == p1 -> distance-zero row of P1
  CHECK(x.block(inst.p1, cfg.word_dim, 1, cfg.pos_dim) ==
        model.pos1_emb.value.row(cfg.max_distance));
}

TEST_CASE("distances beyond D_max reuse the clamp row") {
  CnnConfig cfg = tiny_config();
  cfg.pad_length = 16;
  CnnModel model(cfg, 1);
  // p2 far from the start: distance 15 > D_max = 4 at i = 0
  std::vector<int> toks(16, 2);
  SentenceInstance inst = make_instance(cfg, toks, 0, 15, false, "a", "b");
  Tape t;
  Mat x = token_embed_graph(t, model, inst).value();
  CHECK(x.block(0, cfg.word_dim + cfg.pos_dim, 1, cfg.pos_dim) ==
        model.pos2_emb.value.row(2 * cfg.max_distance));  // clamped to +D_max
  // the same clamp row serves any larger distance (idempotence)
  CHECK(x.block(1, cfg.word_dim + cfg.pos_dim, 1, cfg.pos_dim) ==
        model.pos2_emb.value.row(2 * cfg.max_distance));
}

TEST_CASE("unknown token ids fall back to the UNK row") {
  CnnConfig cfg = tiny_config();
  CnnModel model(cfg, 1);
  SentenceInstance inst = tiny_instance(cfg);
  inst.tokens[2] = 99;  // outside vocab
  Tape t;
  Mat x = token_embed_graph(t, model, inst).value();
  CHECK(x.block(2, 0, 1, cfg.word_dim) == model.word_emb.value.row(kCnnUnkToken));
}

TEST_CASE("first conv output length is L - h + 1; stock dims trace end to end") {
  CnnConfig cfg;  // stock defaults, K=4 -> 2 blocks
  cfg.vocab_size = 8;
  cfg.dropout_p = 0.0;
  CnnModel model(cfg, 1);
  std::vector<int> toks(120, 2);  // longer than L, gets truncated
  SentenceInstance inst = make_instance(cfg, toks, 40, 60, true, "a", "b");
  CHECK(static_cast<int>(inst.tokens.size()) == cfg.pad_length);
  Tape t;
  Var logit = sentence_logit_graph(t, model, inst, false);
  CHECK(logit.rows() == 1);
  CHECK(logit.cols() == 1);
  CHECK(model.blocks.size() == 2);
  const double p = sentence_probability(model, inst);
  CHECK(p > 0.0);
  CHECK(p < 1.0);
}

TEST_CASE("zero score vector gives probability one half") {
  CnnConfig cfg = tiny_config();
  CnnModel model(cfg, 1);
  model.v.value.setZero();
  CHECK(sentence_probability(model, tiny_instance(cfg)) == doctest::Approx(0.5));
}

TEST_CASE("probabilities stay in (0,1) over random instances") {
  CnnConfig cfg = tiny_config();
  CnnModel model(cfg, 1);
  CounterRng rng(5, 0);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<int> toks;
    const int len = 3 + static_cast<int>(rng.next_below(6));  // stays within pad_length
    for (int i = 0; i < len; ++i)
      toks.push_back(2 + static_cast<int>(rng.next_below(4)));
    int p1 = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(len)));
    int p2 = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(len)));
    if (p1 == p2) p2 = (p2 + 1) % len;
    const double p = sentence_probability(model, make_instance(cfg, toks, p1, p2, false, "a", "b"));
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
}

TEST_CASE("swapping mention roles changes the score (directionality)") {
  CnnConfig cfg = tiny_config();
  CnnModel model(cfg, 1);
  std::vector<int> toks = {2, 3, 4, 5, 3, 2};
  const double fwd = sentence_probability(model, make_instance(cfg, toks, 1, 4, false, "a", "b"));
  const double rev = sentence_probability(model, make_instance(cfg, toks, 4, 1, false, "a", "b"));
  CHECK(std::abs(fwd - rev) > 1e-12);
}

TEST_CASE("pair probability: singleton, max semantics, monotone, no-evidence") {
  CnnConfig cfg = tiny_config();
  CnnModel model(cfg, 1);
  SentenceInstance a = tiny_instance(cfg);
  SentenceInstance b = make_instance(cfg, {3, 4, 2, 5}, 0, 3, true, "e1", "e2");
  SentenceInstance c = make_instance(cfg, {5, 2, 3}, 2, 0, true, "e1", "e2");

  PairScore empty = pair_probability(model, {});
  CHECK(!empty.has_evidence);

  PairScore one = pair_probability(model, {a});
  CHECK(one.has_evidence);
  CHECK(one.probability == doctest::Approx(sentence_probability(model, a)));
  CHECK(one.representative == 0);

  PairScore two = pair_probability(model, {a, b});
  CHECK(two.probability >= one.probability);  // max monotone under inclusion

  PairScore abc = pair_probability(model, {a, b, c});
  PairScore cba = pair_probability(model, {c, b, a});
  CHECK(abc.probability == doctest::Approx(cba.probability).epsilon(1e-15));
  const double expect = std::max({sentence_probability(model, a), sentence_probability(model, b),
                                  sentence_probability(model, c)});
  CHECK(abc.probability == doctest::Approx(expect));
}

TEST_CASE("make_instance pads and keeps both mentions when truncating") {
  CnnConfig cfg = tiny_config();
  std::vector<int> toks = {2, 3};
  SentenceInstance inst = make_instance(cfg, toks, 0, 1, true, "a", "b");
  CHECK(static_cast<int>(inst.tokens.size()) == cfg.pad_length);
  CHECK(inst.tokens[2] == kCnnPadToken);

  std::vector<int> longer(30, 2);
  longer[20] = 3;
  longer[24] = 4;
  SentenceInstance cut = make_instance(cfg, longer, 20, 24, true, "a", "b");
  CHECK(cut.tokens[static_cast<std::size_t>(cut.p1)] == 3);
  CHECK(cut.tokens[static_cast<std::size_t>(cut.p2)] == 4);
  CHECK(cut.p1 >= 0);
  CHECK(cut.p2 < cfg.pad_length);

  // mentions too far apart to co-fit in L is a contract violation
  std::vector<int> vast(100, 2);
  CHECK_THROWS_AS(make_instance(cfg, vast, 0, 90, true, "a", "b"), ContractError);
}

TEST_CASE("training drives a single instance's loss toward zero") {
  CnnConfig cfg = tiny_config();
  cfg.learning_rate = 0.05;
  cfg.l2 = 0.0;
  CnnModel model(cfg, 1);
  SentenceInstance inst = tiny_instance(cfg);
  TrainReOptions opts;
  opts.epochs = 200;
  opts.batch_size = 1;
  train_re(model, {inst}, opts);
  CHECK(sentence_probability(model, inst) > 0.99);
}

TEST_CASE("trigger-word corpus is learned to >= 0.99 sentence accuracy") {
  CnnConfig cfg = tiny_config();
  cfg.pad_length = 10;
  cfg.max_distance = 5;
  cfg.vocab_size = 10;
  cfg.learning_rate = 0.01;
  CnnModel model(cfg, 2);
  CounterRng rng(9, 0);
  std::vector<SentenceInstance> data;
  for (int i = 0; i < 300; ++i) {
    const bool pos = rng.next_double() < 0.5;
    // tokens: 2..7 filler, 8 = trigger "causes", 9 = neutral "and"
    std::vector<int> toks = {static_cast<int>(2 + rng.next_below(6)), 3,
                             pos ? 8 : 9, 4,
                             static_cast<int>(2 + rng.next_below(6))};
    data.push_back(make_instance(cfg, toks, 1, 3, pos, "a", "b"));
  }
  TrainReOptions opts;
  opts.epochs = 20;
  opts.batch_size = 8;
  train_re(model, data, opts);
  int correct = 0;
  for (const auto& inst : data)
    correct += (sentence_probability(model, inst) > 0.5) == inst.label ? 1 : 0;
  CHECK(static_cast<double>(correct) / static_cast<double>(data.size()) >= 0.99);
}
