#include "erc/relation_cnn.hpp"

#include "erc/optim.hpp"
#include "erc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

namespace erc {

void CnnConfig::validate() const {
  if (pad_length < 1 || max_distance < 1 || residual_depth < 0 || window < 1 || word_dim < 1 ||
      pos_dim < 1 || channels < 1 || vocab_size < 2)
    throw ContractError("cnn config: all sizes must be positive");
  if (pad_length < window) throw ContractError("cnn config: pad_length shorter than window");
  if (residual_depth % 2 != 0)
    throw ContractError("cnn config: residual_depth must be even (two conv layers per block)");
  if (dropout_p < 0.0 || dropout_p >= 1.0)
    throw ContractError("cnn config: dropout_p must be in [0,1)");
}

SentenceInstance make_instance(const CnnConfig& cfg, const std::vector<int>& tokens, int p1,
                               int p2, bool label, const std::string& e1, const std::string& e2) {
  const int L = cfg.pad_length;
  if (p1 < 0 || p2 < 0 || p1 >= static_cast<int>(tokens.size()) ||
      p2 >= static_cast<int>(tokens.size()))
    throw ContractError("make_instance: mention position out of range");
  if (p1 == p2) throw ContractError("make_instance: mention positions must differ");
  SentenceInstance inst;
  inst.label = label;
  inst.entity1 = e1;
  inst.entity2 = e2;
  int begin = 0;
  if (static_cast<int>(tokens.size()) > L) {
    const int mid = (p1 + p2) / 2;
    begin = std::clamp(mid - L / 2, 0, static_cast<int>(tokens.size()) - L);
    if (p1 < begin || p2 < begin || p1 >= begin + L || p2 >= begin + L)
      throw ContractError("make_instance: mentions farther apart than pad_length");
  }
  inst.tokens.assign(static_cast<std::size_t>(L), kCnnPadToken);
  const int n = std::min(L, static_cast<int>(tokens.size()) - begin);
  for (int i = 0; i < n; ++i) inst.tokens[static_cast<std::size_t>(i)] = tokens[static_cast<std::size_t>(begin + i)];
  inst.p1 = p1 - begin;
  inst.p2 = p2 - begin;
  return inst;
}

namespace {

Mat randn(long rows, long cols, double stddev, CounterRng& rng) {
  Mat m(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) m(r, c) = stddev * rng.next_normal();
  return m;
}

}  // namespace

CnnModel::CnnModel(const CnnConfig& cfg, std::uint64_t seed)
    : config(cfg),
      word_emb("cnn.word_emb", Mat()),
      pos1_emb("cnn.pos1_emb", Mat()),
      pos2_emb("cnn.pos2_emb", Mat()),
      conv_w("cnn.conv_w", Mat()),
      conv_b("cnn.conv_b", Mat()),
      fc1_w("cnn.fc1_w", Mat()),
      fc1_b("cnn.fc1_b", Mat()),
      fc2_w("cnn.fc2_w", Mat()),
      fc2_b("cnn.fc2_b", Mat()),
      v("cnn.v", Mat()) {
  cfg.validate();
  CounterRng rng(seed, /*stream=*/0xc22c22);
  const int in = cfg.word_dim + 2 * cfg.pos_dim;
  const int dc = cfg.channels;
  auto init = [&](Param& p, long r, long c, double s) {
    p.value = randn(r, c, s, rng);
    p.grad = Mat::Zero(r, c);
  };
  init(word_emb, cfg.vocab_size, cfg.word_dim, 0.1);
  init(pos1_emb, 2 * cfg.max_distance + 1, cfg.pos_dim, 0.1);
  init(pos2_emb, 2 * cfg.max_distance + 1, cfg.pos_dim, 0.1);
  init(conv_w, static_cast<long>(cfg.window) * in, dc,
       std::sqrt(2.0 / (static_cast<double>(cfg.window) * in)));
  init(conv_b, 1, dc, 0.0);
  const int num_blocks = cfg.residual_depth / 2;
  for (int b = 0; b < num_blocks; ++b) {
    const std::string pfx = "cnn.block" + std::to_string(b) + ".";
    Block blk{Param(pfx + "w_hat", Mat()), Param(pfx + "b_hat", Mat()),
              Param(pfx + "w_tilde", Mat()), Param(pfx + "b_tilde", Mat())};
    const double s = std::sqrt(2.0 / (static_cast<double>(cfg.window) * dc));
    init(blk.w_hat, static_cast<long>(cfg.window) * dc, dc, s);
    init(blk.b_hat, 1, dc, 0.0);
    init(blk.w_tilde, static_cast<long>(cfg.window) * dc, dc, s);
    init(blk.b_tilde, 1, dc, 0.0);
    blocks.push_back(std::move(blk));
  }
  init(fc1_w, dc, dc, std::sqrt(2.0 / dc));
  init(fc1_b, 1, dc, 0.0);
  init(fc2_w, dc, dc, std::sqrt(2.0 / dc));
  init(fc2_b, 1, dc, 0.0);
  init(v, dc, 1, 1.0 / std::sqrt(static_cast<double>(dc)));
}

std::vector<Param*> CnnModel::params() {
  std::vector<Param*> out{&word_emb, &pos1_emb, &pos2_emb, &conv_w, &conv_b};
  for (Block& b : blocks)
    for (Param* p : {&b.w_hat, &b.b_hat, &b.w_tilde, &b.b_tilde}) out.push_back(p);
  for (Param* p : {&fc1_w, &fc1_b, &fc2_w, &fc2_b, &v}) out.push_back(p);
  return out;
}

void CnnModel::load_word_embeddings(const std::string& path,
                                    const std::vector<std::string>& vocab_tokens) {
  std::ifstream is(path);
  if (!is) throw TapeError("cannot open embedding file: " + path);
  std::map<std::string, long> index;
  for (long i = 0; i < static_cast<long>(vocab_tokens.size()); ++i)
    index[vocab_tokens[static_cast<std::size_t>(i)]] = i;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    auto it = index.find(token);
    std::vector<double> vals;
    double x;
    while (ls >> x) vals.push_back(x);
    if (static_cast<int>(vals.size()) != config.word_dim)
      throw TapeError("embedding file " + path + " line " + std::to_string(line_no) +
                      ": expected " + std::to_string(config.word_dim) + " values");
    if (it == index.end()) continue;
    for (int c = 0; c < config.word_dim; ++c) word_emb.value(it->second, c) = vals[static_cast<std::size_t>(c)];
  }
}

Var token_embed_graph(Tape& tape, CnnModel& model, const SentenceInstance& inst) {
  const CnnConfig& cfg = model.config;
  if (static_cast<int>(inst.tokens.size()) != cfg.pad_length)
    throw ContractError("token_embed: sentence not padded to pad_length");
  if (inst.p1 < 0 || inst.p1 >= cfg.pad_length || inst.p2 < 0 || inst.p2 >= cfg.pad_length)
    throw ContractError("token_embed: mention position out of range");
  std::vector<int> words = inst.tokens;
  for (int& w : words)
    if (w < 0 || w >= cfg.vocab_size) w = kCnnUnkToken;
  std::vector<int> d1(words.size()), d2(words.size());
  const int dm = cfg.max_distance;
  for (int i = 0; i < static_cast<int>(words.size()); ++i) {
    d1[static_cast<std::size_t>(i)] = std::clamp(inst.p1 - i, -dm, dm) + dm;
    d2[static_cast<std::size_t>(i)] = std::clamp(inst.p2 - i, -dm, dm) + dm;
  }
  Var x = concat_cols(embedding_rows(tape, model.word_emb, words),
                      concat_cols(embedding_rows(tape, model.pos1_emb, d1),
                                  embedding_rows(tape, model.pos2_emb, d2)));
  return x;
}

Var sentence_logit_graph(Tape& tape, CnnModel& model, const SentenceInstance& inst, bool train) {
  const CnnConfig& cfg = model.config;
  Var x = token_embed_graph(tape, model, inst);
  // first conv shrinks to L-h+1; the block convs keep length (same padding)
  Var prev1 = relu(affine(window_rows(x, cfg.window, /*same_length=*/false),
                          tape.leaf(model.conv_w), tape.leaf(model.conv_b)));
  Var prev2;  // c-tilde^{-1} = 0
  for (auto& blk : model.blocks) {
    Var in = prev2.tape != nullptr ? add(prev1, prev2) : prev1;
    Var chat = relu(affine(window_rows(in, cfg.window, true), tape.leaf(blk.w_hat),
                           tape.leaf(blk.b_hat)));
    Var ctilde = relu(affine(window_rows(chat, cfg.window, true), tape.leaf(blk.w_tilde),
                             tape.leaf(blk.b_tilde)));
    prev2 = prev1;
    prev1 = ctilde;
  }
  Var z = max_over_rows(prev1);
  z = dropout(z, cfg.dropout_p, train);
  Var z1 = relu(affine(z, tape.leaf(model.fc1_w), tape.leaf(model.fc1_b)));
  Var z2 = relu(affine(z1, tape.leaf(model.fc2_w), tape.leaf(model.fc2_b)));
  return matmul(z2, tape.leaf(model.v));
}

double sentence_probability(const CnnModel& model, const SentenceInstance& inst) {
  Tape tape(Tape::Mode::Retain);
  Var logit = sentence_logit_graph(tape, const_cast<CnnModel&>(model), inst, /*train=*/false);
  return 1.0 / (1.0 + std::exp(-logit.scalar()));
}

PairScore pair_probability(const CnnModel& model, const std::vector<SentenceInstance>& sentences) {
  PairScore score;
  if (sentences.empty()) return score;
  score.has_evidence = true;
  for (int i = 0; i < static_cast<int>(sentences.size()); ++i) {
    const double p = sentence_probability(model, sentences[static_cast<std::size_t>(i)]);
    if (i == 0 || p > score.probability) {
      score.probability = p;
      score.representative = i;
    }
  }
  return score;
}

void train_re(CnnModel& model, const std::vector<SentenceInstance>& instances,
              const TrainReOptions& opts) {
  if (instances.empty()) throw ContractError("train_re: no instances");
  for (const SentenceInstance& inst : instances)
    if (!inst.labeled) throw ContractError("train_re: unlabeled instance in training set");
  Optimizer opt(Optimizer::Kind::Adam, model.config.learning_rate, model.config.l2);
  auto params = model.params();
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t dropout_step = 0;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    CounterRng shuffle_rng(opts.seed, 0x5bff1e, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);
    double epoch_loss = 0.0;
    std::size_t at = 0;
    while (at < order.size()) {
      const std::size_t bsz = std::min<std::size_t>(static_cast<std::size_t>(opts.batch_size),
                                                    order.size() - at);
      zero_grads(params);
      for (std::size_t j = 0; j < bsz; ++j, ++dropout_step) {
        const SentenceInstance& inst = instances[order[at + j]];
        Tape tape(Tape::Mode::Retain, nullptr, opts.seed, dropout_step);
        Var logit = sentence_logit_graph(tape, model, inst, /*train=*/true);
        Var loss = bce_with_logit(logit, inst.label);
        if (opts.mean_reduction) loss = scale(loss, 1.0 / static_cast<double>(bsz));
        const double lv = loss.scalar();
        if (!std::isfinite(lv)) throw NumericError("train_re: non-finite loss");
        epoch_loss += lv * (opts.mean_reduction ? static_cast<double>(bsz) : 1.0);
        tape.backward(loss);
      }
      opt.step(params);
      at += bsz;
    }
    if (opts.verbose)
      std::cerr << "train-re epoch " << epoch << " mean loss "
                << epoch_loss / static_cast<double>(order.size()) << "\n";
  }
  zero_grads(params);
}

}  // namespace erc
