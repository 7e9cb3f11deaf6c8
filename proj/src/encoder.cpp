#include "erc/encoder.hpp"

#include "erc/rng.hpp"

#include <cmath>
#include <string>

namespace erc {

void EncoderConfig::validate() const {
  if (num_layers < 1 || model_dim < 1 || num_heads < 1 || ffn_dim < 1 || max_positions < 1 ||
      vocab_size < 1)
    throw ContractError("encoder config: all sizes must be positive");
  if (model_dim % num_heads != 0)
    throw ContractError("encoder config: model_dim must be divisible by num_heads");
  if (dropout_p < 0.0 || dropout_p >= 1.0)
    throw ContractError("encoder config: dropout_p must be in [0,1)");
}

namespace {

Mat randn(long rows, long cols, double stddev, CounterRng& rng) {
  Mat m(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) m(r, c) = stddev * rng.next_normal();
  return m;
}

}  // namespace

EncoderParams::EncoderParams(const EncoderConfig& cfg, std::uint64_t seed)
    : config(cfg),
      token_emb("encoder.token_emb", Mat()),
      pos_emb("encoder.pos_emb", Mat()) {
  cfg.validate();
  CounterRng rng(seed, /*stream=*/0xe2c0dee2);
  const int d = cfg.model_dim;
  const double s = 0.02;
  token_emb.value = randn(cfg.vocab_size, d, s, rng);
  token_emb.grad = Mat::Zero(cfg.vocab_size, d);
  pos_emb.value = randn(cfg.max_positions, d, s, rng);
  pos_emb.grad = Mat::Zero(cfg.max_positions, d);
  layers.reserve(static_cast<std::size_t>(cfg.num_layers));
  for (int l = 0; l < cfg.num_layers; ++l) {
    const std::string pfx = "encoder.layer" + std::to_string(l) + ".";
    auto mk = [&](const std::string& n, long r, long c, double stddev) {
      return Param(pfx + n, randn(r, c, stddev, rng));
    };
    const double ws = s;
    Layer layer{
        mk("wq", d, d, ws), mk("bq", 1, d, 0.0), mk("wk", d, d, ws), mk("bk", 1, d, 0.0),
        mk("wv", d, d, ws), mk("bv", 1, d, 0.0), mk("wo", d, d, ws), mk("bo", 1, d, 0.0),
        Param(pfx + "ln1_gamma", Mat::Ones(1, d)), Param(pfx + "ln1_beta", Mat::Zero(1, d)),
        mk("w1", d, cfg.ffn_dim, ws), mk("b1", 1, cfg.ffn_dim, 0.0),
        mk("w2", cfg.ffn_dim, d, ws), mk("b2", 1, d, 0.0),
        Param(pfx + "ln2_gamma", Mat::Ones(1, d)), Param(pfx + "ln2_beta", Mat::Zero(1, d))};
    layers.push_back(std::move(layer));
  }
}

std::vector<Param*> EncoderParams::params() {
  std::vector<Param*> out{&token_emb, &pos_emb};
  for (Layer& l : layers) {
    for (Param* p : {&l.wq, &l.bq, &l.wk, &l.bk, &l.wv, &l.bv, &l.wo, &l.bo, &l.ln1_gamma,
                     &l.ln1_beta, &l.w1, &l.b1, &l.w2, &l.b2, &l.ln2_gamma, &l.ln2_beta})
      out.push_back(p);
  }
  return out;
}

long EncoderParams::scalar_count() {
  long n = 0;
  for (Param* p : params()) n += p->size();
  return n;
}

Var attention(const Var& q, const Var& k, const Var& v) {
  if (q.cols() == 0) throw ContractError("attention: d_k must be positive");
  if (q.cols() != k.cols() || k.rows() != v.rows())
    throw ShapeError("attention: Q/K/V shapes do not conform");
  Var logits = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(q.cols())));
  return matmul(softmax_rows(logits), v);
}

Var encode(Tape& tape, const EncoderParams& params, const std::vector<int>& question_tokens,
           const std::vector<int>& paragraph_tokens, bool train) {
  const EncoderConfig& cfg = params.config;
  std::vector<int> tokens;
  tokens.reserve(question_tokens.size() + paragraph_tokens.size() + 2);
  tokens.push_back(kStartToken);
  tokens.insert(tokens.end(), question_tokens.begin(), question_tokens.end());
  tokens.push_back(kSepToken);
  tokens.insert(tokens.end(), paragraph_tokens.begin(), paragraph_tokens.end());
  const int n = static_cast<int>(tokens.size());
  if (n > cfg.max_positions)
    throw ContractError("encode: sequence length " + std::to_string(n) + " exceeds max_positions " +
                        std::to_string(cfg.max_positions));
  for (int id : tokens)
    if (id < 0 || id >= cfg.vocab_size)
      throw ContractError("encode: token id " + std::to_string(id) + " out of vocabulary");

  auto& p = const_cast<EncoderParams&>(params);
  std::vector<int> positions(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) positions[static_cast<std::size_t>(i)] = i;
  Var x = add(embedding_rows(tape, p.token_emb, tokens), embedding_rows(tape, p.pos_emb, positions));
  x = dropout(x, cfg.dropout_p, train);

  const int d = cfg.model_dim;
  const int dh = d / cfg.num_heads;
  for (auto& layer : p.layers) {
    Var q = affine(x, tape.leaf(layer.wq), tape.leaf(layer.bq));
    Var k = affine(x, tape.leaf(layer.wk), tape.leaf(layer.bk));
    Var v = affine(x, tape.leaf(layer.wv), tape.leaf(layer.bv));
    Var heads;  // built up by column concatenation
    for (int h = 0; h < cfg.num_heads; ++h) {
      Var ah = attention(slice_cols(q, h * dh, dh), slice_cols(k, h * dh, dh),
                         slice_cols(v, h * dh, dh));
      heads = (h == 0) ? ah : concat_cols(heads, ah);
    }
    Var att = affine(heads, tape.leaf(layer.wo), tape.leaf(layer.bo));
    att = dropout(att, cfg.dropout_p, train);
    x = layer_norm_rows(add(x, att), tape.leaf(layer.ln1_gamma), tape.leaf(layer.ln1_beta));
    Var ffn = affine(relu(affine(x, tape.leaf(layer.w1), tape.leaf(layer.b1))),
                     tape.leaf(layer.w2), tape.leaf(layer.b2));
    ffn = dropout(ffn, cfg.dropout_p, train);
    x = layer_norm_rows(add(x, ffn), tape.leaf(layer.ln2_gamma), tape.leaf(layer.ln2_beta));
  }
  return x;
}

}  // namespace erc
