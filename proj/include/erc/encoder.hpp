#pragma once

#include "erc/tape.hpp"

#include <cstdint>
#include <vector>

namespace erc {

struct EncoderConfig {
  int num_layers = 2;
  int model_dim = 64;
  int num_heads = 4;
  int ffn_dim = 128;
  int max_positions = 128;
  int vocab_size = 64;
  double dropout_p = 0.1;

  void validate() const;
};

// Token ids reserved by the [START] q [SEP] para input layout.
constexpr int kStartToken = 0;
constexpr int kSepToken = 1;
constexpr int kNumSpecialTokens = 2;

// Offset from paragraph-local token positions to rows of the encoder output.
inline int paragraph_offset(std::size_t question_len) {
  return static_cast<int>(question_len) + 2;
}

// Post-layer-norm transformer encoder parameters.
struct EncoderParams {
  EncoderConfig config;
  Param token_emb;
  Param pos_emb;
  struct Layer {
    Param wq, bq, wk, bk, wv, bv, wo, bo;
    Param ln1_gamma, ln1_beta;
    Param w1, b1, w2, b2;
    Param ln2_gamma, ln2_beta;
  };
  std::vector<Layer> layers;

  EncoderParams(const EncoderConfig& cfg, std::uint64_t seed);

  std::vector<Param*> params();
  long scalar_count();
};

// softmax(Q K^T / sqrt(d_k)) V
Var attention(const Var& q, const Var& k, const Var& v);

// Encodes [START] question [SEP] paragraph into one contextual embedding per
// position. Deterministic when train == false.
Var encode(Tape& tape, const EncoderParams& params, const std::vector<int>& question_tokens,
           const std::vector<int>& paragraph_tokens, bool train);

}  // namespace erc
