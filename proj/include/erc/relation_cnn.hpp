#pragma once

#include "erc/tape.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace erc {

constexpr int kCnnPadToken = 0;
constexpr int kCnnUnkToken = 1;

struct CnnConfig {
  int pad_length = 100;    // L
  int max_distance = 30;   // D_max, distances clamp to +-D_max
  int residual_depth = 4;  // conv layers after the first; one block per two
  int window = 2;          // h
  int word_dim = 50;
  int pos_dim = 5;
  int channels = 50;
  double dropout_p = 0.2;
  double l2 = 1e-4;
  double learning_rate = 5e-5;
  int vocab_size = 2;

  void validate() const;
};

// One weakly labeled sentence, already padded/truncated to pad_length with
// both mention positions inside the window.
struct SentenceInstance {
  std::vector<int> tokens;
  int p1 = 0;
  int p2 = 0;
  bool label = false;
  bool labeled = true;
  std::string entity1;
  std::string entity2;
};

// Pads or truncates raw tokens to L. Truncation keeps the window centered on
// the midpoint of the two mentions so both stay inside.
SentenceInstance make_instance(const CnnConfig& cfg, const std::vector<int>& tokens, int p1,
                               int p2, bool label, const std::string& e1, const std::string& e2);

struct CnnModel {
  CnnConfig config;
  Param word_emb;  // vocab x d_w
  Param pos1_emb;  // (2 D_max + 1) x d_p
  Param pos2_emb;
  Param conv_w;  // (h * (d_w + 2 d_p)) x d_c
  Param conv_b;
  struct Block {
    Param w_hat, b_hat;      // (h d_c) x d_c
    Param w_tilde, b_tilde;  // (h d_c) x d_c
  };
  std::vector<Block> blocks;
  Param fc1_w, fc1_b;  // d_c x d_c
  Param fc2_w, fc2_b;
  Param v;  // d_c x 1

  CnnModel(const CnnConfig& cfg, std::uint64_t seed);

  std::vector<Param*> params();
  // Optional warm start from a "token v1 .. v_dw" text embedding file.
  void load_word_embeddings(const std::string& path,
                            const std::vector<std::string>& vocab_tokens);
};

// L x (d_w + 2 d_p) token embedding with clamped relative positions.
Var token_embed_graph(Tape& tape, CnnModel& model, const SentenceInstance& inst);

// Pre-sigmoid score of one sentence.
Var sentence_logit_graph(Tape& tape, CnnModel& model, const SentenceInstance& inst, bool train);

double sentence_probability(const CnnModel& model, const SentenceInstance& inst);

struct PairScore {
  bool has_evidence = false;
  double probability = 0.0;
  int representative = -1;  // argmax sentence index
};

// max over per-sentence probabilities; empty set -> no evidence
PairScore pair_probability(const CnnModel& model, const std::vector<SentenceInstance>& sentences);

struct TrainReOptions {
  int epochs = 2;
  int batch_size = 8;
  std::uint64_t seed = 0;
  bool mean_reduction = true;  // per-batch mean vs sum
  bool verbose = false;
};

// Distant-supervision training: per-sentence negative log-likelihood under
// Adam with the configured learning rate and L2 weight decay.
void train_re(CnnModel& model, const std::vector<SentenceInstance>& instances,
              const TrainReOptions& opts);

}  // namespace erc
