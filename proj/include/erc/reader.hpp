#pragma once

#include "erc/encoder.hpp"
#include "erc/tape.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

namespace erc {

// A cloze question over a multi-paragraph passage. Token sequences are vocab
// ids; mention positions are paragraph-local.
struct Question {
  std::string id;
  std::string query_relation;
  std::string query_entity;
  std::vector<int> query_tokens;
  std::vector<std::vector<int>> paragraphs;
  std::vector<std::string> candidates;
  std::string answer;
  // entity id -> [(paragraph k, token position t), ...]
  std::map<std::string, std::vector<std::array<int, 2>>> mentions;

  void validate() const;
  int answer_index() const;
  int candidate_index(const std::string& entity) const;
  // positions of `entity` in paragraph k
  std::vector<int> mention_positions(int k, const std::string& entity) const;
};

struct ReaderConfig {
  EncoderConfig encoder;
  int head_dim = 64;
};

// Encoder plus the candidate-scoring head: score = theta^T relu(W e + b)
// where e is the accumulated [query-sum ++ candidate-sum] vector.
struct ReaderModel {
  ReaderConfig config;
  EncoderParams encoder;
  Param head_w;  // 2d x head_dim
  Param head_b;  // 1 x head_dim
  Param theta;   // head_dim x 1

  ReaderModel(const ReaderConfig& cfg, std::uint64_t seed);

  std::vector<Param*> params();
  std::vector<Param*> head_params() { return {&head_w, &head_b, &theta}; }
  long param_scalars();
};

// Sum of the H rows selected by paragraph-local positions (offset maps them
// into the [START] q [SEP] para layout). Empty positions give a zero vector.
Var mention_sum(const Var& h, const std::vector<int>& para_positions, int offset);

// Per-paragraph (C+1) x d matrix: row 0 is the query-entity sum, row 1+i the
// i-th candidate's sum. This is everything downstream scoring consumes.
Mat paragraph_sums(const ReaderModel& model, const Question& q, int k, bool train,
                   std::uint64_t seed = 0, std::uint64_t step = 0);

// Same, but on a caller-provided tape with gradients flowing.
Var paragraph_sums_graph(Tape& tape, ReaderModel& model, const Question& q, int k, bool train);

// Full-model candidate scores under the cross-paragraph sum (eval mode).
std::vector<double> candidate_scores(const ReaderModel& model, const Question& q);
double score_candidate(const ReaderModel& model, const Question& q, const std::string& candidate);
std::string predict(const ReaderModel& model, const Question& q);

// Cross-entropy loss where paragraph k is encoded fresh on `tape` and every
// other paragraph enters through the fixed `pins` (pins[k'] as produced by
// paragraph_sums; entry k is ignored).
Var loss_full_graph(Tape& tape, ReaderModel& model, const Question& q, int k,
                    const std::vector<Mat>& pins, bool train);

// Single-graph loss with every paragraph fresh (the full-retention baseline).
Var naive_loss_graph(Tape& tape, ReaderModel& model, const Question& q, bool train);

// Independent-paragraph ablation: per-paragraph cross entropy summed over k;
// prediction by the maximum per-paragraph score.
Var independent_loss_graph(Tape& tape, ReaderModel& model, const Question& q, bool train);
std::vector<double> independent_scores(const ReaderModel& model, const Question& q);
std::string independent_predict(const ReaderModel& model, const Question& q);

// Keeps only paragraphs mentioning the answer, reindexing mention maps.
Question oracle_filter(const Question& q);

}  // namespace erc
