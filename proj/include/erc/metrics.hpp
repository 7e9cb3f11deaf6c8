#pragma once

#include <set>
#include <string>
#include <vector>

namespace erc {

double accuracy(const std::vector<std::string>& predictions,
                const std::vector<std::string>& golds);

struct TokenF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// bag-of-token (multiset) precision/recall/F1
TokenF1 token_f1(const std::vector<std::string>& pred_tokens,
                 const std::vector<std::string>& gold_tokens);

struct ScoredPair {
  std::string pair_id;
  double score = 0.0;
};

struct PrPoint {
  int t = 0;
  double precision = 0.0;
  double recall = 0.0;
};

// Precision_t / Recall_t over the t most likely positive pairs, for every t.
// Ties break by pair id so the ranking is total.
std::vector<PrPoint> pr_curve(std::vector<ScoredPair> scored,
                              const std::set<std::string>& positives);

// area under the PR curve (average precision)
double average_precision(const std::vector<PrPoint>& curve);

std::string pr_curve_to_csv(const std::vector<PrPoint>& curve);

}  // namespace erc
