#include "erc/metrics.hpp"

#include "erc/tape.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace erc {

double accuracy(const std::vector<std::string>& predictions,
                const std::vector<std::string>& golds) {
  if (predictions.empty() || predictions.size() != golds.size())
    throw ContractError("accuracy: need equally sized, non-empty prediction and gold lists");
  long correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == golds[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

TokenF1 token_f1(const std::vector<std::string>& pred_tokens,
                 const std::vector<std::string>& gold_tokens) {
  if (gold_tokens.empty()) throw ContractError("token_f1: empty gold bag");
  TokenF1 out;
  if (pred_tokens.empty()) return out;
  std::map<std::string, long> gold_counts;
  for (const std::string& t : gold_tokens) ++gold_counts[t];
  long overlap = 0;
  for (const std::string& t : pred_tokens) {
    auto it = gold_counts.find(t);
    if (it != gold_counts.end() && it->second > 0) {
      ++overlap;
      --it->second;
    }
  }
  out.precision = static_cast<double>(overlap) / static_cast<double>(pred_tokens.size());
  out.recall = static_cast<double>(overlap) / static_cast<double>(gold_tokens.size());
  out.f1 = (out.precision + out.recall) > 0.0
               ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

std::vector<PrPoint> pr_curve(std::vector<ScoredPair> scored,
                              const std::set<std::string>& positives) {
  if (positives.empty()) throw ContractError("pr_curve: empty positive set");
  std::sort(scored.begin(), scored.end(), [](const ScoredPair& a, const ScoredPair& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.pair_id < b.pair_id;
  });
  std::vector<PrPoint> curve;
  curve.reserve(scored.size());
  long hits = 0;
  for (int t = 1; t <= static_cast<int>(scored.size()); ++t) {
    if (positives.count(scored[static_cast<std::size_t>(t - 1)].pair_id) > 0) ++hits;
    PrPoint p;
    p.t = t;
    p.precision = static_cast<double>(hits) / static_cast<double>(t);
    p.recall = static_cast<double>(hits) / static_cast<double>(positives.size());
    curve.push_back(p);
  }
  return curve;
}

double average_precision(const std::vector<PrPoint>& curve) {
  double ap = 0.0;
  double prev_recall = 0.0;
  for (const PrPoint& p : curve) {
    ap += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return ap;
}

std::string pr_curve_to_csv(const std::vector<PrPoint>& curve) {
  std::ostringstream os;
  os << "t,precision,recall\n";
  for (const PrPoint& p : curve) os << p.t << ',' << p.precision << ',' << p.recall << '\n';
  return os.str();
}

}  // namespace erc
