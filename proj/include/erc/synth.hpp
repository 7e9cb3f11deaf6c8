#pragma once

#include "erc/reader.hpp"
#include "erc/relation_cnn.hpp"
#include "erc/weak_supervision.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace erc {

// String-level question exactly as serialized to JSONL.
struct TextQuestion {
  std::string id;
  std::string relation;
  std::string entity;
  std::vector<std::vector<std::string>> paragraphs;
  std::vector<std::string> candidates;
  std::string answer;
  std::map<std::string, std::vector<std::array<int, 2>>> mentions;

  bool operator==(const TextQuestion&) const = default;
};

std::vector<TextQuestion> load_questions_jsonl(const std::string& path);
void save_questions_jsonl(const std::string& path, const std::vector<TextQuestion>& questions);

// Shared string<->id mapping for the reader. Ids 0/1 are the START/SEP
// layout tokens; 2 is the unknown token.
struct ReaderVocab {
  std::vector<std::string> tokens;
  std::map<std::string, int> index;

  static ReaderVocab build(const std::vector<TextQuestion>& questions);
  int id(const std::string& token) const;
  int size() const { return static_cast<int>(tokens.size()); }
};

Question to_question(const TextQuestion& tq, const ReaderVocab& vocab);

// Chained-relation KB over `hops`+1 entity tiers; each question's answer is
// reachable only through its bridging paragraphs.
struct WikihopGenConfig {
  int count = 100;
  int hops = 2;
  int entities_per_tier = 16;
  int num_distractors = 2;
  // Number of documents stating the final-hop fact. With 2+, answering needs
  // cross-paragraph aggregation yet stays learnable at desk scale; the
  // independent-paragraph ablation sees each copy as just another last-hop
  // paragraph.
  int support_copies = 2;
  int filler_tokens = 2;
  bool anonymize = true;
  std::uint64_t seed = 0;
};

std::vector<TextQuestion> gen_wikihop(const WikihopGenConfig& cfg);

// Symbolic oracle: answers derivable from the paragraphs alone by chaining
// the hop relations from the query entity.
std::set<std::string> solve_by_kb(const TextQuestion& q, int hops);

// Synthetic distant-supervision world: lexicon, charts and a corpus whose
// positive pairs co-occur with a trigger token at signal_rate.
struct ReGenConfig {
  int processes = 6;
  int structures = 8;
  int properties = 4;
  int sentences_per_pair = 50;
  double signal_rate = 1.0;
  double positive_rate = 0.35;
  int num_charts = 4;
  std::uint64_t seed = 0;
};

struct ReCorpus {
  EntityLexicon lexicon;
  std::vector<TrainingChart> charts;
  std::vector<std::vector<std::string>> corpus;
};

ReCorpus gen_re_corpus(const ReGenConfig& cfg);

// CNN-side vocabulary (0 = pad, 1 = unk, then sorted corpus tokens).
struct CnnVocab {
  std::vector<std::string> tokens;
  std::map<std::string, int> index;

  static CnnVocab build(const std::vector<std::vector<std::string>>& corpus);
  int id(const std::string& token) const;
  int size() const { return static_cast<int>(tokens.size()); }
};

// Equal-length-paragraph question for the memory sweep: every paragraph
// mentions the query entity and each candidate once.
Question synthetic_memprofile_question(int paragraphs, int paragraph_length, int candidates);

// Converts weakly labeled evidence into padded CNN instances. Unlabeled
// entries are kept only when include_unlabeled is set.
std::vector<SentenceInstance> instances_from_weak(const std::vector<WeakLabeled>& weak,
                                                  const CnnVocab& vocab, const CnnConfig& cfg,
                                                  bool include_unlabeled = false);

}  // namespace erc
