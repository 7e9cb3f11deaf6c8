#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace erc {

enum class EntityCategory { Process, Structure, Property };

std::string category_name(EntityCategory c);
EntityCategory category_from_name(const std::string& name);

// canonical entity form: lowercase, whitespace joined by underscores
std::string canonicalize(const std::string& name);

struct EntityLexicon {
  std::map<std::string, EntityCategory> entries;

  void add(const std::string& name, EntityCategory category);
  bool contains(const std::string& name) const { return entries.count(canonicalize(name)) > 0; }
  EntityCategory category(const std::string& name) const;

  static EntityLexicon load_tsv(const std::string& path);
  void save_tsv(const std::string& path) const;
};

// (e_i, e_j, relation) tuples; process<->structure and structure<->property only
struct TrainingChart {
  struct Edge {
    std::string e1;
    std::string e2;
    bool relation;
  };
  std::vector<Edge> edges;

  static TrainingChart load_tsv(const std::string& path);
  void save_tsv(const std::string& path) const;
};

struct Mention {
  std::string entity;
  int start = 0;  // token index
  int end = 0;    // exclusive
};

// Max-span matching: every returned span equals an entity name, no returned
// span is contained in (or overlaps) a longer matching one.
std::vector<Mention> match_mentions(const std::vector<std::string>& tokens,
                                    const EntityLexicon& lexicon);

struct PairKey {
  std::string e1;
  std::string e2;
  bool operator<(const PairKey& o) const {
    return e1 != o.e1 ? e1 < o.e1 : e2 < o.e2;
  }
  bool operator==(const PairKey& o) const { return e1 == o.e1 && e2 == o.e2; }
};

// normalized so e1 < e2 lexicographically
PairKey make_pair_key(const std::string& a, const std::string& b);

struct SentenceEvidence {
  std::vector<std::string> tokens;
  int p1 = 0;  // first token of the first occurrence of e1 (key order)
  int p2 = 0;
};

using SentenceSets = std::map<PairKey, std::vector<SentenceEvidence>>;

// A sentence joins S_{e_i,e_j} iff both entities have a mention in it.
SentenceSets build_sentence_sets(const std::vector<std::vector<std::string>>& corpus,
                                 const EntityLexicon& lexicon);

struct WeakLabeled {
  PairKey pair;
  SentenceEvidence sentence;
  bool labeled = false;
  bool label = false;
};

// Sentences inherit their pair's chart relation; pairs absent from every
// chart are emitted unlabeled for inference. Contradictory duplicate tuples
// are a hard error.
std::vector<WeakLabeled> weak_label(const SentenceSets& sets,
                                    const std::vector<TrainingChart>& charts);

// JSONL corpus: one {"tokens": [...]} object per line
std::vector<std::vector<std::string>> load_corpus_jsonl(const std::string& path);
void save_corpus_jsonl(const std::string& path, const std::vector<std::vector<std::string>>& corpus);

}  // namespace erc
