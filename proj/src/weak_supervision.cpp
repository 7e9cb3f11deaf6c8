#include "erc/weak_supervision.hpp"

#include "erc/tape.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace erc {

std::string category_name(EntityCategory c) {
  switch (c) {
    case EntityCategory::Process: return "process";
    case EntityCategory::Structure: return "structure";
    case EntityCategory::Property: return "property";
  }
  return "?";
}

EntityCategory category_from_name(const std::string& name) {
  if (name == "process" || name == "processing") return EntityCategory::Process;
  if (name == "structure") return EntityCategory::Structure;
  if (name == "property") return EntityCategory::Property;
  throw ContractError("unknown entity category: " + name);
}

std::string canonicalize(const std::string& name) {
  std::string out;
  out.reserve(name.size());
  bool in_space = false;
  for (char ch : name) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      in_space = !out.empty();
      continue;
    }
    if (in_space) {
      out.push_back('_');
      in_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  return out;
}

void EntityLexicon::add(const std::string& name, EntityCategory cat) {
  const std::string canon = canonicalize(name);
  auto [it, inserted] = entries.emplace(canon, cat);
  if (!inserted && it->second != cat)
    throw ContractError("lexicon: entity " + canon + " listed with two categories");
}

EntityCategory EntityLexicon::category(const std::string& name) const {
  auto it = entries.find(canonicalize(name));
  if (it == entries.end()) throw ContractError("lexicon: unknown entity " + name);
  return it->second;
}

EntityLexicon EntityLexicon::load_tsv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw TapeError("cannot open lexicon file: " + path);
  EntityLexicon lex;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw TapeError("lexicon " + path + " line " + std::to_string(line_no) +
                      ": expected name<TAB>category");
    lex.add(line.substr(0, tab), category_from_name(line.substr(tab + 1)));
  }
  return lex;
}

void EntityLexicon::save_tsv(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw TapeError("cannot open lexicon file for writing: " + path);
  for (const auto& [name, cat] : entries) os << name << '\t' << category_name(cat) << '\n';
}

TrainingChart TrainingChart::load_tsv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw TapeError("cannot open chart file: " + path);
  TrainingChart chart;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string e1, e2, rel;
    if (!std::getline(ls, e1, '\t') || !std::getline(ls, e2, '\t') || !std::getline(ls, rel))
      throw TapeError("chart " + path + " line " + std::to_string(line_no) +
                      ": expected e1<TAB>e2<TAB>true|false");
    if (rel != "true" && rel != "false")
      throw TapeError("chart " + path + " line " + std::to_string(line_no) +
                      ": relation must be true or false");
    chart.edges.push_back({canonicalize(e1), canonicalize(e2), rel == "true"});
  }
  return chart;
}

void TrainingChart::save_tsv(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw TapeError("cannot open chart file for writing: " + path);
  for (const Edge& e : edges)
    os << e.e1 << '\t' << e.e2 << '\t' << (e.relation ? "true" : "false") << '\n';
}

std::vector<Mention> match_mentions(const std::vector<std::string>& tokens,
                                    const EntityLexicon& lexicon) {
  std::size_t max_len = 1;
  for (const auto& [name, cat] : lexicon.entries)
    max_len = std::max(max_len, static_cast<std::size_t>(
                                    std::count(name.begin(), name.end(), '_') + 1));
  struct Cand {
    std::string entity;
    int start, end;
  };
  std::vector<Cand> cands;
  const int n = static_cast<int>(tokens.size());
  for (int start = 0; start < n; ++start) {
    std::string joined;
    for (int end = start + 1; end <= n && end - start <= static_cast<int>(max_len); ++end) {
      if (end - start > 1) joined.push_back('_');
      joined += canonicalize(tokens[static_cast<std::size_t>(end - 1)]);
      if (lexicon.entries.count(joined) > 0) cands.push_back({joined, start, end});
    }
  }
  // longest spans win; on equal length the earlier span wins
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    const int la = a.end - a.start, lb = b.end - b.start;
    if (la != lb) return la > lb;
    return a.start < b.start;
  });
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  std::vector<Mention> out;
  for (const Cand& c : cands) {
    bool free = true;
    for (int i = c.start; i < c.end; ++i)
      if (taken[static_cast<std::size_t>(i)]) free = false;
    if (!free) continue;
    for (int i = c.start; i < c.end; ++i) taken[static_cast<std::size_t>(i)] = true;
    out.push_back({c.entity, c.start, c.end});
  }
  std::sort(out.begin(), out.end(),
            [](const Mention& a, const Mention& b) { return a.start < b.start; });
  return out;
}

PairKey make_pair_key(const std::string& a, const std::string& b) {
  const std::string ca = canonicalize(a), cb = canonicalize(b);
  return ca < cb ? PairKey{ca, cb} : PairKey{cb, ca};
}

SentenceSets build_sentence_sets(const std::vector<std::vector<std::string>>& corpus,
                                 const EntityLexicon& lexicon) {
  SentenceSets sets;
  for (const auto& tokens : corpus) {
    auto mentions = match_mentions(tokens, lexicon);
    // first occurrence per entity
    std::map<std::string, int> first;
    for (const Mention& m : mentions)
      if (first.find(m.entity) == first.end()) first[m.entity] = m.start;
    for (auto a = first.begin(); a != first.end(); ++a) {
      for (auto b = std::next(a); b != first.end(); ++b) {
        PairKey key = make_pair_key(a->first, b->first);
        SentenceEvidence ev;
        ev.tokens = tokens;
        ev.p1 = key.e1 == a->first ? a->second : b->second;
        ev.p2 = key.e1 == a->first ? b->second : a->second;
        sets[key].push_back(std::move(ev));
      }
    }
  }
  return sets;
}

std::vector<WeakLabeled> weak_label(const SentenceSets& sets,
                                    const std::vector<TrainingChart>& charts) {
  std::map<PairKey, bool> labels;
  for (const TrainingChart& chart : charts) {
    for (const auto& e : chart.edges) {
      PairKey key = make_pair_key(e.e1, e.e2);
      auto [it, inserted] = labels.emplace(key, e.relation);
      if (!inserted && it->second != e.relation)
        throw ContractError("contradictory chart tuples for pair (" + key.e1 + ", " + key.e2 +
                            ")");
    }
  }
  std::vector<WeakLabeled> out;
  for (const auto& [pair, sentences] : sets) {
    auto it = labels.find(pair);
    for (const SentenceEvidence& ev : sentences) {
      WeakLabeled w;
      w.pair = pair;
      w.sentence = ev;
      if (it != labels.end()) {
        w.labeled = true;
        w.label = it->second;
      }
      out.push_back(std::move(w));
    }
  }
  return out;
}

std::vector<std::vector<std::string>> load_corpus_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw TapeError("cannot open corpus file: " + path);
  std::vector<std::vector<std::string>> corpus;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw TapeError("corpus " + path + " line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.contains("tokens") || !j["tokens"].is_array())
      throw TapeError("corpus " + path + " line " + std::to_string(line_no) +
                      ": missing tokens field");
    corpus.push_back(j["tokens"].get<std::vector<std::string>>());
  }
  return corpus;
}

void save_corpus_jsonl(const std::string& path,
                       const std::vector<std::vector<std::string>>& corpus) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw TapeError("cannot open corpus file for writing: " + path);
  for (const auto& tokens : corpus) {
    nlohmann::json j;
    j["tokens"] = tokens;
    os << j.dump() << '\n';
  }
}

}  // namespace erc
