#include "erc/synth.hpp"

#include "erc/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

namespace erc {

std::vector<TextQuestion> load_questions_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw TapeError("cannot open question file: " + path);
  std::vector<TextQuestion> out;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw TapeError("questions " + path + " line " + std::to_string(line_no) + ": " + e.what());
    }
    TextQuestion q;
    try {
      q.id = j.at("id").get<std::string>();
      q.relation = j.at("query").at("relation").get<std::string>();
      q.entity = j.at("query").at("entity").get<std::string>();
      q.paragraphs = j.at("paragraphs").get<std::vector<std::vector<std::string>>>();
      q.candidates = j.at("candidates").get<std::vector<std::string>>();
      q.answer = j.at("answer").get<std::string>();
      for (const auto& [entity, positions] : j.at("mentions").items()) {
        std::vector<std::array<int, 2>> ps;
        for (const auto& p : positions) ps.push_back({p[0].get<int>(), p[1].get<int>()});
        q.mentions[entity] = std::move(ps);
      }
    } catch (const nlohmann::json::exception& e) {
      throw TapeError("questions " + path + " line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(std::move(q));
  }
  return out;
}

void save_questions_jsonl(const std::string& path, const std::vector<TextQuestion>& questions) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw TapeError("cannot open question file for writing: " + path);
  for (const TextQuestion& q : questions) {
    nlohmann::json j;
    j["id"] = q.id;
    j["query"] = {{"relation", q.relation}, {"entity", q.entity}};
    j["paragraphs"] = q.paragraphs;
    j["candidates"] = q.candidates;
    j["answer"] = q.answer;
    nlohmann::json mentions = nlohmann::json::object();
    for (const auto& [entity, positions] : q.mentions) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& [k, t] : positions) arr.push_back({k, t});
      mentions[entity] = std::move(arr);
    }
    j["mentions"] = std::move(mentions);
    os << j.dump() << '\n';
  }
}

ReaderVocab ReaderVocab::build(const std::vector<TextQuestion>& questions) {
  std::set<std::string> seen;
  for (const TextQuestion& q : questions) {
    seen.insert(q.relation);
    seen.insert(q.entity);
    for (const auto& para : q.paragraphs) seen.insert(para.begin(), para.end());
    seen.insert(q.candidates.begin(), q.candidates.end());
  }
  ReaderVocab v;
  v.tokens = {"[START]", "[SEP]", "<unk>"};
  for (const std::string& t : seen) v.tokens.push_back(t);
  for (int i = 0; i < static_cast<int>(v.tokens.size()); ++i)
    v.index[v.tokens[static_cast<std::size_t>(i)]] = i;
  return v;
}

int ReaderVocab::id(const std::string& token) const {
  auto it = index.find(token);
  return it == index.end() ? 2 : it->second;
}

Question to_question(const TextQuestion& tq, const ReaderVocab& vocab) {
  Question q;
  q.id = tq.id;
  q.query_relation = tq.relation;
  q.query_entity = tq.entity;
  q.query_tokens = {vocab.id(tq.relation), vocab.id(tq.entity)};
  for (const auto& para : tq.paragraphs) {
    std::vector<int> ids;
    ids.reserve(para.size());
    for (const std::string& t : para) ids.push_back(vocab.id(t));
    q.paragraphs.push_back(std::move(ids));
  }
  q.candidates = tq.candidates;
  q.answer = tq.answer;
  q.mentions = tq.mentions;
  q.validate();
  return q;
}

namespace {

const std::vector<std::string> kFillerPool = {"the",  "of",    "report", "notes", "study",
                                              "early", "later", "again",  "also",  "then"};

std::string tier_entity(int tier, int index) {
  return "t" + std::to_string(tier) + "_e" + std::to_string(index);
}

std::string hop_relation(int hop) { return "rel" + std::to_string(hop); }

template <typename T>
void shuffle_vec(std::vector<T>& v, CounterRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.next_below(i)]);
}

}  // namespace

std::vector<TextQuestion> gen_wikihop(const WikihopGenConfig& cfg) {
  if (cfg.hops < 1) throw ContractError("gen_wikihop: hops must be >= 1");
  if (cfg.entities_per_tier < cfg.num_distractors + 2)
    throw ContractError("gen_wikihop: KB too small for requested distractor count");
  const int n = cfg.entities_per_tier;

  // one permutation per hop defines the KB mapping tier h -> tier h+1
  std::vector<std::vector<int>> perm(static_cast<std::size_t>(cfg.hops));
  CounterRng kb_rng(cfg.seed, 0x6b6b);
  for (int h = 0; h < cfg.hops; ++h) {
    perm[static_cast<std::size_t>(h)].resize(static_cast<std::size_t>(n));
    std::iota(perm[static_cast<std::size_t>(h)].begin(), perm[static_cast<std::size_t>(h)].end(), 0);
    shuffle_vec(perm[static_cast<std::size_t>(h)], kb_rng);
  }

  std::vector<TextQuestion> out;
  out.reserve(static_cast<std::size_t>(cfg.count));
  for (int qi = 0; qi < cfg.count; ++qi) {
    CounterRng rng(cfg.seed, 0x9e57, static_cast<std::uint64_t>(qi));
    TextQuestion q;
    q.id = "q" + std::to_string(qi);
    q.relation = "chain" + std::to_string(cfg.hops);

    std::vector<int> chain(static_cast<std::size_t>(cfg.hops) + 1);
    chain[0] = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
    for (int h = 0; h < cfg.hops; ++h)
      chain[static_cast<std::size_t>(h) + 1] =
          perm[static_cast<std::size_t>(h)][static_cast<std::size_t>(chain[static_cast<std::size_t>(h)])];

    auto make_para = [&](const std::string& subj, int hop, const std::string& obj) {
      std::vector<std::string> para = {subj, hop_relation(hop), obj};
      for (int f = 0; f < cfg.filler_tokens; ++f)
        para.push_back(kFillerPool[rng.next_below(kFillerPool.size())]);
      return para;
    };

    if (cfg.support_copies < 1) throw ContractError("gen_wikihop: support_copies must be >= 1");
    std::vector<std::vector<std::string>> paragraphs;
    for (int h = 0; h < cfg.hops; ++h) {
      const int copies = h == cfg.hops - 1 ? cfg.support_copies : 1;
      for (int rep = 0; rep < copies; ++rep)
        paragraphs.push_back(make_para(tier_entity(h, chain[static_cast<std::size_t>(h)]), h,
                                       tier_entity(h + 1, chain[static_cast<std::size_t>(h) + 1])));
    }

    // distractors: other last-hop tuples whose objects become candidates
    const int last = cfg.hops - 1;
    std::vector<int> others;
    for (int i = 0; i < n; ++i)
      if (i != chain[static_cast<std::size_t>(last)]) others.push_back(i);
    shuffle_vec(others, rng);
    std::vector<std::string> candidates = {tier_entity(cfg.hops, chain.back())};
    for (int d = 0; d < cfg.num_distractors; ++d) {
      const int b = others[static_cast<std::size_t>(d)];
      const int c = perm[static_cast<std::size_t>(last)][static_cast<std::size_t>(b)];
      paragraphs.push_back(make_para(tier_entity(last, b), last, tier_entity(cfg.hops, c)));
      candidates.push_back(tier_entity(cfg.hops, c));
    }

    shuffle_vec(paragraphs, rng);
    shuffle_vec(candidates, rng);

    q.entity = tier_entity(0, chain[0]);
    q.answer = tier_entity(cfg.hops, chain.back());
    q.paragraphs = std::move(paragraphs);
    q.candidates = std::move(candidates);

    if (cfg.anonymize) {
      // fresh, shuffled @ent assignment per question
      std::set<std::string> entities;
      entities.insert(q.entity);
      entities.insert(q.candidates.begin(), q.candidates.end());
      for (const auto& para : q.paragraphs)
        for (const std::string& tok : para)
          if (tok.front() == 't' && tok.find("_e") != std::string::npos) entities.insert(tok);
      std::vector<std::string> ordered(entities.begin(), entities.end());
      shuffle_vec(ordered, rng);
      std::map<std::string, std::string> rename;
      for (int i = 0; i < static_cast<int>(ordered.size()); ++i)
        rename[ordered[static_cast<std::size_t>(i)]] = "@ent" + std::to_string(i);
      auto rn = [&](std::string& s) {
        auto it = rename.find(s);
        if (it != rename.end()) s = it->second;
      };
      rn(q.entity);
      rn(q.answer);
      for (std::string& c : q.candidates) rn(c);
      for (auto& para : q.paragraphs)
        for (std::string& tok : para) rn(tok);
    }

    // mention index over candidates and the query entity
    std::set<std::string> tracked(q.candidates.begin(), q.candidates.end());
    tracked.insert(q.entity);
    for (int k = 0; k < static_cast<int>(q.paragraphs.size()); ++k) {
      const auto& para = q.paragraphs[static_cast<std::size_t>(k)];
      for (int t = 0; t < static_cast<int>(para.size()); ++t)
        if (tracked.count(para[static_cast<std::size_t>(t)]) > 0)
          q.mentions[para[static_cast<std::size_t>(t)]].push_back({k, t});
    }
    out.push_back(std::move(q));
  }
  return out;
}

std::set<std::string> solve_by_kb(const TextQuestion& q, int hops) {
  // triples are (token before, relN, token after)
  std::vector<std::array<std::string, 3>> triples;
  for (const auto& para : q.paragraphs) {
    for (int i = 1; i + 1 < static_cast<int>(para.size()); ++i) {
      const std::string& tok = para[static_cast<std::size_t>(i)];
      if (tok.rfind("rel", 0) == 0)
        triples.push_back({para[static_cast<std::size_t>(i) - 1], tok,
                           para[static_cast<std::size_t>(i) + 1]});
    }
  }
  std::set<std::string> frontier = {q.entity};
  for (int h = 0; h < hops; ++h) {
    std::set<std::string> next;
    const std::string rel = hop_relation(h);
    for (const auto& [s, r, o] : triples)
      if (r == rel && frontier.count(s) > 0) next.insert(o);
    frontier = std::move(next);
  }
  return frontier;
}

ReCorpus gen_re_corpus(const ReGenConfig& cfg) {
  if (cfg.num_charts < 1) throw ContractError("gen_re_corpus: need at least one chart");
  ReCorpus out;
  std::vector<std::string> procs, structs, props;
  std::map<std::string, std::vector<std::string>> surface;  // entity -> tokens in text
  for (int i = 0; i < cfg.processes; ++i) {
    procs.push_back("proc" + std::to_string(i));
    surface[procs.back()] = {procs.back()};
    out.lexicon.add(procs.back(), EntityCategory::Process);
  }
  for (int i = 0; i < cfg.structures; ++i) {
    if (i % 4 == 0) {
      // a few multi-word names keep max-span matching honest
      structs.push_back("fine_grain" + std::to_string(i));
      surface[structs.back()] = {"fine", "grain" + std::to_string(i)};
    } else {
      structs.push_back("struct" + std::to_string(i));
      surface[structs.back()] = {structs.back()};
    }
    out.lexicon.add(structs.back(), EntityCategory::Structure);
  }
  for (int i = 0; i < cfg.properties; ++i) {
    props.push_back("prop" + std::to_string(i));
    surface[props.back()] = {props.back()};
    out.lexicon.add(props.back(), EntityCategory::Property);
  }

  out.charts.resize(static_cast<std::size_t>(cfg.num_charts));
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& p : procs)
    for (const auto& s : structs) pairs.emplace_back(p, s);
  for (const auto& s : structs)
    for (const auto& p : props) pairs.emplace_back(s, p);

  CounterRng rng(cfg.seed, 0x4ec04e);
  std::size_t pair_idx = 0;
  for (const auto& [e1, e2] : pairs) {
    const bool positive = rng.next_double() < cfg.positive_rate;
    const std::size_t chart = rng.next_below(static_cast<std::uint64_t>(cfg.num_charts));
    out.charts[chart].edges.push_back({canonicalize(e1), canonicalize(e2), positive});
    const int count = cfg.sentences_per_pair / 2 +
                      static_cast<int>(rng.next_below(
                          static_cast<std::uint64_t>(cfg.sentences_per_pair) + 1));
    for (int s = 0; s < count; ++s) {
      const bool trigger = positive && rng.next_double() < cfg.signal_rate;
      const bool swap = rng.next_double() < 0.5;
      const auto& first = surface[swap ? e2 : e1];
      const auto& second = surface[swap ? e1 : e2];
      std::vector<std::string> sent;
      sent.push_back(kFillerPool[rng.next_below(kFillerPool.size())]);
      sent.push_back(kFillerPool[rng.next_below(kFillerPool.size())]);
      sent.insert(sent.end(), first.begin(), first.end());
      sent.push_back(trigger ? "causes" : "and");
      sent.insert(sent.end(), second.begin(), second.end());
      sent.push_back(kFillerPool[rng.next_below(kFillerPool.size())]);
      out.corpus.push_back(std::move(sent));
    }
    ++pair_idx;
  }
  (void)pair_idx;
  return out;
}

CnnVocab CnnVocab::build(const std::vector<std::vector<std::string>>& corpus) {
  std::set<std::string> seen;
  for (const auto& sent : corpus) seen.insert(sent.begin(), sent.end());
  CnnVocab v;
  v.tokens = {"<pad>", "<unk>"};
  for (const std::string& t : seen) v.tokens.push_back(t);
  for (int i = 0; i < static_cast<int>(v.tokens.size()); ++i)
    v.index[v.tokens[static_cast<std::size_t>(i)]] = i;
  return v;
}

int CnnVocab::id(const std::string& token) const {
  auto it = index.find(token);
  return it == index.end() ? kCnnUnkToken : it->second;
}

Question synthetic_memprofile_question(int paragraphs, int paragraph_length, int candidates) {
  if (paragraphs < 1 || candidates < 1 || paragraph_length < candidates + 1)
    throw ContractError("synthetic_memprofile_question: degenerate sizes");
  Question q;
  q.id = "memprofile";
  q.query_relation = "rel";
  q.query_entity = "@query";
  q.query_tokens = {2, 3};
  std::vector<int> para(static_cast<std::size_t>(paragraph_length), 2);
  para[0] = 3;  // query entity token
  for (int i = 0; i < candidates; ++i) para[static_cast<std::size_t>(1 + i)] = 4 + i;
  for (int k = 0; k < paragraphs; ++k) {
    q.paragraphs.push_back(para);
    q.mentions["@query"].push_back({k, 0});
    for (int i = 0; i < candidates; ++i)
      q.mentions["@ent" + std::to_string(i)].push_back({k, 1 + i});
  }
  for (int i = 0; i < candidates; ++i) q.candidates.push_back("@ent" + std::to_string(i));
  q.answer = "@ent0";
  q.validate();
  return q;
}

std::vector<SentenceInstance> instances_from_weak(const std::vector<WeakLabeled>& weak,
                                                  const CnnVocab& vocab, const CnnConfig& cfg,
                                                  bool include_unlabeled) {
  std::vector<SentenceInstance> out;
  for (const WeakLabeled& w : weak) {
    if (!w.labeled && !include_unlabeled) continue;
    std::vector<int> ids;
    ids.reserve(w.sentence.tokens.size());
    for (const std::string& t : w.sentence.tokens) ids.push_back(vocab.id(t));
    SentenceInstance inst = make_instance(cfg, ids, w.sentence.p1, w.sentence.p2, w.label,
                                          w.pair.e1, w.pair.e2);
    inst.labeled = w.labeled;
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace erc
