#include <doctest.h>

#include "erc/synth.hpp"
#include "erc/tape.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

using namespace erc;

TEST_CASE("gen_wikihop is bitwise deterministic in the seed") {
  WikihopGenConfig cfg;
  cfg.count = 12;
  cfg.seed = 5;
  auto a = gen_wikihop(cfg);
  auto b = gen_wikihop(cfg);
  CHECK(a == b);
  cfg.seed = 6;
  CHECK(gen_wikihop(cfg) != a);
}

TEST_CASE("one-hop questions are solved exactly by the symbolic oracle") {
  WikihopGenConfig cfg;
  cfg.count = 30;
  cfg.hops = 1;
  cfg.anonymize = false;
  for (const TextQuestion& q : gen_wikihop(cfg)) {
    CHECK(solve_by_kb(q, 1) == std::set<std::string>{q.answer});
    CHECK(std::count(q.candidates.begin(), q.candidates.end(), q.answer) == 1);
  }
}

TEST_CASE("two-hop answers are derivable, and only through the bridge") {
  WikihopGenConfig cfg;
  cfg.count = 30;
  cfg.hops = 2;
  cfg.anonymize = false;
  for (const TextQuestion& q : gen_wikihop(cfg)) {
    CHECK(solve_by_kb(q, 2) == std::set<std::string>{q.answer});
    // drop the first-hop paragraphs: the chain cannot start, nothing derives
    TextQuestion masked = q;
    std::erase_if(masked.paragraphs, [](const std::vector<std::string>& para) {
      return std::find(para.begin(), para.end(), "rel0") != para.end();
    });
    CHECK(solve_by_kb(masked, 2).empty());
  }
}

TEST_CASE("anonymization renames entities consistently") {
  WikihopGenConfig cfg;
  cfg.count = 20;
  cfg.hops = 2;
  for (const TextQuestion& q : gen_wikihop(cfg)) {
    CHECK(q.entity.rfind("@ent", 0) == 0);
    for (const std::string& c : q.candidates) CHECK(c.rfind("@ent", 0) == 0);
    CHECK(std::count(q.candidates.begin(), q.candidates.end(), q.answer) == 1);
    // the rename is a bijection, so the chain still resolves symbolically
    CHECK(solve_by_kb(q, 2) == std::set<std::string>{q.answer});
  }
}

TEST_CASE("mention index points at real occurrences and misses none") {
  WikihopGenConfig cfg;
  cfg.count = 15;
  for (const TextQuestion& q : gen_wikihop(cfg)) {
    std::set<std::string> tracked(q.candidates.begin(), q.candidates.end());
    tracked.insert(q.entity);
    long listed = 0;
    for (const auto& [entity, positions] : q.mentions) {
      CHECK(tracked.count(entity) == 1);
      for (const auto& [k, t] : positions) {
        REQUIRE(k < static_cast<int>(q.paragraphs.size()));
        REQUIRE(t < static_cast<int>(q.paragraphs[static_cast<std::size_t>(k)].size()));
        CHECK(q.paragraphs[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)] == entity);
      }
      listed += static_cast<long>(positions.size());
    }
    long actual = 0;
    for (const auto& para : q.paragraphs)
      for (const std::string& tok : para) actual += tracked.count(tok) > 0 ? 1 : 0;
    CHECK(listed == actual);
  }
}

TEST_CASE("the final-hop fact is stated by support_copies paragraphs") {
  WikihopGenConfig cfg;
  cfg.count = 10;
  cfg.hops = 2;
  cfg.support_copies = 3;
  cfg.anonymize = false;
  for (const TextQuestion& q : gen_wikihop(cfg)) {
    long statements = 0;
    for (const auto& para : q.paragraphs)
      for (std::size_t i = 1; i + 1 < para.size(); ++i)
        if (para[i] == "rel1" && para[i + 1] == q.answer) ++statements;
    CHECK(statements == 3);
  }
}

TEST_CASE("questions round-trip through JSONL") {
  WikihopGenConfig cfg;
  cfg.count = 8;
  auto questions = gen_wikihop(cfg);
  const auto path = (std::filesystem::temp_directory_path() / "erc_test_q.jsonl").string();
  save_questions_jsonl(path, questions);
  CHECK(load_questions_jsonl(path) == questions);
  std::filesystem::remove(path);
}

TEST_CASE("reader vocab reserves layout tokens and maps unknowns to <unk>") {
  auto questions = gen_wikihop({});
  ReaderVocab vocab = ReaderVocab::build(questions);
  CHECK(vocab.tokens[0] == "[START]");
  CHECK(vocab.tokens[1] == "[SEP]");
  CHECK(vocab.tokens[2] == "<unk>");
  CHECK(vocab.id("never-generated-token") == 2);
  CHECK(vocab.id(questions[0].relation) >= 3);
  // every converted question passes its own validation
  for (const TextQuestion& tq : questions) (void)to_question(tq, vocab);
}

TEST_CASE("gen_re_corpus: trigger appears iff the signal is on") {
  ReGenConfig cfg;
  cfg.processes = 3;
  cfg.structures = 4;
  cfg.properties = 2;
  cfg.sentences_per_pair = 6;
  ReCorpus pos = gen_re_corpus(cfg);
  long with_trigger = 0;
  for (const auto& sent : pos.corpus)
    with_trigger += std::find(sent.begin(), sent.end(), "causes") != sent.end() ? 1 : 0;
  CHECK(with_trigger > 0);

  cfg.signal_rate = 0.0;
  ReCorpus flat = gen_re_corpus(cfg);
  for (const auto& sent : flat.corpus)
    CHECK(std::find(sent.begin(), sent.end(), "causes") == sent.end());
}

TEST_CASE("gen_re_corpus covers every admissible pair across its charts") {
  ReGenConfig cfg;
  cfg.processes = 3;
  cfg.structures = 4;
  cfg.properties = 2;
  cfg.sentences_per_pair = 4;
  ReCorpus rc = gen_re_corpus(cfg);
  long edges = 0;
  for (const TrainingChart& c : rc.charts) edges += static_cast<long>(c.edges.size());
  CHECK(edges == 3 * 4 + 4 * 2);  // process x structure plus structure x property
  // every chart entity is in the lexicon with a consistent category
  for (const TrainingChart& c : rc.charts)
    for (const auto& e : c.edges) {
      CHECK(rc.lexicon.contains(e.e1));
      CHECK(rc.lexicon.contains(e.e2));
    }
  // weak labeling of its own corpus agrees with the generating charts
  SentenceSets sets = build_sentence_sets(rc.corpus, rc.lexicon);
  auto weak = weak_label(sets, rc.charts);
  for (const auto& w : weak) CHECK(w.labeled);
}

TEST_CASE("cnn vocab and weak-instance conversion") {
  ReGenConfig cfg;
  cfg.processes = 2;
  cfg.structures = 4;
  cfg.properties = 1;
  cfg.sentences_per_pair = 4;
  ReCorpus rc = gen_re_corpus(cfg);
  CnnVocab vocab = CnnVocab::build(rc.corpus);
  CHECK(vocab.tokens[0] == "<pad>");
  CHECK(vocab.tokens[1] == "<unk>");
  CHECK(vocab.id("no-such-token") == kCnnUnkToken);

  SentenceSets sets = build_sentence_sets(rc.corpus, rc.lexicon);
  auto weak = weak_label(sets, rc.charts);
  CnnConfig cnn_cfg;
  cnn_cfg.pad_length = 20;
  cnn_cfg.vocab_size = vocab.size();
  auto instances = instances_from_weak(weak, vocab, cnn_cfg);
  REQUIRE(instances.size() == weak.size());  // fully labeled corpus keeps everything
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    CHECK(static_cast<int>(inst.tokens.size()) == cnn_cfg.pad_length);
    // mention positions still point at the right surface tokens
    const std::string& tok1 = weak[i].sentence.tokens[static_cast<std::size_t>(weak[i].sentence.p1)];
    CHECK(inst.tokens[static_cast<std::size_t>(inst.p1)] == vocab.id(tok1));
    CHECK(inst.label == weak[i].label);
  }

  // an unlabeled entry is dropped unless explicitly requested
  WeakLabeled extra;
  extra.pair = make_pair_key("proc0", "struct1");
  extra.sentence.tokens = {"proc0", "and", "struct1"};
  extra.sentence.p1 = 0;
  extra.sentence.p2 = 2;
  auto some = instances_from_weak({extra}, vocab, cnn_cfg);
  CHECK(some.empty());
  auto kept = instances_from_weak({extra}, vocab, cnn_cfg, true);
  REQUIRE(kept.size() == 1);
  CHECK_FALSE(kept[0].labeled);
}

TEST_CASE("memprofile questions scale only in paragraph count") {
  Question q4 = synthetic_memprofile_question(4, 16, 3);
  CHECK(q4.paragraphs.size() == 4);
  for (const auto& para : q4.paragraphs) CHECK(para.size() == 16);
  CHECK(q4.candidates.size() == 3);
  CHECK(q4.mentions.at("@query").size() == 4);
  CHECK(q4.mentions.at("@ent2").size() == 4);
  Question q8 = synthetic_memprofile_question(8, 16, 3);
  CHECK(q8.paragraphs[0] == q4.paragraphs[0]);
  CHECK_THROWS_AS(synthetic_memprofile_question(1, 2, 3), ContractError);
}
