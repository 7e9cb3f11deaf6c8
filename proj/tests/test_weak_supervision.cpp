#include <doctest.h>

#include "erc/tape.hpp"
#include "erc/weak_supervision.hpp"

#include <algorithm>
#include <filesystem>

using namespace erc;

namespace {

EntityLexicon materials_lexicon() {
  EntityLexicon lex;
  lex.add("extrusion", EntityCategory::Process);
  lex.add("annealing", EntityCategory::Process);
  lex.add("grain size", EntityCategory::Structure);
  lex.add("phase", EntityCategory::Structure);
  lex.add("phase transition", EntityCategory::Structure);
  lex.add("strength", EntityCategory::Property);
  return lex;
}

}  // namespace

TEST_CASE("canonicalize lowers case and joins whitespace with underscores") {
  CHECK(canonicalize("Grain Size") == "grain_size");
  CHECK(canonicalize("  phase \t transition ") == "phase_transition");
  CHECK(canonicalize("strength") == "strength");
  CHECK(canonicalize("") == "");
}

TEST_CASE("lexicon: category lookup, duplicates, conflicts") {
  EntityLexicon lex = materials_lexicon();
  CHECK(lex.contains("Phase"));
  CHECK(lex.category("grain size") == EntityCategory::Structure);
  CHECK_THROWS_AS(lex.category("unobtainium"), ContractError);
  lex.add("phase", EntityCategory::Structure);  // same category is fine
  CHECK_THROWS_AS(lex.add("phase", EntityCategory::Property), ContractError);
}

TEST_CASE("category names round-trip; 'processing' aliases process") {
  for (EntityCategory c :
       {EntityCategory::Process, EntityCategory::Structure, EntityCategory::Property})
    CHECK(category_from_name(category_name(c)) == c);
  CHECK(category_from_name("processing") == EntityCategory::Process);
  CHECK_THROWS_AS(category_from_name("material"), ContractError);
}

TEST_CASE("match_mentions prefers the longest span") {
  EntityLexicon lex = materials_lexicon();
  // "phase transition" must match as one mention, not as "phase" plus leftovers
  auto ms = match_mentions({"the", "phase", "transition", "raises", "strength"}, lex);
  REQUIRE(ms.size() == 2);
  CHECK(ms[0].entity == "phase_transition");
  CHECK(ms[0].start == 1);
  CHECK(ms[0].end == 3);
  CHECK(ms[1].entity == "strength");
  CHECK(ms[1].start == 4);
}

TEST_CASE("match_mentions finds repeated and case-variant mentions") {
  EntityLexicon lex = materials_lexicon();
  auto ms = match_mentions({"Phase", "and", "phase", "again"}, lex);
  REQUIRE(ms.size() == 2);
  CHECK(ms[0].entity == "phase");
  CHECK(ms[0].start == 0);
  CHECK(ms[1].start == 2);
}

TEST_CASE("matched spans never overlap") {
  EntityLexicon lex = materials_lexicon();
  // "phase" appears both alone and as a prefix of the longer entity
  auto ms = match_mentions({"phase", "transition", "near", "phase", "boundaries"}, lex);
  for (std::size_t i = 1; i < ms.size(); ++i) CHECK(ms[i].start >= ms[i - 1].end);
  REQUIRE(ms.size() == 2);
  CHECK(ms[0].entity == "phase_transition");
  CHECK(ms[1].entity == "phase");
  CHECK(ms[1].start == 3);
}

TEST_CASE("pair keys are order-normalized") {
  PairKey k1 = make_pair_key("strength", "Grain Size");
  PairKey k2 = make_pair_key("grain size", "strength");
  CHECK(k1 == k2);
  CHECK(k1.e1 == "grain_size");
  CHECK(k1.e2 == "strength");
}

TEST_CASE("build_sentence_sets collects pairwise co-occurrences") {
  EntityLexicon lex = materials_lexicon();
  std::vector<std::vector<std::string>> corpus = {
      {"extrusion", "reduces", "grain", "size"},
      {"grain", "size", "controls", "strength"},
      {"extrusion", "news"},  // single entity: no pair
      {"annealing", "alters", "phase", "and", "strength"},
  };
  SentenceSets sets = build_sentence_sets(corpus, lex);
  CHECK(sets.count(make_pair_key("extrusion", "grain size")) == 1);
  CHECK(sets.count(make_pair_key("grain size", "strength")) == 1);
  CHECK(sets.count(make_pair_key("extrusion", "strength")) == 0);
  // three entities in the last sentence: all three pairs
  CHECK(sets.count(make_pair_key("annealing", "phase")) == 1);
  CHECK(sets.count(make_pair_key("annealing", "strength")) == 1);
  CHECK(sets.count(make_pair_key("phase", "strength")) == 1);
  CHECK(sets.size() == 5);

  const auto& ev = sets.at(make_pair_key("annealing", "strength")).front();
  CHECK(ev.tokens == corpus[3]);
  CHECK(ev.p1 == 0);  // annealing < strength in key order
  CHECK(ev.p2 == 4);
}

TEST_CASE("build_sentence_sets matches a brute-force oracle on random corpora") {
  EntityLexicon lex;
  std::vector<std::string> names = {"e0", "e1", "e2", "e3"};
  for (const auto& n : names) lex.add(n, EntityCategory::Structure);
  std::vector<std::vector<std::string>> corpus;
  for (int s = 0; s < 20; ++s) {
    std::vector<std::string> toks;
    for (int i = 0; i < 6; ++i) {
      const int r = (s * 7 + i * 13) % 9;
      toks.push_back(r < 4 ? names[static_cast<std::size_t>(r)] : "filler" + std::to_string(r));
    }
    corpus.push_back(toks);
  }
  SentenceSets sets = build_sentence_sets(corpus, lex);
  std::map<PairKey, int> expected;
  for (const auto& toks : corpus)
    for (std::size_t a = 0; a < names.size(); ++a)
      for (std::size_t b = a + 1; b < names.size(); ++b) {
        const bool ha = std::find(toks.begin(), toks.end(), names[a]) != toks.end();
        const bool hb = std::find(toks.begin(), toks.end(), names[b]) != toks.end();
        if (ha && hb) expected[make_pair_key(names[a], names[b])] += 1;
      }
  CHECK(sets.size() == expected.size());
  for (const auto& [key, count] : expected)
    CHECK(static_cast<int>(sets.at(key).size()) == count);
}

TEST_CASE("weak_label inherits chart relations and leaves the rest unlabeled") {
  EntityLexicon lex = materials_lexicon();
  std::vector<std::vector<std::string>> corpus = {
      {"extrusion", "reduces", "grain", "size"},
      {"grain", "size", "controls", "strength"},
      {"annealing", "alters", "phase"},
  };
  SentenceSets sets = build_sentence_sets(corpus, lex);
  TrainingChart chart;
  chart.edges.push_back({"extrusion", "grain_size", true});
  chart.edges.push_back({"grain_size", "strength", false});
  auto labeled = weak_label(sets, {chart});
  REQUIRE(labeled.size() == 3);
  std::map<PairKey, const WeakLabeled*> by_pair;
  for (const auto& w : labeled) by_pair[w.pair] = &w;
  CHECK(by_pair.at(make_pair_key("extrusion", "grain size"))->labeled);
  CHECK(by_pair.at(make_pair_key("extrusion", "grain size"))->label);
  CHECK(by_pair.at(make_pair_key("grain size", "strength"))->labeled);
  CHECK_FALSE(by_pair.at(make_pair_key("grain size", "strength"))->label);
  CHECK_FALSE(by_pair.at(make_pair_key("annealing", "phase"))->labeled);
}

TEST_CASE("duplicate chart tuples agree or the labeling aborts") {
  EntityLexicon lex = materials_lexicon();
  SentenceSets sets =
      build_sentence_sets({{"extrusion", "reduces", "grain", "size"}}, lex);
  TrainingChart a, b;
  a.edges.push_back({"extrusion", "grain_size", true});
  b.edges.push_back({"grain_size", "extrusion", true});  // reversed but consistent
  CHECK(weak_label(sets, {a, b}).size() == 1);
  b.edges[0].relation = false;
  CHECK_THROWS_WITH_AS(weak_label(sets, {a, b}), doctest::Contains("contradictory"),
                       ContractError);
}

TEST_CASE("lexicon and chart TSV files round-trip") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path();
  const auto lex_path = (dir / "erc_test_lex.tsv").string();
  const auto chart_path = (dir / "erc_test_chart.tsv").string();

  EntityLexicon lex = materials_lexicon();
  lex.save_tsv(lex_path);
  EntityLexicon back = EntityLexicon::load_tsv(lex_path);
  CHECK(back.entries == lex.entries);

  TrainingChart chart;
  chart.edges.push_back({"extrusion", "grain_size", true});
  chart.edges.push_back({"phase", "strength", false});
  chart.save_tsv(chart_path);
  TrainingChart cback = TrainingChart::load_tsv(chart_path);
  REQUIRE(cback.edges.size() == 2);
  CHECK(cback.edges[0].e1 == "extrusion");
  CHECK(cback.edges[0].relation);
  CHECK_FALSE(cback.edges[1].relation);

  fs::remove(lex_path);
  fs::remove(chart_path);
}

TEST_CASE("corpus JSONL round-trips") {
  namespace fs = std::filesystem;
  const auto path = (fs::temp_directory_path() / "erc_test_corpus.jsonl").string();
  std::vector<std::vector<std::string>> corpus = {{"a", "b"}, {"c"}};
  save_corpus_jsonl(path, corpus);
  CHECK(load_corpus_jsonl(path) == corpus);
  fs::remove(path);
}
