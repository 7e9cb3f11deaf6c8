#include <doctest.h>

#include "erc/metrics.hpp"
#include "erc/rng.hpp"
#include "erc/tape.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

using namespace erc;

TEST_CASE("accuracy counts exact matches") {
  std::vector<std::string> gold = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"};
  std::vector<std::string> pred = gold;
  pred[1] = "x";
  pred[4] = "x";
  pred[9] = "x";
  CHECK(accuracy(pred, gold) == doctest::Approx(0.7));
  CHECK(accuracy(gold, gold) == doctest::Approx(1.0));
  CHECK_THROWS_AS(accuracy({}, {}), ContractError);
  CHECK_THROWS_AS(accuracy({"a"}, {"a", "b"}), ContractError);
}

TEST_CASE("token F1 on multisets") {
  TokenF1 same = token_f1({"the", "grain", "size"}, {"the", "grain", "size"});
  CHECK(same.precision == doctest::Approx(1.0));
  CHECK(same.recall == doctest::Approx(1.0));
  CHECK(same.f1 == doctest::Approx(1.0));

  // half the predicted tokens overlap, covering two of three gold tokens
  TokenF1 part = token_f1({"grain", "size", "x", "y"}, {"grain", "size", "tuning"});
  CHECK(part.precision == doctest::Approx(0.5));
  CHECK(part.recall == doctest::Approx(2.0 / 3.0));
  CHECK(part.f1 == doctest::Approx(2.0 * 0.5 * (2.0 / 3.0) / (0.5 + 2.0 / 3.0)));

  // multiset semantics: a repeated predicted token only matches once
  TokenF1 rep = token_f1({"a", "a"}, {"a", "b"});
  CHECK(rep.precision == doctest::Approx(0.5));
  CHECK(rep.recall == doctest::Approx(0.5));

  TokenF1 none = token_f1({"x"}, {"a"});
  CHECK(none.f1 == 0.0);
  CHECK(token_f1({}, {"a"}).f1 == 0.0);  // empty prediction scores zero
  CHECK_THROWS_AS(token_f1({"a"}, {}), ContractError);
}

TEST_CASE("token F1 stays within [0,1] and is symmetric in P/R swap") {
  TokenF1 fwd = token_f1({"a", "b", "c"}, {"b", "c", "d", "e"});
  TokenF1 rev = token_f1({"b", "c", "d", "e"}, {"a", "b", "c"});
  CHECK(fwd.precision == doctest::Approx(rev.recall));
  CHECK(fwd.recall == doctest::Approx(rev.precision));
  CHECK(fwd.f1 == doctest::Approx(rev.f1));
  for (const TokenF1& r : {fwd, rev}) {
    CHECK(r.precision >= 0.0);
    CHECK(r.precision <= 1.0);
    CHECK(r.recall >= 0.0);
    CHECK(r.recall <= 1.0);
  }
}

TEST_CASE("pr_curve on a perfect scorer") {
  std::vector<ScoredPair> scored = {{"p1", 0.9}, {"p2", 0.8}, {"n1", 0.2}, {"n2", 0.1}};
  auto curve = pr_curve(scored, {"p1", "p2"});
  REQUIRE(curve.size() == 4);
  CHECK(curve[0].precision == doctest::Approx(1.0));
  CHECK(curve[0].recall == doctest::Approx(0.5));
  CHECK(curve[1].precision == doctest::Approx(1.0));
  CHECK(curve[1].recall == doctest::Approx(1.0));
  CHECK(curve[3].precision == doctest::Approx(0.5));
  CHECK(curve[3].recall == doctest::Approx(1.0));
  CHECK(average_precision(curve) == doctest::Approx(1.0));
}

TEST_CASE("pr_curve matches a brute-force recomputation on random sets") {
  for (int trial = 0; trial < 100; ++trial) {
    CounterRng rng(static_cast<std::uint64_t>(trial), 0x9aaa);
    const int n = 2 + static_cast<int>(rng.next_below(20));
    std::vector<ScoredPair> scored;
    std::set<std::string> positives;
    for (int i = 0; i < n; ++i) {
      const std::string id = "pair" + std::to_string(i);
      // coarse scores so ties actually occur
      scored.push_back({id, std::floor(rng.next_double() * 4.0) / 4.0});
      if (rng.next_double() < 0.4) positives.insert(id);
    }
    if (positives.empty()) positives.insert(scored.front().pair_id);

    auto curve = pr_curve(scored, positives);
    REQUIRE(static_cast<int>(curve.size()) == n);

    // brute force: sort a copy with the documented tie-break, recount at each t
    std::vector<ScoredPair> order = scored;
    std::sort(order.begin(), order.end(), [](const ScoredPair& a, const ScoredPair& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.pair_id < b.pair_id;
    });
    long hits = 0;
    for (int t = 1; t <= n; ++t) {
      hits += positives.count(order[static_cast<std::size_t>(t - 1)].pair_id) > 0 ? 1 : 0;
      CHECK(curve[static_cast<std::size_t>(t - 1)].t == t);
      CHECK(curve[static_cast<std::size_t>(t - 1)].precision ==
            doctest::Approx(static_cast<double>(hits) / t).epsilon(1e-15));
      CHECK(curve[static_cast<std::size_t>(t - 1)].recall ==
            doctest::Approx(static_cast<double>(hits) / static_cast<double>(positives.size()))
                .epsilon(1e-15));
    }
    // recall is monotone and precision stays in (0,1]
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].recall >= curve[i - 1].recall);
  }
}

TEST_CASE("pr_curve is invariant under monotone score transforms") {
  std::vector<ScoredPair> scored = {{"a", 0.1}, {"b", 0.7}, {"c", 0.3}, {"d", 0.9}};
  std::set<std::string> pos = {"b", "d"};
  auto base = pr_curve(scored, pos);
  std::vector<ScoredPair> warped = scored;
  for (auto& s : warped) s.score = std::exp(3.0 * s.score);  // strictly increasing
  auto curve = pr_curve(warped, pos);
  REQUIRE(curve.size() == base.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    CHECK(curve[i].precision == base[i].precision);
    CHECK(curve[i].recall == base[i].recall);
  }
}

TEST_CASE("equal scores rank by pair id") {
  std::vector<ScoredPair> scored = {{"z", 0.5}, {"a", 0.5}};
  auto curve = pr_curve(scored, {"a"});
  CHECK(curve[0].precision == doctest::Approx(1.0));  // "a" sorts first
}

TEST_CASE("empty positive set is rejected") {
  CHECK_THROWS_AS(pr_curve({{"a", 0.5}}, {}), ContractError);
}

TEST_CASE("CSV rendering has a header and one row per threshold") {
  auto curve = pr_curve({{"a", 0.9}, {"b", 0.1}}, {"a"});
  const std::string csv = pr_curve_to_csv(curve);
  CHECK(csv.rfind("t,precision,recall\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("1,1,1") != std::string::npos);
  CHECK(csv.find("2,0.5,1") != std::string::npos);
}
