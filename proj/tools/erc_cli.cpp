#include "erc/chart.hpp"
#include "erc/rng.hpp"
#include "erc/config.hpp"
#include "erc/gradcheck.hpp"
#include "erc/metrics.hpp"
#include "erc/optim.hpp"
#include "erc/synth.hpp"
#include "erc/trainer.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <set>
#include <string>
#include <vector>

namespace {

using erc::CounterRng;
using erc::Mat;
using nlohmann::json;

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw erc::ContractError("cannot write " + path);
  os << text;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw erc::ContractError("cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

void save_vocab(const std::string& path, const std::vector<std::string>& tokens) {
  write_file(path, json(tokens).dump());
}

std::vector<std::string> load_vocab(const std::string& path) {
  return json::parse(read_file(path)).get<std::vector<std::string>>();
}

// Fresh random assignment of the question's anonymized ids to each other.
erc::TextQuestion reanonymize(const erc::TextQuestion& in, CounterRng& rng) {
  std::set<std::string> ids;
  auto note = [&](const std::string& s) {
    if (s.rfind("@ent", 0) == 0) ids.insert(s);
  };
  note(in.entity);
  for (const auto& c : in.candidates) note(c);
  for (const auto& para : in.paragraphs)
    for (const auto& tok : para) note(tok);
  std::vector<std::string> from(ids.begin(), ids.end());
  std::vector<std::string> to = from;
  for (std::size_t i = to.size(); i > 1; --i) std::swap(to[i - 1], to[rng.next_below(i)]);
  std::map<std::string, std::string> rename;
  for (std::size_t i = 0; i < from.size(); ++i) rename[from[i]] = to[i];
  auto rn = [&](const std::string& s) {
    auto it = rename.find(s);
    return it == rename.end() ? s : it->second;
  };
  erc::TextQuestion out = in;
  out.entity = rn(in.entity);
  out.answer = rn(in.answer);
  for (auto& c : out.candidates) c = rn(c);
  for (auto& para : out.paragraphs)
    for (auto& tok : para) tok = rn(tok);
  out.mentions.clear();
  for (const auto& [entity, positions] : in.mentions) out.mentions[rn(entity)] = positions;
  // candidate-order shuffle; a no-op for scoring but part of the augmentation
  for (std::size_t i = out.candidates.size(); i > 1; --i)
    std::swap(out.candidates[i - 1], out.candidates[rng.next_below(i)]);
  return out;
}

erc::ReaderConfig reader_config(const erc::RunConfig& cfg, const erc::ReaderVocab& vocab,
                                const std::vector<erc::TextQuestion>& questions) {
  erc::ReaderConfig rc;
  rc.encoder = cfg.encoder;
  rc.encoder.vocab_size = vocab.size();
  rc.head_dim = cfg.reader.head_dim;
  long need = 0;
  for (const auto& q : questions)
    for (const auto& para : q.paragraphs)
      need = std::max(need, static_cast<long>(para.size()) + 4);
  if (need > rc.encoder.max_positions) rc.encoder.max_positions = static_cast<int>(need);
  return rc;
}

double eval_accuracy(const erc::ReaderModel& model, const erc::ReaderVocab& vocab,
                     const std::vector<erc::TextQuestion>& questions, bool independent,
                     bool oracle) {
  std::vector<std::string> preds, golds;
  for (const auto& tq : questions) {
    erc::Question q = erc::to_question(tq, vocab);
    if (oracle) q = erc::oracle_filter(q);
    preds.push_back(independent ? erc::independent_predict(model, q) : erc::predict(model, q));
    golds.push_back(q.answer);
  }
  return erc::accuracy(preds, golds);
}

struct PairScoreRecord {
  std::string e1, e2;
  double score = 0.0;
  std::string representative;
};

void save_weak_jsonl(const std::string& path, const std::vector<erc::WeakLabeled>& weak) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw erc::ContractError("cannot write " + path);
  for (const auto& w : weak) {
    json j{{"e1", w.pair.e1},          {"e2", w.pair.e2}, {"tokens", w.sentence.tokens},
           {"p1", w.sentence.p1},      {"p2", w.sentence.p2},
           {"labeled", w.labeled},     {"label", w.label}};
    os << j.dump() << '\n';
  }
}

std::vector<erc::WeakLabeled> load_weak_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw erc::ContractError("cannot open " + path);
  std::vector<erc::WeakLabeled> out;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      erc::WeakLabeled w;
      w.pair = {j.at("e1").get<std::string>(), j.at("e2").get<std::string>()};
      w.sentence.tokens = j.at("tokens").get<std::vector<std::string>>();
      w.sentence.p1 = j.at("p1").get<int>();
      w.sentence.p2 = j.at("p2").get<int>();
      w.labeled = j.at("labeled").get<bool>();
      w.label = j.at("label").get<bool>();
      out.push_back(std::move(w));
    } catch (const json::exception& e) {
      throw erc::ContractError(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"explicit-reference reader and relation-extraction toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "RunConfig JSON file")->configurable(false);

  auto load_config = [&](CLI::App*) {
    return config_path.empty() ? erc::RunConfig{} : erc::RunConfig::from_file(config_path);
  };

  // ---- gen-wikihop ----
  auto* gw = app.add_subcommand("gen-wikihop", "generate a synthetic multi-hop question set");
  std::string gw_out;
  erc::WikihopGenConfig gw_cfg;
  bool gw_no_anon = false;
  gw->add_option("--out", gw_out, "output questions JSONL")->required();
  gw->add_option("--count", gw_cfg.count, "number of questions");
  gw->add_option("--hops", gw_cfg.hops, "chain length");
  gw->add_option("--entities-per-tier", gw_cfg.entities_per_tier);
  gw->add_option("--distractors", gw_cfg.num_distractors);
  gw->add_option("--filler", gw_cfg.filler_tokens);
  gw->add_flag("--no-anonymize", gw_no_anon);
  gw->add_option("--seed", gw_cfg.seed);
  gw->callback([&] {
    erc::RunConfig cfg = load_config(gw);
    if (gw->count("--seed") == 0) gw_cfg.seed = cfg.seed;
    gw_cfg.anonymize = !gw_no_anon;
    auto questions = erc::gen_wikihop(gw_cfg);
    erc::save_questions_jsonl(gw_out, questions);
    std::cout << "wrote " << questions.size() << " questions to " << gw_out << "\n";
  });

  // ---- gen-re-corpus ----
  auto* gr = app.add_subcommand("gen-re-corpus", "generate lexicon, charts and sentence corpus");
  std::string gr_dir;
  erc::ReGenConfig gr_cfg;
  gr->add_option("--out-dir", gr_dir, "output directory")->required();
  gr->add_option("--processes", gr_cfg.processes);
  gr->add_option("--structures", gr_cfg.structures);
  gr->add_option("--properties", gr_cfg.properties);
  gr->add_option("--sentences-per-pair", gr_cfg.sentences_per_pair);
  gr->add_option("--signal-rate", gr_cfg.signal_rate);
  gr->add_option("--positive-rate", gr_cfg.positive_rate);
  gr->add_option("--charts", gr_cfg.num_charts);
  gr->add_option("--seed", gr_cfg.seed);
  gr->callback([&] {
    erc::RunConfig cfg = load_config(gr);
    if (gr->count("--seed") == 0) gr_cfg.seed = cfg.seed;
    erc::ReCorpus world = erc::gen_re_corpus(gr_cfg);
    std::filesystem::create_directories(gr_dir);
    world.lexicon.save_tsv(gr_dir + "/lexicon.tsv");
    erc::save_corpus_jsonl(gr_dir + "/corpus.jsonl", world.corpus);
    for (std::size_t i = 0; i < world.charts.size(); ++i)
      world.charts[i].save_tsv(gr_dir + "/chart" + std::to_string(i) + ".tsv");
    std::cout << "wrote " << world.corpus.size() << " sentences, " << world.charts.size()
              << " charts to " << gr_dir << "\n";
  });

  // ---- train-reader ----
  auto* tr = app.add_subcommand("train-reader", "two-pass training of the multi-hop reader");
  std::string tr_questions, tr_dev, tr_checkpoint, tr_mode;
  int tr_epochs = -1;
  std::uint64_t tr_seed = 0;
  tr->add_option("--questions", tr_questions, "training questions JSONL");
  tr->add_option("--dev", tr_dev, "held-out questions JSONL");
  tr->add_option("--checkpoint", tr_checkpoint, "output checkpoint path");
  tr->add_option("--epochs", tr_epochs);
  tr->add_option("--mode", tr_mode, "faithful|accumulate");
  tr->add_option("--seed", tr_seed);
  tr->callback([&] {
    erc::RunConfig cfg = load_config(tr);
    if (tr->count("--seed") > 0) cfg.seed = tr_seed;
    if (!tr_questions.empty()) cfg.paths.questions = tr_questions;
    if (!tr_dev.empty()) cfg.paths.dev_questions = tr_dev;
    if (!tr_checkpoint.empty()) cfg.paths.checkpoint = tr_checkpoint;
    if (tr_epochs >= 0) cfg.reader.epochs = tr_epochs;
    if (!tr_mode.empty()) cfg.reader.train_mode = erc::train_mode_from_name(tr_mode);
    if (cfg.paths.questions.empty())
      throw erc::ContractError("train-reader: no questions path given");
    if (cfg.paths.checkpoint.empty())
      throw erc::ContractError("train-reader: no checkpoint path given");
    std::cout << "resolved config:\n" << cfg.to_json() << "\n";

    auto questions = erc::load_questions_jsonl(cfg.paths.questions);
    auto vocab = erc::ReaderVocab::build(questions);
    erc::ReaderModel model(reader_config(cfg, vocab, questions), cfg.seed);

    erc::Optimizer opt(erc::Optimizer::Kind::Adam, cfg.reader.lr, cfg.reader.weight_decay);
    erc::WarmupSchedule sched{cfg.reader.lr, cfg.reader.warmup_frac,
                              static_cast<long>(cfg.reader.epochs * questions.size())};
    erc::TrainOptions topts;
    topts.mode = cfg.reader.train_mode;
    topts.dropout = cfg.encoder.dropout_p > 0.0;
    topts.seed = cfg.seed;
    long global_step = 0;
    CounterRng aug_rng(cfg.seed, 0xa06);
    for (int epoch = 0; epoch < cfg.reader.epochs; ++epoch) {
      double loss_sum = 0.0;
      long loss_n = 0;
      std::vector<std::size_t> order(questions.size());
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[aug_rng.next_below(i)]);
      for (std::size_t qi : order) {
        erc::TextQuestion tq = questions[qi];
        if (cfg.reader.anonymize && cfg.reader.reanonymize_per_epoch && epoch > 0)
          tq = reanonymize(tq, aug_rng);
        erc::Question q = erc::to_question(tq, vocab);
        opt.set_lr(sched.lr(global_step));
        topts.step = static_cast<std::uint64_t>(global_step);
        erc::MemoryReport rep = erc::train_question(model, q, opt, topts);
        for (double l : rep.losses) loss_sum += l;
        loss_n += static_cast<long>(rep.losses.size());
        ++global_step;
      }
      std::cout << "epoch " << epoch << " mean_loss " << loss_sum / std::max<long>(1, loss_n);
      if (!cfg.paths.dev_questions.empty()) {
        auto dev = erc::load_questions_jsonl(cfg.paths.dev_questions);
        std::cout << " dev_accuracy " << eval_accuracy(model, vocab, dev, false, false);
      }
      std::cout << "\n";
    }
    auto params = model.params();
    erc::save_checkpoint(cfg.paths.checkpoint, params);
    save_vocab(cfg.paths.checkpoint + ".vocab.json", vocab.tokens);
    std::cout << "train_accuracy " << eval_accuracy(model, vocab, questions, false, false)
              << "\n";
    std::cout << "saved checkpoint to " << cfg.paths.checkpoint << "\n";
  });

  // ---- eval-reader ----
  auto* er = app.add_subcommand("eval-reader", "evaluate a reader checkpoint");
  std::string er_questions, er_checkpoint;
  bool er_independent = false, er_oracle = false;
  er->add_option("--questions", er_questions);
  er->add_option("--checkpoint", er_checkpoint);
  er->add_flag("--independent", er_independent, "score each paragraph independently");
  er->add_flag("--oracle", er_oracle, "drop paragraphs not mentioning the answer");
  er->callback([&] {
    erc::RunConfig cfg = load_config(er);
    if (!er_questions.empty()) cfg.paths.questions = er_questions;
    if (!er_checkpoint.empty()) cfg.paths.checkpoint = er_checkpoint;
    if (cfg.paths.questions.empty() || cfg.paths.checkpoint.empty())
      throw erc::ContractError("eval-reader: need questions and checkpoint paths");
    auto questions = erc::load_questions_jsonl(cfg.paths.questions);
    erc::ReaderVocab vocab;
    vocab.tokens = load_vocab(cfg.paths.checkpoint + ".vocab.json");
    for (int i = 0; i < static_cast<int>(vocab.tokens.size()); ++i)
      vocab.index[vocab.tokens[static_cast<std::size_t>(i)]] = i;
    erc::ReaderModel model(reader_config(cfg, vocab, questions), cfg.seed);
    auto params = model.params();
    erc::load_checkpoint(cfg.paths.checkpoint, params);
    json out{{"accuracy", eval_accuracy(model, vocab, questions, er_independent, er_oracle)},
             {"questions", questions.size()},
             {"independent", er_independent},
             {"oracle", er_oracle}};
    std::cout << out.dump(2) << "\n";
    if (!cfg.paths.out.empty()) write_file(cfg.paths.out, out.dump(2) + "\n");
  });

  // ---- memprofile ----
  auto* mp = app.add_subcommand(
      "memprofile", "retained-scalar sweep over paragraph counts: two-pass vs naive");
  std::vector<int> mp_counts = {1, 2, 4, 8};
  int mp_length = 64;
  int mp_candidates = 3;
  std::uint64_t mp_seed = 0;
  mp->add_option("--paragraphs", mp_counts, "paragraph counts to profile")->delimiter(',');
  mp->add_option("--length", mp_length, "tokens per paragraph");
  mp->add_option("--candidates", mp_candidates);
  mp->add_option("--seed", mp_seed);
  mp->callback([&] {
    erc::RunConfig cfg = load_config(mp);
    if (mp->count("--seed") > 0) cfg.seed = mp_seed;
    json rows = json::array();
    std::cout << "K,two_pass_peak,naive_peak,pin_scalars,param_scalars\n";
    for (int paragraphs : mp_counts) {
      erc::Question q =
          erc::synthetic_memprofile_question(paragraphs, mp_length, mp_candidates);
      erc::ReaderConfig rc;
      rc.encoder = cfg.encoder;
      rc.encoder.vocab_size = 8 + mp_candidates;
      rc.encoder.max_positions = mp_length + 8;
      rc.head_dim = cfg.reader.head_dim;
      erc::ReaderModel model(rc, cfg.seed);
      erc::Optimizer opt(erc::Optimizer::Kind::Adam, 0.0);
      erc::TrainOptions topts;
      topts.apply_updates = false;
      erc::MemoryReport two = erc::train_question(model, q, opt, topts);
      erc::MemoryReport naive;
      erc::naive_train_question(model, q, opt, topts, &naive);
      std::cout << paragraphs << ',' << two.peak_retained_scalars << ','
                << naive.peak_retained_scalars << ',' << two.pin_scalars << ','
                << two.param_scalars << "\n";
      rows.push_back({{"paragraphs", paragraphs},
                      {"two_pass_peak", two.peak_retained_scalars},
                      {"naive_peak", naive.peak_retained_scalars},
                      {"pin_scalars", two.pin_scalars},
                      {"param_scalars", two.param_scalars}});
    }
    if (!cfg.paths.out.empty()) write_file(cfg.paths.out, rows.dump(2) + "\n");
  });

  // ---- gradcheck ----
  auto* gc = app.add_subcommand("gradcheck", "finite-difference suite over ops and models");
  std::uint64_t gc_seed = 7;
  gc->add_option("--seed", gc_seed);
  gc->callback([&] {
    bool all_ok = true;
    for (const auto& res : erc::run_all_gradchecks(gc_seed)) {
      std::cout << (res.ok ? "ok   " : "FAIL ") << res.name << " max_rel_err "
                << res.max_rel_err << "\n";
      all_ok = all_ok && res.ok;
    }
    if (!all_ok) throw erc::NumericError("gradcheck failures");
  });

  // ---- weak-label ----
  auto* wl = app.add_subcommand("weak-label", "match mentions and label sentence sets");
  std::string wl_corpus, wl_lexicon, wl_out;
  std::vector<std::string> wl_charts;
  wl->add_option("--corpus", wl_corpus);
  wl->add_option("--lexicon", wl_lexicon);
  wl->add_option("--chart", wl_charts, "training chart TSV (repeatable)");
  wl->add_option("--out", wl_out, "weak-labeled JSONL");
  wl->callback([&] {
    erc::RunConfig cfg = load_config(wl);
    if (!wl_corpus.empty()) cfg.paths.corpus = wl_corpus;
    if (!wl_lexicon.empty()) cfg.paths.lexicon = wl_lexicon;
    if (!wl_charts.empty()) cfg.paths.charts = wl_charts;
    if (!wl_out.empty()) cfg.paths.out = wl_out;
    if (cfg.paths.corpus.empty() || cfg.paths.lexicon.empty() || cfg.paths.out.empty())
      throw erc::ContractError("weak-label: need corpus, lexicon and out paths");
    auto corpus = erc::load_corpus_jsonl(cfg.paths.corpus);
    auto lexicon = erc::EntityLexicon::load_tsv(cfg.paths.lexicon);
    std::vector<erc::TrainingChart> charts;
    for (const auto& p : cfg.paths.charts) charts.push_back(erc::TrainingChart::load_tsv(p));
    auto sets = erc::build_sentence_sets(corpus, lexicon);
    auto weak = erc::weak_label(sets, charts);
    save_weak_jsonl(cfg.paths.out, weak);
    long labeled = 0;
    for (const auto& w : weak) labeled += w.labeled ? 1 : 0;
    std::cout << "wrote " << weak.size() << " sentences (" << labeled << " labeled) to "
              << cfg.paths.out << "\n";
  });

  // ---- train-re ----
  auto* tc = app.add_subcommand("train-re", "train the relation CNN on weak labels");
  std::string tc_weak, tc_checkpoint, tc_embeddings;
  int tc_epochs = -1;
  tc->add_option("--weak", tc_weak, "weak-labeled JSONL from weak-label");
  tc->add_option("--checkpoint", tc_checkpoint);
  tc->add_option("--embeddings", tc_embeddings, "optional word embedding warm start");
  tc->add_option("--epochs", tc_epochs);
  tc->callback([&] {
    erc::RunConfig cfg = load_config(tc);
    if (!tc_weak.empty()) cfg.paths.corpus = tc_weak;
    if (!tc_checkpoint.empty()) cfg.paths.checkpoint = tc_checkpoint;
    if (tc_epochs >= 0) cfg.cnn_run.epochs = tc_epochs;
    if (cfg.paths.corpus.empty() || cfg.paths.checkpoint.empty())
      throw erc::ContractError("train-re: need weak-labeled input and checkpoint paths");
    std::cout << "resolved config:\n" << cfg.to_json() << "\n";
    auto weak = load_weak_jsonl(cfg.paths.corpus);
    std::vector<std::vector<std::string>> sentences;
    for (const auto& w : weak) sentences.push_back(w.sentence.tokens);
    auto vocab = erc::CnnVocab::build(sentences);
    erc::CnnConfig cc = cfg.cnn;
    cc.vocab_size = vocab.size();
    auto instances = erc::instances_from_weak(weak, vocab, cc, false);
    erc::CnnModel model(cc, cfg.seed);
    if (!tc_embeddings.empty()) model.load_word_embeddings(tc_embeddings, vocab.tokens);
    erc::TrainReOptions opts;
    opts.epochs = cfg.cnn_run.epochs;
    opts.batch_size = cfg.cnn_run.batch_size;
    opts.seed = cfg.seed;
    opts.verbose = true;
    erc::train_re(model, instances, opts);
    auto params = model.params();
    erc::save_checkpoint(cfg.paths.checkpoint, params);
    save_vocab(cfg.paths.checkpoint + ".vocab.json", vocab.tokens);
    std::cout << "trained on " << instances.size() << " instances; saved "
              << cfg.paths.checkpoint << "\n";
  });

  // ---- eval-re ----
  auto* ev = app.add_subcommand("eval-re", "pair-level PR curve and scores");
  std::string ev_weak, ev_checkpoint, ev_csv, ev_scores;
  std::vector<std::string> ev_charts;
  ev->add_option("--weak", ev_weak);
  ev->add_option("--checkpoint", ev_checkpoint);
  ev->add_option("--chart", ev_charts, "gold chart TSV (repeatable)");
  ev->add_option("--pr-csv", ev_csv, "output PR curve CSV");
  ev->add_option("--scores-out", ev_scores, "output pair scores JSON");
  ev->callback([&] {
    erc::RunConfig cfg = load_config(ev);
    if (!ev_weak.empty()) cfg.paths.corpus = ev_weak;
    if (!ev_checkpoint.empty()) cfg.paths.checkpoint = ev_checkpoint;
    if (!ev_charts.empty()) cfg.paths.charts = ev_charts;
    if (!ev_csv.empty()) cfg.paths.out = ev_csv;
    if (cfg.paths.corpus.empty() || cfg.paths.checkpoint.empty())
      throw erc::ContractError("eval-re: need weak-labeled input and checkpoint paths");
    auto weak = load_weak_jsonl(cfg.paths.corpus);
    erc::CnnVocab vocab;
    vocab.tokens = load_vocab(cfg.paths.checkpoint + ".vocab.json");
    for (int i = 0; i < static_cast<int>(vocab.tokens.size()); ++i)
      vocab.index[vocab.tokens[static_cast<std::size_t>(i)]] = i;
    erc::CnnConfig cc = cfg.cnn;
    cc.vocab_size = vocab.size();
    erc::CnnModel model(cc, cfg.seed);
    auto params = model.params();
    erc::load_checkpoint(cfg.paths.checkpoint, params);

    std::map<erc::PairKey, std::vector<erc::SentenceInstance>> by_pair;
    std::map<erc::PairKey, std::vector<std::vector<std::string>>> by_pair_text;
    for (const auto& w : weak) {
      std::vector<int> ids;
      for (const auto& t : w.sentence.tokens) ids.push_back(vocab.id(t));
      by_pair[w.pair].push_back(erc::make_instance(cc, ids, w.sentence.p1, w.sentence.p2,
                                                   w.label, w.pair.e1, w.pair.e2));
      by_pair_text[w.pair].push_back(w.sentence.tokens);
    }

    std::set<std::string> positives;
    for (const auto& path : cfg.paths.charts) {
      erc::TrainingChart chart = erc::TrainingChart::load_tsv(path);
      for (const auto& e : chart.edges) {
        auto key = erc::make_pair_key(e.e1, e.e2);
        if (e.relation) positives.insert(key.e1 + "|" + key.e2);
      }
    }

    std::vector<erc::ScoredPair> scored;
    json score_rows = json::array();
    for (const auto& [pair, instances] : by_pair) {
      erc::PairScore ps = erc::pair_probability(model, instances);
      if (!ps.has_evidence) continue;
      scored.push_back({pair.e1 + "|" + pair.e2, ps.probability});
      std::string rep;
      if (ps.representative >= 0)
        for (const auto& t : by_pair_text[pair][static_cast<std::size_t>(ps.representative)]) {
          if (!rep.empty()) rep.push_back(' ');
          rep += t;
        }
      score_rows.push_back(
          {{"e1", pair.e1}, {"e2", pair.e2}, {"score", ps.probability}, {"representative", rep}});
    }
    if (!positives.empty()) {
      auto curve = erc::pr_curve(scored, positives);
      const double ap = erc::average_precision(curve);
      std::cout << "pairs " << scored.size() << " positives " << positives.size()
                << " average_precision " << ap << "\n";
      if (!cfg.paths.out.empty()) write_file(cfg.paths.out, erc::pr_curve_to_csv(curve));
    } else {
      std::cout << "pairs " << scored.size() << " (no gold charts; skipping PR curve)\n";
    }
    if (!ev_scores.empty()) write_file(ev_scores, score_rows.dump(2) + "\n");
  });

  // ---- build-chart ----
  auto* bc = app.add_subcommand("build-chart", "greedy PSPP chart from pair scores");
  std::string bc_scores, bc_lexicon, bc_json, bc_dot;
  std::vector<std::string> bc_targets;
  erc::BuildChartOptions bc_opts;
  bc->add_option("--scores", bc_scores, "pair scores JSON from eval-re")->required();
  bc->add_option("--lexicon", bc_lexicon);
  bc->add_option("--properties,--target", bc_targets, "target properties")
      ->required()
      ->delimiter(',');
  bc->add_option("-n,--processes", bc_opts.num_processes);
  bc->add_option("-m,--structures", bc_opts.num_structures);
  bc->add_flag("--all-structures", bc_opts.all_structures,
               "process capacity over all structures, not just selected ones");
  bc->add_option("--out-json", bc_json)->required();
  bc->add_option("--out-dot", bc_dot);
  bc->callback([&] {
    erc::RunConfig cfg = load_config(bc);
    if (!bc_lexicon.empty()) cfg.paths.lexicon = bc_lexicon;
    if (cfg.paths.lexicon.empty()) throw erc::ContractError("build-chart: no lexicon path");
    auto lexicon = erc::EntityLexicon::load_tsv(cfg.paths.lexicon);
    erc::PsppGraph graph;
    for (const auto& [name, category] : lexicon.entries) graph.add_entity(name, category);
    json rows = json::parse(read_file(bc_scores));
    for (const auto& r : rows) {
      const std::string e1 = r.at("e1").get<std::string>();
      const std::string e2 = r.at("e2").get<std::string>();
      double p = r.at("score").get<double>();
      p = std::min(1.0 - 1e-12, std::max(1e-12, p));
      graph.set_score(e1, e2, p);
      const std::string rep = r.value("representative", std::string{});
      if (!rep.empty()) {
        std::vector<std::string> toks;
        std::istringstream ss(rep);
        std::string tok;
        while (ss >> tok) toks.push_back(tok);
        graph.representative_sentences[erc::make_pair_key(e1, e2)] = toks;
      }
    }
    erc::Chart chart = erc::build_chart(graph, bc_targets, bc_opts);
    write_file(bc_json, erc::chart_to_json(chart) + "\n");
    if (!bc_dot.empty()) write_file(bc_dot, erc::chart_to_dot(chart));
    std::cout << "wrote chart (" << chart.processes.size() << " processes, "
              << chart.structures.size() << " structures"
              << (chart.shortfall ? ", shortfall" : "") << ") to " << bc_json << "\n";
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
