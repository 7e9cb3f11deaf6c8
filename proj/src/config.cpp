#include "erc/config.hpp"

#include "erc/tape.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace erc {

TrainMode train_mode_from_name(const std::string& name) {
  if (name == "faithful") return TrainMode::Faithful;
  if (name == "accumulate") return TrainMode::Accumulate;
  throw ContractError("train_mode must be \"faithful\" or \"accumulate\", got \"" + name + "\"");
}

std::string train_mode_name(TrainMode mode) {
  return mode == TrainMode::Faithful ? "faithful" : "accumulate";
}

namespace {

using nlohmann::json;

// Pulls a field if present; complains about type mismatches by name.
struct Section {
  const json& obj;
  std::string where;
  std::set<std::string> seen;

  Section(const json& o, std::string w) : obj(o), where(std::move(w)) {
    if (!obj.is_object()) throw ContractError(where + ": expected a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen.insert(key);
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ContractError(where + "." + key + ": " + e.what());
    }
  }

  void finish() const {
    for (const auto& [key, value] : obj.items())
      if (seen.count(key) == 0)
        throw ContractError(where + ": unknown key \"" + key + "\"");
  }
};

}  // namespace

RunConfig RunConfig::from_json(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ContractError(source + ": " + e.what());
  }
  RunConfig cfg;
  Section root(j, source);
  root.get("seed", cfg.seed);

  root.seen.insert("encoder");
  if (j.contains("encoder")) {
    Section s(j.at("encoder"), source + ".encoder");
    s.get("num_layers", cfg.encoder.num_layers);
    s.get("model_dim", cfg.encoder.model_dim);
    s.get("num_heads", cfg.encoder.num_heads);
    s.get("ffn_dim", cfg.encoder.ffn_dim);
    s.get("max_positions", cfg.encoder.max_positions);
    s.get("vocab_size", cfg.encoder.vocab_size);
    s.get("dropout", cfg.encoder.dropout_p);
    s.finish();
  }

  root.seen.insert("reader");
  if (j.contains("reader")) {
    Section s(j.at("reader"), source + ".reader");
    s.get("head_dim", cfg.reader.head_dim);
    s.get("epochs", cfg.reader.epochs);
    s.get("lr", cfg.reader.lr);
    s.get("weight_decay", cfg.reader.weight_decay);
    s.get("warmup_frac", cfg.reader.warmup_frac);
    s.get("anonymize", cfg.reader.anonymize);
    s.get("reanonymize_per_epoch", cfg.reader.reanonymize_per_epoch);
    std::string mode = train_mode_name(cfg.reader.train_mode);
    s.get("train_mode", mode);
    cfg.reader.train_mode = train_mode_from_name(mode);
    s.finish();
  }

  root.seen.insert("cnn");
  if (j.contains("cnn")) {
    Section s(j.at("cnn"), source + ".cnn");
    s.get("pad_length", cfg.cnn.pad_length);
    s.get("max_distance", cfg.cnn.max_distance);
    s.get("residual_depth", cfg.cnn.residual_depth);
    s.get("window", cfg.cnn.window);
    s.get("word_dim", cfg.cnn.word_dim);
    s.get("pos_dim", cfg.cnn.pos_dim);
    s.get("channels", cfg.cnn.channels);
    s.get("dropout", cfg.cnn.dropout_p);
    s.get("l2", cfg.cnn.l2);
    s.get("learning_rate", cfg.cnn.learning_rate);
    s.get("epochs", cfg.cnn_run.epochs);
    s.get("batch_size", cfg.cnn_run.batch_size);
    s.finish();
  }

  root.seen.insert("paths");
  if (j.contains("paths")) {
    Section s(j.at("paths"), source + ".paths");
    s.get("questions", cfg.paths.questions);
    s.get("dev_questions", cfg.paths.dev_questions);
    s.get("corpus", cfg.paths.corpus);
    s.get("lexicon", cfg.paths.lexicon);
    s.get("charts", cfg.paths.charts);
    s.get("checkpoint", cfg.paths.checkpoint);
    s.get("out", cfg.paths.out);
    s.finish();
  }

  root.finish();
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ContractError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return from_json(buf.str(), path);
}

std::string RunConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["encoder"] = {{"num_layers", encoder.num_layers}, {"model_dim", encoder.model_dim},
                  {"num_heads", encoder.num_heads},   {"ffn_dim", encoder.ffn_dim},
                  {"max_positions", encoder.max_positions}, {"vocab_size", encoder.vocab_size},
                  {"dropout", encoder.dropout_p}};
  j["reader"] = {{"head_dim", reader.head_dim},
                 {"epochs", reader.epochs},
                 {"lr", reader.lr},
                 {"weight_decay", reader.weight_decay},
                 {"warmup_frac", reader.warmup_frac},
                 {"anonymize", reader.anonymize},
                 {"reanonymize_per_epoch", reader.reanonymize_per_epoch},
                 {"train_mode", train_mode_name(reader.train_mode)}};
  j["cnn"] = {{"pad_length", cnn.pad_length},
              {"max_distance", cnn.max_distance},
              {"residual_depth", cnn.residual_depth},
              {"window", cnn.window},
              {"word_dim", cnn.word_dim},
              {"pos_dim", cnn.pos_dim},
              {"channels", cnn.channels},
              {"dropout", cnn.dropout_p},
              {"l2", cnn.l2},
              {"learning_rate", cnn.learning_rate},
              {"epochs", cnn_run.epochs},
              {"batch_size", cnn_run.batch_size}};
  j["paths"] = {{"questions", paths.questions},
                {"dev_questions", paths.dev_questions},
                {"corpus", paths.corpus},
                {"lexicon", paths.lexicon},
                {"charts", paths.charts},
                {"checkpoint", paths.checkpoint},
                {"out", paths.out}};
  return j.dump(2);
}

}  // namespace erc
