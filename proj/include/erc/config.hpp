#pragma once

#include "erc/encoder.hpp"
#include "erc/relation_cnn.hpp"
#include "erc/trainer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace erc {

// Reader-side training knobs that are not part of the encoder proper.
struct ReaderRunConfig {
  int head_dim = 64;
  int epochs = 5;
  double lr = 1e-3;
  double weight_decay = 0.0;
  double warmup_frac = 0.08;
  bool anonymize = true;
  bool reanonymize_per_epoch = true;
  TrainMode train_mode = TrainMode::Accumulate;
};

struct CnnRunConfig {
  int epochs = 3;
  int batch_size = 32;
};

struct PathsConfig {
  std::string questions;
  std::string dev_questions;
  std::string corpus;
  std::string lexicon;
  std::vector<std::string> charts;
  std::string checkpoint;
  std::string out;
};

struct RunConfig {
  std::uint64_t seed = 0;
  EncoderConfig encoder;
  ReaderRunConfig reader;
  CnnConfig cnn;
  CnnRunConfig cnn_run;
  PathsConfig paths;

  // Parses JSON text; any key outside the documented set is an error that
  // names the offending section and key.
  static RunConfig from_json(const std::string& text, const std::string& source = "<config>");
  static RunConfig from_file(const std::string& path);

  // Full resolved config, suitable for logging and for round-tripping.
  std::string to_json() const;
};

TrainMode train_mode_from_name(const std::string& name);
std::string train_mode_name(TrainMode mode);

}  // namespace erc
