#include "erc/optim.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

namespace erc {

void Optimizer::step(std::vector<Param*>& params) {
  for (Param* p : params) {
    if (!p->trainable) continue;
    if (!p->grad.allFinite())
      throw NumericError("optimizer: non-finite gradient for parameter " + p->name);
  }
  ++step_count_;
  for (Param* p : params) {
    if (!p->trainable) continue;
    Mat g = p->grad;
    if (weight_decay_ != 0.0) g += weight_decay_ * p->value;
    if (kind_ == Kind::SGD) {
      p->value -= lr_ * g;
      continue;
    }
    if (p->adam_m.size() == 0) {
      p->adam_m = Mat::Zero(p->value.rows(), p->value.cols());
      p->adam_v = Mat::Zero(p->value.rows(), p->value.cols());
    }
    p->adam_m = beta1 * p->adam_m + (1.0 - beta1) * g;
    p->adam_v = beta2 * p->adam_v + (1.0 - beta2) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count_));
    Mat mhat = p->adam_m / bc1;
    Mat vhat = p->adam_v / bc2;
    p->value -= lr_ * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + epsilon).matrix());
  }
}

void zero_grads(std::vector<Param*>& params) {
  for (Param* p : params) p->zero_grad();
}

std::string checkpoint_to_string(const std::vector<Param*>& params) {
  nlohmann::json j;
  j["format"] = "erc-checkpoint";
  j["version"] = 1;
  auto& arr = j["params"] = nlohmann::json::array();
  for (const Param* p : params) {
    nlohmann::json rec;
    rec["name"] = p->name;
    rec["shape"] = {p->value.rows(), p->value.cols()};
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(p->value.size()));
    for (long r = 0; r < p->value.rows(); ++r)
      for (long c = 0; c < p->value.cols(); ++c) vals.push_back(p->value(r, c));
    rec["values"] = vals;
    arr.push_back(std::move(rec));
  }
  return j.dump();
}

void save_checkpoint(const std::string& path, const std::vector<Param*>& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw TapeError("cannot open checkpoint file for writing: " + path);
  os << checkpoint_to_string(params) << '\n';
}

void load_checkpoint(const std::string& path, std::vector<Param*>& params) {
  std::ifstream is(path);
  if (!is) throw TapeError("cannot open checkpoint file: " + path);
  nlohmann::json j;
  is >> j;
  if (j.value("format", "") != "erc-checkpoint")
    throw TapeError("not an erc checkpoint: " + path);
  const auto& arr = j.at("params");
  if (arr.size() != params.size())
    throw TapeError("checkpoint parameter count mismatch in " + path);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& rec = arr[i];
    Param* p = params[i];
    if (rec.at("name").get<std::string>() != p->name)
      throw TapeError("checkpoint parameter name mismatch: expected " + p->name);
    const long rows = rec.at("shape")[0].get<long>();
    const long cols = rec.at("shape")[1].get<long>();
    if (rows != p->value.rows() || cols != p->value.cols())
      throw TapeError("checkpoint shape mismatch for " + p->name);
    const auto& vals = rec.at("values");
    std::size_t k = 0;
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c) p->value(r, c) = vals[k++].get<double>();
  }
}

}  // namespace erc
