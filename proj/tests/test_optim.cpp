#include <doctest.h>

#include "erc/optim.hpp"
#include "erc/rng.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace erc;

TEST_CASE("SGD: lr 0.1, theta 1, grad 2 -> 0.8") {
  Param p("p", Mat::Ones(1, 1));
  p.grad(0, 0) = 2.0;
  Optimizer opt(Optimizer::Kind::SGD, 0.1);
  std::vector<Param*> params = {&p};
  opt.step(params);
  CHECK(p.value(0, 0) == doctest::Approx(0.8));
}

TEST_CASE("Adam first step moves by about lr regardless of gradient scale") {
  for (double g : {1e-3, 1.0, 1e3}) {
    Param p("p", Mat::Zero(1, 1));
    p.grad(0, 0) = g;
    Optimizer opt(Optimizer::Kind::Adam, 0.01);
    std::vector<Param*> params = {&p};
    opt.step(params);
    // bias-corrected first step: lr * g / (|g| + eps') ~ lr
    CHECK(std::abs(p.value(0, 0)) == doctest::Approx(0.01).epsilon(1e-3));
  }
}

TEST_CASE("non-finite gradient refuses the update") {
  Param p("p", Mat::Zero(1, 1));
  p.grad(0, 0) = std::nan("");
  Optimizer opt(Optimizer::Kind::SGD, 0.1);
  std::vector<Param*> params = {&p};
  CHECK_THROWS_AS(opt.step(params), NumericError);
  CHECK(p.value(0, 0) == 0.0);
}

TEST_CASE("warmup schedule ramps linearly then stays flat") {
  WarmupSchedule s{2e-5, 0.08, 1000};
  CHECK(s.lr(40) == doctest::Approx(1e-5));
  CHECK(s.lr(80) == doctest::Approx(2e-5));
  CHECK(s.lr(500) == doctest::Approx(2e-5));
  CHECK(s.lr(1000) == doctest::Approx(2e-5));
  WarmupSchedule flat{3e-4, 0.0, 10};
  CHECK(flat.lr(0) == doctest::Approx(3e-4));
}

TEST_CASE("weight decay adds decoupled-style term to the gradient") {
  Param p("p", Mat::Ones(1, 1));
  p.grad(0, 0) = 0.0;
  Optimizer opt(Optimizer::Kind::SGD, 0.1, 0.5);
  std::vector<Param*> params = {&p};
  opt.step(params);
  CHECK(p.value(0, 0) == doctest::Approx(1.0 - 0.1 * 0.5));
}

TEST_CASE("checkpoint round-trips and is byte-stable") {
  CounterRng rng(3, 0);
  Param a("enc.w", Mat::Zero(2, 3));
  Param b("head.b", Mat::Zero(1, 2));
  for (long i = 0; i < a.value.size(); ++i) a.value(i) = rng.next_normal();
  for (long i = 0; i < b.value.size(); ++i) b.value(i) = rng.next_normal();
  std::vector<Param*> params = {&a, &b};

  const std::string text = checkpoint_to_string(params);
  CHECK(text == checkpoint_to_string(params));  // byte stability

  auto path = std::filesystem::temp_directory_path() / "erc_test_ckpt.json";
  save_checkpoint(path.string(), params);
  Param a2("enc.w", Mat::Zero(2, 3));
  Param b2("head.b", Mat::Zero(1, 2));
  std::vector<Param*> restored = {&a2, &b2};
  load_checkpoint(path.string(), restored);
  CHECK(a2.value == a.value);
  CHECK(b2.value == b.value);

  Param wrong_name("other", Mat::Zero(2, 3));
  std::vector<Param*> bad1 = {&wrong_name, &b2};
  CHECK_THROWS(load_checkpoint(path.string(), bad1));
  Param wrong_shape("enc.w", Mat::Zero(3, 2));
  std::vector<Param*> bad2 = {&wrong_shape, &b2};
  CHECK_THROWS(load_checkpoint(path.string(), bad2));
  std::filesystem::remove(path);
}
