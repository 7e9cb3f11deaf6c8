#include "erc/gradcheck.hpp"

#include "erc/optim.hpp"
#include "erc/reader.hpp"
#include "erc/relation_cnn.hpp"
#include "erc/rng.hpp"

#include <algorithm>
#include <cmath>

namespace erc {

GradCheckResult gradcheck(const std::string& name, std::vector<Param*> params,
                          const LossFn& loss, double h, double tol) {
  zero_grads(params);
  {
    Tape t(Tape::Mode::Retain);
    Var l = loss(t);
    t.backward(l);
  }
  GradCheckResult res;
  res.name = name;
  for (Param* p : params) {
    if (!p->trainable) continue;
    for (long r = 0; r < p->value.rows(); ++r) {
      for (long c = 0; c < p->value.cols(); ++c) {
        const double orig = p->value(r, c);
        p->value(r, c) = orig + h;
        double fp;
        {
          Tape t(Tape::Mode::Retain);
          fp = loss(t).scalar();
        }
        p->value(r, c) = orig - h;
        double fm;
        {
          Tape t(Tape::Mode::Retain);
          fm = loss(t).scalar();
        }
        p->value(r, c) = orig;
        const double numeric = (fp - fm) / (2.0 * h);
        const double analytic = p->grad(r, c);
        const double denom = std::max({1.0, std::abs(numeric), std::abs(analytic)});
        res.max_rel_err = std::max(res.max_rel_err, std::abs(numeric - analytic) / denom);
      }
    }
  }
  zero_grads(params);
  res.ok = res.max_rel_err < tol;
  return res;
}

namespace {

// Values pushed away from zero so relu/max kinks stay clear of the FD probes.
Mat smooth_randn(CounterRng& rng, long rows, long cols) {
  Mat m(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) {
      double x = rng.next_normal();
      m(r, c) = x + (x >= 0.0 ? 0.2 : -0.2);
    }
  return m;
}

// Weighted sum with a fixed random matrix, so the op's full Jacobian shows up
// even when plain sum_all would cancel (softmax rows sum to one).
Var weigh(const Var& y, const Mat& w) {
  Tape& t = *y.tape;
  return sum_all(mul(y, t.constant(w)));
}

Question tiny_question() {
  Question q;
  q.id = "gc";
  q.query_relation = "rel";
  q.query_entity = "@ent0";
  q.query_tokens = {3, 4};
  q.paragraphs = {{4, 5, 6, 7}, {7, 8, 4, 9, 5}};
  q.candidates = {"@ent1", "@ent2"};
  q.answer = "@ent1";
  q.mentions["@ent0"] = {{0, 0}, {1, 2}};
  q.mentions["@ent1"] = {{0, 2}, {1, 0}};
  q.mentions["@ent2"] = {{1, 3}};
  q.validate();
  return q;
}

}  // namespace

std::vector<GradCheckResult> run_all_gradchecks(std::uint64_t seed) {
  CounterRng rng(seed, 0x9c6c);
  std::vector<GradCheckResult> out;
  auto run = [&](const std::string& name, std::vector<Param*> params, const LossFn& loss,
                 double h = 1e-5) {
    out.push_back(gradcheck(name, std::move(params), loss, h));
  };

  Param a("a", smooth_randn(rng, 3, 4));
  Param b("b", smooth_randn(rng, 4, 3));
  Param c("c", smooth_randn(rng, 3, 4));
  Param row("row", smooth_randn(rng, 1, 4));
  Param col("col", smooth_randn(rng, 3, 1));
  Param pos("pos", smooth_randn(rng, 3, 4));
  pos.value = pos.value.array().abs() + 0.5;  // keep log well inside its domain
  const Mat w34 = smooth_randn(rng, 3, 4);
  const Mat w43 = smooth_randn(rng, 4, 3);
  const Mat w33 = smooth_randn(rng, 3, 3);
  const Mat w38 = smooth_randn(rng, 3, 8);
  const Mat w64 = smooth_randn(rng, 6, 4);
  const Mat w14 = smooth_randn(rng, 1, 4);
  const Mat w32 = smooth_randn(rng, 3, 2);

  run("matmul", {&a, &b}, [&](Tape& t) { return weigh(matmul(t.leaf(a), t.leaf(b)), w33); });
  run("transpose", {&a}, [&](Tape& t) { return weigh(transpose(t.leaf(a)), w43); });
  run("add", {&a, &c}, [&](Tape& t) { return weigh(add(t.leaf(a), t.leaf(c)), w34); });
  run("sub", {&a, &c}, [&](Tape& t) { return weigh(sub(t.leaf(a), t.leaf(c)), w34); });
  run("mul", {&a, &c}, [&](Tape& t) { return weigh(mul(t.leaf(a), t.leaf(c)), w34); });
  run("scale", {&a}, [&](Tape& t) { return weigh(scale(t.leaf(a), -1.7), w34); });
  run("add_rowwise", {&a, &row},
      [&](Tape& t) { return weigh(add_rowwise(t.leaf(a), t.leaf(row)), w34); });
  run("relu", {&a}, [&](Tape& t) { return weigh(relu(t.leaf(a)), w34); });
  run("sigmoid", {&a}, [&](Tape& t) { return weigh(sigmoid(t.leaf(a)), w34); });
  run("log_elem", {&pos}, [&](Tape& t) { return weigh(log_elem(t.leaf(pos)), w34); });
  run("sum_all", {&a}, [&](Tape& t) { return sum_all(t.leaf(a)); });
  run("concat_cols", {&a, &c},
      [&](Tape& t) { return weigh(concat_cols(t.leaf(a), t.leaf(c)), w38); });
  run("vstack", {&a, &c},
      [&](Tape& t) { return weigh(vstack({t.leaf(a), t.leaf(c)}), w64); });
  run("slice_cols", {&a}, [&](Tape& t) { return weigh(slice_cols(t.leaf(a), 1, 2), w32); });
  run("sum_rows_at", {&a},
      [&](Tape& t) { return weigh(sum_rows_at(t.leaf(a), {0, 2, 2}), w14); });
  run("softmax_rows", {&a}, [&](Tape& t) { return weigh(softmax_rows(t.leaf(a)), w34); });
  run("max_over_rows", {&a}, [&](Tape& t) { return weigh(max_over_rows(t.leaf(a)), w14); });
  run("dropout", {&a},
      [&](Tape& t) { return weigh(dropout(t.leaf(a), 0.5, true), w34); });
  const Mat w28 = smooth_randn(rng, 2, 8);
  run("window_rows_valid", {&a},
      [&](Tape& t) { return weigh(window_rows(t.leaf(a), 2, false), w28); });
  run("window_rows_same", {&a},
      [&](Tape& t) { return weigh(window_rows(t.leaf(a), 2, true), w38); });

  Param table("table", smooth_randn(rng, 5, 4));
  run("embedding_rows", {&table},
      [&](Tape& t) { return weigh(embedding_rows(t, table, {1, 3, 1}), w34); });

  Param gamma("gamma", smooth_randn(rng, 1, 4));
  Param beta("beta", smooth_randn(rng, 1, 4));
  run("layer_norm_rows", {&a, &gamma, &beta}, [&](Tape& t) {
    return weigh(layer_norm_rows(t.leaf(a), t.leaf(gamma), t.leaf(beta)), w34);
  });

  Param logits("logits", smooth_randn(rng, 4, 1));
  run("cross_entropy_logits", {&logits},
      [&](Tape& t) { return cross_entropy_logits(t.leaf(logits), 2); });
  Param logit("logit", smooth_randn(rng, 1, 1));
  run("bce_with_logit", {&logit},
      [&](Tape& t) { return bce_with_logit(t.leaf(logit), true); });

  Param q8("q8", smooth_randn(rng, 3, 4));
  Param k8("k8", smooth_randn(rng, 5, 4));
  Param v8("v8", smooth_randn(rng, 5, 4));
  run("attention", {&q8, &k8, &v8},
      [&](Tape& t) { return weigh(attention(t.leaf(q8), t.leaf(k8), t.leaf(v8)), w34); });

  // 2-layer d=8 encoder, scalar head = weighted sum of the output
  {
    EncoderConfig ec;
    ec.num_layers = 2;
    ec.model_dim = 8;
    ec.num_heads = 2;
    ec.ffn_dim = 12;
    ec.max_positions = 16;
    ec.vocab_size = 10;
    ec.dropout_p = 0.0;
    EncoderParams enc(ec, seed + 1);
    const Mat wenc = smooth_randn(rng, 8, 8);
    run("encoder", enc.params(), [&](Tape& t) {
      return weigh(encode(t, enc, {3, 4}, {5, 6, 7, 8}, false), wenc);
    });
  }

  // full reader on the tiny question (single-graph baseline loss)
  {
    ReaderConfig rc;
    rc.encoder.num_layers = 2;
    rc.encoder.model_dim = 8;
    rc.encoder.num_heads = 2;
    rc.encoder.ffn_dim = 12;
    rc.encoder.max_positions = 16;
    rc.encoder.vocab_size = 12;
    rc.encoder.dropout_p = 0.0;
    rc.head_dim = 8;
    ReaderModel model(rc, seed + 2);
    const Question q = tiny_question();
    // smaller probe step: the deep graph has enough curvature (and relu
    // kinks) that h = 1e-5 occasionally straddles one
    run("reader_full", model.params(),
        [&](Tape& t) { return naive_loss_graph(t, model, q, false); }, 1e-6);
  }

  // full CNN on one tiny instance
  {
    CnnConfig cc;
    cc.pad_length = 8;
    cc.max_distance = 4;
    cc.residual_depth = 2;
    cc.window = 2;
    cc.word_dim = 4;
    cc.pos_dim = 2;
    cc.channels = 4;
    cc.dropout_p = 0.0;
    cc.vocab_size = 6;
    CnnModel model(cc, seed + 3);
    const SentenceInstance inst =
        make_instance(cc, {2, 3, 4, 5, 3, 2}, 1, 4, true, "e1", "e2");
    run("cnn_full", model.params(), [&](Tape& t) {
      return bce_with_logit(sentence_logit_graph(t, model, inst, false), true);
    }, 1e-6);
  }

  return out;
}

}  // namespace erc
