#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mmrec/error.hpp"
#include "mmrec/nn/checkpoint.hpp"
#include "mmrec/nn/grad_check.hpp"
#include "mmrec/nn/trainer.hpp"

using namespace mmrec;
using namespace mmrec::nn;

namespace {

LayerSpec dense_spec(Index in, Index out, Activation act, double dropout = 0.0) {
  return {LayerKind::dense, in, out, act, dropout, true};
}

LayerSpec gru_spec(Index in, Index out, double dropout = 0.0) {
  return {LayerKind::gru, in, out, Activation::tanh, dropout, true};
}

EncodedSequence random_sequence(std::mt19937_64& rng, int steps, Index width, bool binary = false) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  EncodedSequence seq;
  for (int t = 0; t < steps; ++t) {
    EncodedStep s;
    s.modality = coin(rng) ? Modality::conversation : Modality::session;
    for (Index j = 0; j < width; ++j) s.values.push_back(binary ? (coin(rng) ? 1.0 : 0.0) : normal(rng));
    seq.steps.push_back(std::move(s));
  }
  return seq;
}

Matrix<double> random_binary(std::mt19937_64& rng, Index rows, Index cols) {
  std::bernoulli_distribution coin(0.4);
  Matrix<double> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = coin(rng) ? 1.0 : 0.0;
  return m;
}

std::map<std::string, Matrix<double>> by_name(const Network<double>& net) {
  std::map<std::string, Matrix<double>> out;
  for (const auto* p : net.parameters()) out[p->name] = p->value;
  return out;
}

// Plain-loop re-evaluation of a GRU -> dense(relu) -> output net.
std::vector<double> straight_line_forward(const Network<double>& net, const EncodedSequence& seq) {
  auto p = by_name(net);
  const auto matvec = [](const Matrix<double>& w, const std::vector<double>& x) {
    std::vector<double> y(static_cast<std::size_t>(w.rows()), 0.0);
    for (Index i = 0; i < w.rows(); ++i)
      for (Index j = 0; j < w.cols(); ++j) y[i] += w(i, j) * x[j];
    return y;
  };
  const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const std::size_t hidden = static_cast<std::size_t>(p["gru.u_z"].rows());
  std::vector<double> h(hidden, 0.0);
  for (const EncodedStep& step : seq.steps) {
    const auto wz = matvec(p["gru.w_z"], step.values), uz = matvec(p["gru.u_z"], h);
    const auto wr = matvec(p["gru.w_r"], step.values), ur = matvec(p["gru.u_r"], h);
    std::vector<double> z(hidden), r(hidden), rh(hidden);
    for (std::size_t i = 0; i < hidden; ++i) {
      z[i] = sig(wz[i] + uz[i] + p["gru.b_z"](0, i));
      r[i] = sig(wr[i] + ur[i] + p["gru.b_r"](0, i));
      rh[i] = r[i] * h[i];
    }
    const auto wh = matvec(p["gru.w_h"], step.values), uh = matvec(p["gru.u_h"], rh);
    for (std::size_t i = 0; i < hidden; ++i) {
      const double c = std::tanh(wh[i] + uh[i] + p["gru.b_h"](0, i));
      h[i] = (1.0 - z[i]) * h[i] + z[i] * c;
    }
  }
  auto a = matvec(p["dense1.w"], h);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::max(0.0, a[i] + p["dense1.b"](0, i));
  auto o = matvec(p["output.w"], a);
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += p["output.b"](0, i);
  return o;
}

NetworkSpec gru_net(Index in, Index hidden, Index dense, Index out, double dropout = 0.0) {
  NetworkSpec spec;
  spec.input_width = in;
  spec.layers = {gru_spec(in, hidden, dropout), dense_spec(hidden, dense, Activation::relu),
                 dense_spec(dense, out, Activation::identity)};
  return spec;
}

}  // namespace

TEST_CASE("dense_forward examples") {
  const Vector<double> zero = Vector<double>::Zero(3);
  const Matrix<double> w = Matrix<double>::Random(2, 3);
  const Vector<double> b = Vector<double>::Zero(2);
  CHECK(dense_forward(zero, w, b, Activation::tanh).isZero());
  const Vector<double> half = dense_forward(zero, w, b, Activation::sigmoid);
  CHECK(half(0) == doctest::Approx(0.5));
  CHECK(half(1) == doctest::Approx(0.5));

  Vector<double> x(2);
  x << 1, 2;
  const Vector<double> y = dense_forward(x, Matrix<double>::Identity(2, 2).eval(), Vector<double>::Zero(2).eval(),
                                         Activation::identity);
  CHECK(y(0) == 1.0);
  CHECK(y(1) == 2.0);
  CHECK_THROWS_AS(dense_forward(x, w, b, Activation::identity), ConfigError);
}

TEST_CASE("gru_step closed-form cases") {
  Vector<double> h(3);
  h << 0.4, -1.2, 2.0;
  const auto zeros = GruWeights<double>::zeros(2, 3);
  const Vector<double> out = gru_step(Vector<double>::Constant(2, 0.7).eval(), h, zeros);
  for (Index i = 0; i < 3; ++i) CHECK(out(i) == doctest::Approx(0.5 * h(i)));
  CHECK(gru_step(Vector<double>::Zero(2).eval(), Vector<double>::Zero(3).eval(), zeros).isZero());

  // One-dimensional case with all six weights equal to one.
  auto ones = GruWeights<double>::zeros(1, 1);
  for (auto* m : {&ones.w_z, &ones.u_z, &ones.w_r, &ones.u_r, &ones.w_h, &ones.u_h}) m->setOnes();
  const Vector<double> one = Vector<double>::Ones(1);
  CHECK(gru_step(one, one, ones)(0) == doctest::Approx(0.9599791836277166).epsilon(1e-14));

  Vector<double> bad = Vector<double>::Zero(2);
  bad(1) = std::nan("");
  CHECK_THROWS_AS(gru_step(bad, Vector<double>::Zero(3).eval(), zeros), NumericError);
}

TEST_CASE("GRU hidden state lies between previous state and candidate") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    GruWeights<double> p = GruWeights<double>::zeros(4, 5);
    for (auto* m : {&p.w_z, &p.u_z, &p.w_r, &p.u_r, &p.w_h, &p.u_h})
      for (Index i = 0; i < m->size(); ++i) m->data()[i] = normal(rng);
    for (auto* b : {&p.b_z, &p.b_r, &p.b_h})
      for (Index i = 0; i < b->size(); ++i) (*b)(i) = normal(rng);
    Vector<double> x(4), h(5);
    for (Index i = 0; i < 4; ++i) x(i) = normal(rng);
    for (Index i = 0; i < 5; ++i) h(i) = normal(rng);
    const Vector<double> r = (p.w_r * x + p.u_r * h + p.b_r).unaryExpr([](double v) { return sigmoid(v); });
    const Vector<double> cand = (p.w_h * x + p.u_h * r.cwiseProduct(h) + p.b_h).array().tanh().matrix();
    const Vector<double> next = gru_step(x, h, p);
    for (Index i = 0; i < 5; ++i) {
      CHECK(next(i) >= std::min(h(i), cand(i)) - 1e-12);
      CHECK(next(i) <= std::max(h(i), cand(i)) + 1e-12);
    }
  }
}

TEST_CASE("predict_probs and bce_multilabel_loss") {
  CHECK(predict_probs(Vector<double>::Zero(4).eval()).isApproxToConstant(0.5));
  Vector<double> big(1);
  big << 50.0;
  CHECK(std::abs(predict_probs(big)(0) - 1.0) < 1e-9);
  Vector<double> l3(1);
  l3 << std::log(3.0);
  CHECK(predict_probs(l3)(0) == doctest::Approx(0.75).epsilon(1e-15));

  Vector<double> p(2), q(2);
  p << 1, 0;
  q << 0.8, 0.3;
  CHECK(bce_multilabel_loss(q, p) == doctest::Approx(0.5798184952529422).epsilon(1e-14));
  CHECK(bce_multilabel_loss(p, p) < 1e-6);
  const Vector<double> halves = Vector<double>::Constant(24, 0.5);
  Vector<double> mixed = Vector<double>::Zero(24);
  mixed.head(7).setOnes();
  CHECK(bce_multilabel_loss(halves, mixed) == doctest::Approx(24 * std::log(2.0)));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    Vector<double> a(5), t(5);
    for (Index j = 0; j < 5; ++j) {
      a(j) = u(rng);
      t(j) = u(rng) < 0.5 ? 0.0 : 1.0;
    }
    CHECK(bce_multilabel_loss(a, t) >= 0.0);
  }
}

TEST_CASE("sequence forward matches gru_step plus dense layers and a straight-line oracle") {
  std::mt19937_64 rng(5);
  Network<double> net(gru_net(3, 4, 5, 2), 17);

  const EncodedSequence single = random_sequence(rng, 1, 3);
  auto p = by_name(net);
  GruWeights<double> g;
  g.w_z = p["gru.w_z"]; g.u_z = p["gru.u_z"]; g.b_z = p["gru.b_z"].row(0).transpose();
  g.w_r = p["gru.w_r"]; g.u_r = p["gru.u_r"]; g.b_r = p["gru.b_r"].row(0).transpose();
  g.w_h = p["gru.w_h"]; g.u_h = p["gru.u_h"]; g.b_h = p["gru.b_h"].row(0).transpose();
  const Vector<double> x = Eigen::Map<const Vector<double>>(single.steps[0].values.data(), 3);
  const Vector<double> h = gru_step(x, Vector<double>::Zero(4).eval(), g);
  const Vector<double> a = dense_forward(h, p["dense1.w"], p["dense1.b"].row(0).transpose().eval(), Activation::relu);
  const Vector<double> o = dense_forward(a, p["output.w"], p["output.b"].row(0).transpose().eval(), Activation::identity);
  CHECK((net.forward_one(single) - o).cwiseAbs().maxCoeff() < 1e-14);

  for (int trial = 0; trial < 20; ++trial) {
    const EncodedSequence seq = random_sequence(rng, 1 + trial % 6, 3);
    const Vector<double> got = net.forward_one(seq);
    const std::vector<double> want = straight_line_forward(net, seq);
    for (Index j = 0; j < 2; ++j) CHECK(got(j) == doctest::Approx(want[j]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(net.forward_one(EncodedSequence{}), DataError);
}

TEST_CASE("zero-weight network on two identical steps outputs zero before bias") {
  Network<double> net(gru_net(2, 3, 3, 2), 1);
  for (auto* prm : net.parameters()) prm->value.setZero();
  EncodedSequence seq;
  seq.steps = {{Modality::session, {1.0, 0.5}}, {Modality::session, {1.0, 0.5}}};
  CHECK(net.forward_one(seq).isZero());
}

TEST_CASE("packed batches give the same outputs as one-at-a-time inference") {
  std::mt19937_64 rng(8);
  Network<double> net(gru_net(3, 6, 4, 3), 2);
  std::vector<EncodedSequence> seqs;
  for (int i = 0; i < 13; ++i) seqs.push_back(random_sequence(rng, 1 + (i * 7) % 5, 3));
  const Matrix<double> probs = net.predict(seqs, 4);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const Vector<double> one = predict_probs(net.forward_one(seqs[i]));
    CHECK((probs.row(static_cast<Index>(i)).transpose() - one).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("backward: zero incoming gradient and the identity dense closed form") {
  std::mt19937_64 rng(4);
  Network<double> net(gru_net(3, 4, 4, 2), 9);
  std::vector<EncodedSequence> seqs = {random_sequence(rng, 3, 3), random_sequence(rng, 2, 3)};
  const SequenceBatch<double> batch = make_batch<double>(seqs);
  net.zero_grad();
  const Matrix<double> out = net.forward(batch, nullptr);
  net.backward(Matrix<double>::Zero(out.rows(), out.cols()));
  for (const auto* prm : std::as_const(net).parameters()) CHECK(prm->grad.isZero());

  NetworkSpec lin;
  lin.input_width = 2;
  lin.layers = {dense_spec(2, 2, Activation::identity)};
  Network<double> dense(lin, 1);
  EncodedSequence s;
  s.steps = {{Modality::session, {1.5, -2.0}}};
  std::vector<EncodedSequence> one = {s};
  const SequenceBatch<double> b1 = make_batch<double>(one);
  dense.zero_grad();
  dense.forward(b1, nullptr);
  Matrix<double> g(1, 2);
  g << 0.3, -0.7;
  dense.backward(g);
  const Matrix<double> expected = g.transpose() * Matrix<double>{{1.5, -2.0}};
  CHECK((dense.parameters()[0]->grad - expected).cwiseAbs().maxCoeff() < 1e-15);

  Network<double> fresh(gru_net(3, 4, 4, 2), 9);
  CHECK_THROWS_AS(fresh.backward(Matrix<double>::Zero(1, 2)), UsageError);
}

TEST_CASE("grad_check: linear net, GRU nets, latent map, and corrupted gradients") {
  std::mt19937_64 rng(21);

  SUBCASE("linear net is exact to near machine precision") {
    NetworkSpec lin;
    lin.input_width = 4;
    lin.layers = {dense_spec(4, 3, Activation::identity)};
    lin.loss = LossKind::squared_error;
    Network<double> net(lin, 3);
    std::vector<EncodedSequence> seqs;
    for (int i = 0; i < 5; ++i) seqs.push_back(random_sequence(rng, 1, 4));
    const SequenceBatch<double> batch = make_batch<double>(seqs);
    LossTargets<double> t{Matrix<double>::Random(5, 3), {}};
    const GradCheckReport r = grad_check(net, batch, t, 1e-4);
    CHECK(r.passed);
    CHECK(r.max_relative_error < 1e-7);
  }

  SUBCASE("random 3-step GRU nets with BCE") {
    for (int seed = 0; seed < 5; ++seed) {
      Network<double> net(gru_net(3, 4, 3, 2), 100 + seed);
      std::vector<EncodedSequence> seqs = {random_sequence(rng, 3, 3), random_sequence(rng, 3, 3),
                                           random_sequence(rng, 1, 3)};
      const SequenceBatch<double> batch = make_batch<double>(seqs);
      LossTargets<double> t{gather_rows(random_binary(rng, 3, 2), std::vector<Index>{0, 1, 2}, batch.order), {}};
      const GradCheckReport r = grad_check(net, batch, t, 1e-4);
      CHECK_MESSAGE(r.passed, r.worst_parameter, " ", r.max_relative_error);
      CHECK(input_grad_check(net, batch, t, 1e-4).passed);
    }
  }

  SUBCASE("latent map stack and soft targets") {
    NetworkSpec spec;
    spec.latent_map = LatentMapSpec{3, 4, 3};
    spec.layers = {gru_spec(3, 3), dense_spec(3, 3, Activation::relu), dense_spec(3, 2, Activation::identity)};
    Network<double> net(spec, 5);
    std::vector<EncodedSequence> seqs;
    for (int i = 0; i < 4; ++i) {
      EncodedSequence s;
      for (int t = 0; t <= i % 3; ++t) {
        const bool conv = (i + t) % 2 == 0;
        s.steps.push_back(random_sequence(rng, 1, conv ? 3 : 4).steps[0]);
        s.steps.back().modality = conv ? Modality::conversation : Modality::session;
      }
      seqs.push_back(s);
    }
    const SequenceBatch<double> batch = make_batch<double>(seqs);
    LossTargets<double> t{random_binary(rng, 4, 2), {{0.32, Matrix<double>::Constant(4, 2, 0.3)},
                                                    {0.87, Matrix<double>::Constant(4, 2, 0.6)}}};
    const GradCheckReport r = grad_check(net, batch, t, 1e-4);
    CHECK_MESSAGE(r.passed, r.worst_parameter, " ", r.max_relative_error);
    CHECK(input_grad_check(net, batch, t, 1e-4).passed);
  }

  SUBCASE("corrupting one weight's gradient by 1% fails the check") {
    Network<double> net(gru_net(3, 4, 3, 2), 77);
    std::vector<EncodedSequence> seqs = {random_sequence(rng, 3, 3), random_sequence(rng, 2, 3)};
    const SequenceBatch<double> batch = make_batch<double>(seqs);
    LossTargets<double> t{Matrix<double>{{1, 0}, {0, 1}}, {}};
    GradientSet a = analytic_gradients(net, batch, t);
    const GradientSet n = numeric_gradients(net, batch, t);
    CHECK(compare_gradients(a, n, 1e-4).passed);
    Index r = 0, c = 0;
    a.values[0].cwiseAbs().maxCoeff(&r, &c);
    a.values[0](r, c) *= 1.01;
    CHECK_FALSE(compare_gradients(a, n, 1e-4).passed);
  }
}

TEST_CASE("latent map: W_c gets no gradient from an all-session batch") {
  NetworkSpec spec;
  spec.latent_map = LatentMapSpec{3, 4, 3};
  spec.layers = {gru_spec(3, 3), dense_spec(3, 3, Activation::relu), dense_spec(3, 2, Activation::identity)};
  Network<double> net(spec, 2);
  std::mt19937_64 rng(1);
  std::vector<EncodedSequence> seqs;
  for (int i = 0; i < 3; ++i) {
    EncodedSequence s = random_sequence(rng, 2, 4, true);
    for (auto& st : s.steps) st.modality = Modality::session;
    seqs.push_back(s);
  }
  const SequenceBatch<double> batch = make_batch<double>(seqs);
  const GradientSet g = analytic_gradients(net, batch, {Matrix<double>::Ones(3, 2), {}});
  for (std::size_t i = 0; i < g.names.size(); ++i)
    if (g.names[i] == "latent.w_conv" || g.names[i] == "latent.b_conv") CHECK(g.values[i].isZero());
}

TEST_CASE("Adam update rules") {
  Parameter<double> w("w", 1, 3);
  w.value << 1.0, -2.0, 0.5;
  Adam<double> adam;
  const Matrix<double> before = w.value;
  Parameter<double>* ps[] = {&w};
  for (int i = 0; i < 3; ++i) adam.step(ps);
  CHECK(w.value == before);

  Adam<double> first;
  w.grad << 3.0, -0.01, 2e-3;
  first.step(ps);
  const Matrix<double> delta = w.value - before;
  CHECK(delta(0) == doctest::Approx(-1e-3).epsilon(1e-4));
  CHECK(delta(1) == doctest::Approx(1e-3).epsilon(1e-4));
  CHECK(delta(2) == doctest::Approx(-1e-3).epsilon(1e-4));

  // f(w) = w^2 from w = 1; values from a scalar simulation of the update.
  Parameter<double> s("s", 1, 1);
  s.value(0, 0) = 1.0;
  Parameter<double>* sp[] = {&s};
  Adam<double> scalar;
  const double expected[] = {0.9990000015811363, 0.9980000289037694, 0.9970000996641545};
  double previous = 1.0;
  for (double e : expected) {
    s.grad(0, 0) = 2.0 * s.value(0, 0);
    scalar.step(sp);
    CHECK(s.value(0, 0) == doctest::Approx(e).epsilon(1e-12));
    CHECK(s.value(0, 0) * s.value(0, 0) < previous * previous);
    previous = s.value(0, 0);
  }
}

namespace {

// J=4 labels; label j is on iff feature j of the 4-dim input is positive.
LabeledData<double> separable_set(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  LabeledData<double> d;
  d.targets.resize(n, 4);
  for (int i = 0; i < n; ++i) {
    EncodedSequence s;
    s.steps.push_back({Modality::conversation, {}});
    for (int j = 0; j < 4; ++j) {
      double v = normal(rng);
      if (std::abs(v) < 0.2) v = v < 0 ? -0.2 : 0.2;
      s.steps[0].values.push_back(v);
      d.targets(i, j) = v > 0 ? 1.0 : 0.0;
    }
    d.inputs.push_back(std::move(s));
  }
  return d;
}

NetworkSpec ff_net(Index in, Index units, Index out, double dropout = 0.0) {
  NetworkSpec spec;
  spec.input_width = in;
  spec.layers = {dense_spec(in, units, Activation::tanh, dropout), dense_spec(units, units, Activation::relu),
                 dense_spec(units, out, Activation::identity)};
  return spec;
}

}  // namespace

TEST_CASE("training reaches low loss on a linearly separable multi-label set") {
  std::mt19937_64 rng(42);
  const LabeledData<double> train_set = separable_set(rng, 200);
  const LabeledData<double> valid_set = separable_set(rng, 50);
  Network<double> net(ff_net(4, 16, 4), 3);
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.max_epochs = 50;
  cfg.patience = 50;
  cfg.adam.learning_rate = 0.01;
  const TrainResult r = train(net, train_set, valid_set, cfg);
  const double final_train = evaluate_loss(net, train_set);
  CHECK(final_train < 0.1 * 4 * std::log(2.0));
  CHECK(r.best_epoch >= 1);
}

TEST_CASE("early stopping returns the best epoch's parameters") {
  std::mt19937_64 rng(7);
  LabeledData<double> train_set = separable_set(rng, 64);
  LabeledData<double> valid_set = train_set;
  valid_set.targets = Matrix<double>::Ones(64, 4) - train_set.targets;  // learning the task hurts validation

  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.patience = 1;
  cfg.seed = 5;
  cfg.adam.learning_rate = 0.01;
  Network<double> net(ff_net(4, 8, 4), 1);
  const TrainResult r = train(net, train_set, valid_set, cfg);
  CHECK(r.best_epoch == 1);
  CHECK(r.log.size() == 2);
  CHECK(r.log[1].valid_loss > r.log[0].valid_loss);

  cfg.max_epochs = 1;
  Network<double> once(ff_net(4, 8, 4), 1);
  train(once, train_set, valid_set, cfg);
  const auto a = net.snapshot(), b = once.snapshot();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("training is bit-identical for equal seeds and dropout is off at inference") {
  std::mt19937_64 rng(9);
  const LabeledData<double> train_set = separable_set(rng, 80);
  const LabeledData<double> valid_set = separable_set(rng, 20);
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.max_epochs = 5;
  cfg.seed = 12;
  Network<double> a(ff_net(4, 8, 4, 0.4), 3), b(ff_net(4, 8, 4, 0.4), 3);
  const TrainResult ra = train(a, train_set, valid_set, cfg);
  const TrainResult rb = train(b, train_set, valid_set, cfg);
  CHECK(ra.log.size() == rb.log.size());
  for (std::size_t i = 0; i < ra.log.size(); ++i) CHECK(ra.log[i].train_loss == rb.log[i].train_loss);
  const auto sa = a.snapshot(), sb = b.snapshot();
  for (std::size_t i = 0; i < sa.size(); ++i) CHECK(sa[i] == sb[i]);
  CHECK(a.predict(valid_set.inputs) == a.predict(valid_set.inputs));
}

TEST_CASE("training reports divergence with epoch and batch") {
  std::mt19937_64 rng(1);
  LabeledData<double> train_set = separable_set(rng, 16);
  train_set.inputs[3].steps[0].values[0] = std::numeric_limits<double>::infinity();
  const LabeledData<double> valid_set = separable_set(rng, 8);
  Network<double> net(ff_net(4, 4, 4), 1);
  TrainConfig cfg;
  cfg.batch_size = 4;
  try {
    train(net, train_set, valid_set, cfg);
    FAIL("expected a TrainingError");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}

TEST_CASE("checkpoint round trip is exact and rejects mismatches") {
  Network<float> net(gru_net(3, 4, 4, 2), 99);
  std::stringstream ss;
  write_checkpoint(ss, export_parameters(net));
  const auto tensors = read_checkpoint(ss);
  Network<float> other(gru_net(3, 4, 4, 2), 1);
  import_parameters(other, tensors);
  const auto a = net.snapshot(), b = other.snapshot();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  Network<float> wrong(gru_net(3, 5, 4, 2), 1);
  CHECK_THROWS_AS(import_parameters(wrong, tensors), DataError);
  std::stringstream bad("mmrec-checkpoint 9\ntensors 0\n");
  CHECK_THROWS_AS(read_checkpoint(bad), DataError);
}

TEST_CASE("network spec validation") {
  NetworkSpec spec = gru_net(3, 4, 4, 2);
  spec.layers[1].input_width = 5;
  CHECK_THROWS_AS(Network<double>(spec, 1), ConfigError);
  spec = gru_net(3, 4, 4, 2);
  spec.layers[0].dropout = 1.0;
  CHECK_THROWS_AS(Network<double>(spec, 1), ConfigError);
  spec = gru_net(3, 4, 4, 2);
  spec.layers.back().dropout = 0.2;
  CHECK_THROWS_AS(Network<double>(spec, 1), ConfigError);
}

TEST_CASE("gradient floor scales with the loss") {
  CHECK(loss_scaled_floor(0.3) == 1e-6);
  CHECK(loss_scaled_floor(-0.5) == 1e-6);
  CHECK(loss_scaled_floor(20.0) == doctest::Approx(2e-5));
  CHECK(relative_error(1e-7, 2e-7, loss_scaled_floor(20.0)) == doctest::Approx(0.005));
}
