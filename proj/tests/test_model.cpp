#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "revloc/trainer.hpp"
#include "support.hpp"

namespace revloc {
namespace {

ModelConfig small_config(std::size_t d = 3) {
  ModelConfig cfg;
  cfg.d = d;
  cfg.flnn_hidden = 4;
  cfg.seed = 5;
  return cfg;
}

Model make_model(const ModelConfig& cfg, std::size_t vocab_words = 9) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < vocab_words; ++i) words.push_back("w" + std::to_string(i));
  return Model::create(cfg, Vocabulary::from_words(words));
}

void fill(nn::Parameter& p, double v) { std::fill(p.value.values.begin(), p.value.values.end(), v); }
void zero_all(nn::ParameterSet& ps) {
  for (auto& p : ps.all()) fill(p, 0.0);
}
std::vector<double> values(const nn::Tape& t, nn::Var v) { return {t.value(v).begin(), t.value(v).end()}; }

void randomize(nn::ParameterSet& ps, std::mt19937_64& rng, double bound = 1.0) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& p : ps.all())
    for (auto& v : p.value.values) v = u(rng);
}

// Direct evaluations written from the layer equations.
std::vector<double> matvec(const nn::Tensor& w, const std::vector<double>& x, std::size_t offset = 0) {
  std::vector<double> y(w.rows(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += w.at(i, offset + j) * x[j];
  return y;
}
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double tanh_sum(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::tanh(a[i] + b[i]);
  return s;
}
std::vector<double> softmax(const std::vector<double>& s) {
  double z = 0;
  for (double v : s) z += std::exp(v);
  std::vector<double> out;
  for (double v : s) out.push_back(std::exp(v) / z);
  return out;
}

TEST(Smnn, EqualViewsReturnThatVector) {
  auto m = make_model(small_config());
  std::mt19937_64 rng(1);
  randomize(m.params, rng, 3.0);
  const auto w = Weights::of(m.params);
  nn::Tape t;
  const std::vector<double> v = {0.3, -0.7, 1.1};
  const Var x = t.input(v);
  const Var s = smnn_fuse(t, w, {x, x, x}, t.input(std::vector<double>{1, 2, 3}));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(t.value(s)[i], v[i], 1e-15);
}

TEST(Smnn, ZeroWeightsAverageViews) {
  auto m = make_model(small_config());
  zero_all(m.params);
  const auto w = Weights::of(m.params);
  nn::Tape t;
  const Var s = smnn_fuse(t, w,
                          {t.input(std::vector<double>{3, 0, 0}), t.input(std::vector<double>{0, 3, 0}),
                           t.input(std::vector<double>{0, 0, 6})},
                          t.input(std::vector<double>{1, 1, 1}));
  EXPECT_EQ(values(t, s), (std::vector<double>{1, 1, 2}));
}

TEST(Smnn, MatchesDirectEvaluation) {
  auto m = make_model(small_config());
  std::mt19937_64 rng(2);
  randomize(m.params, rng);
  const auto w = Weights::of(m.params);
  const std::vector<std::vector<double>> views = {{0.2, -0.4, 0.9}, {1.0, 0.5, -0.5}, {-0.8, 0.1, 0.3}};
  const std::vector<double> r = {0.6, -0.2, 0.4};
  const auto wr = matvec(w.Wr_att->value, r);
  std::vector<double> scores;
  for (const auto& v : views) scores.push_back(tanh_sum(matvec(w.Wv->value, v), wr));
  const auto a = softmax(scores);
  nn::Tape t;
  const Var s = smnn_fuse(t, w, {t.input(views[0]), t.input(views[1]), t.input(views[2])}, t.input(r));
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_NEAR(t.value(s)[i], a[0] * views[0][i] + a[1] * views[1][i] + a[2] * views[2][i], 1e-12);
}

struct GateFixture {
  Model model = make_model(small_config(2));
  Weights w = Weights::of(model.params);
  std::vector<double> s = {0.5, 0.8};
  std::vector<std::vector<double>> ns = {{0.1, -0.3}, {0.7, 0.2}};

  GateFixture() {
    std::mt19937_64 rng(4);
    randomize(model.params, rng);
  }

  // u, q, r, u_hat from the gate equations.
  std::vector<double> expected() const {
    const auto ws = matvec(w.Ws->value, s);
    std::vector<double> scores;
    for (const auto& n : ns) scores.push_back(tanh_sum(matvec(w.Wn->value, n), ws));
    const auto a = softmax(scores);
    std::vector<double> u(2, 0.0);
    for (std::size_t k = 0; k < ns.size(); ++k)
      for (std::size_t i = 0; i < 2; ++i) u[i] += a[k] * ns[k][i];
    const auto wq = matvec(w.Wq->value, s), uq = matvec(w.Uq->value, u);
    const auto wr = matvec(w.Wr->value, s), ur = matvec(w.Ur->value, u);
    const auto wu = matvec(w.Wu->value, s), uu = matvec(w.Uu->value, u);
    std::vector<double> out(2);
    for (std::size_t i = 0; i < 2; ++i) {
      const double q = sigmoid(wq[i] + uq[i]);
      const double r = sigmoid(wr[i] + ur[i]);
      const double uh = std::tanh(wu[i] + r * uu[i]);
      out[i] = (1 - q) * s[i] + q * uh;
    }
    return out;
  }

  std::vector<double> run() {
    nn::Tape t;
    std::vector<Var> nv;
    for (const auto& n : ns) nv.push_back(t.input(n));
    return values(t, menn_expand(t, w, t.input(s), nv));
  }
};

TEST(Menn, MatchesDirectEvaluation) {
  GateFixture fx;
  const auto got = fx.run(), want = fx.expected();
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(Menn, ClosedGateReturnsMethodVector) {
  GateFixture fx;
  fill(*fx.w.Wq, -1000.0);
  fill(*fx.w.Uq, 0.0);
  EXPECT_EQ(fx.run(), fx.s);
}

TEST(Menn, OpenGateReturnsCandidate) {
  GateFixture fx;
  fill(*fx.w.Wq, 1000.0);
  fill(*fx.w.Uq, 0.0);
  const auto got = fx.run(), want = fx.expected();
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(got[i], want[i], 1e-15);
  EXPECT_NE(got, fx.s);
}

TEST(Menn, NoNeighborsSkipsExpansion) {
  GateFixture fx;
  fx.ns.clear();
  EXPECT_EQ(fx.run(), fx.s);
}

TEST(Menn, SingleNeighborGetsAllWeight) {
  // With one neighbor u = n; compare against the gate evaluated at u = n.
  GateFixture fx;
  fx.ns = {{0.4, -0.9}};
  const auto got = fx.run(), want = fx.expected();
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(Match, ZeroWeightsGiveOutputBias) {
  auto m = make_model(small_config());
  zero_all(m.params);
  m.params.get("match.b2").value.values[0] = 0.7;
  const auto w = Weights::of(m.params);
  nn::Tape t;
  const Var e = match(t, w, t.input(std::vector<double>{1, 2, 3}), t.input(std::vector<double>{4, 5, 6}));
  EXPECT_DOUBLE_EQ(t.scalar(e), 0.7);
}

TEST(Match, MatchesDirectEvaluation) {
  auto m = make_model(small_config());
  std::mt19937_64 rng(6);
  randomize(m.params, rng);
  const auto w = Weights::of(m.params);
  const std::vector<double> s = {0.1, 0.2, -0.3}, r = {-1.0, 0.5, 0.25};
  auto h = matvec(w.W1->value, s);
  const auto hr = matvec(w.W1->value, r, 3);
  double e = w.b2->value.values[0];
  for (std::size_t i = 0; i < h.size(); ++i) e += w.W2->value.at(0, i) * sigmoid(h[i] + hr[i] + w.b1->value.values[i]);
  nn::Tape t;
  EXPECT_NEAR(t.scalar(match(t, w, t.input(s), t.input(r))), e, 1e-12);
}

TEST(Flnn, ZeroWeightsGiveHalf) {
  auto m = make_model(small_config());
  zero_all(m.params);
  EXPECT_DOUBLE_EQ(flnn_predict(2.5, {0.3, 4, 0.5}, m), 0.5);
}

TEST(Flnn, LogitsLn3AndZeroGiveThreeQuarters) {
  auto m = make_model(small_config());
  zero_all(m.params);
  m.params.get("flnn.b2").value.values = {std::log(3.0), 0.0};
  EXPECT_NEAR(flnn_predict(1.0, {}, m), 0.75, 1e-15);
}

TEST(Flnn, RaisingPositiveWeightRaisesPrediction) {
  auto m = make_model(small_config());
  std::mt19937_64 rng(8);
  randomize(m.params, rng);
  const FixingFeatures f{0.4, 2, 0.5};
  const double before = flnn_predict(0.3, f, m);
  m.params.get("flnn.W2").value.at(0, 0) += 0.5;  // hidden units are sigmoid outputs, so positive
  EXPECT_GT(flnn_predict(0.3, f, m), before);
}

TEST(Flnn, OutputIsProbability) {
  auto m = make_model(small_config());
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 100; ++i) {
    randomize(m.params, rng, 2.0);
    const double y = flnn_predict(u(rng), {std::abs(u(rng)) / 5, std::floor(std::abs(u(rng))), 0.5}, m);
    EXPECT_GT(y, 0.0);
    EXPECT_LT(y, 1.0);
    const auto w = Weights::of(m.params);
    nn::Tape t;
    const Var l = flnn_logits(t, w, t.input(std::vector<double>{0.1}), {0.2, 0.3, 0.4});
    const Var p = t.softmax(l);
    EXPECT_NEAR(t.value(p)[0] + t.value(p)[1], 1.0, 1e-12);
  }
  EXPECT_THROW(flnn_predict(NAN, {}, m), NumericError);
  EXPECT_THROW(flnn_predict(0.0, {INFINITY, 0, 0}, m), NumericError);
}

TEST(Flnn, DisabledFeaturesAreZeroed) {
  ModelConfig cfg = small_config();
  cfg.use_rcfs = false;
  cfg.use_bfrs = false;
  const auto z = feature_inputs({0.9, 3.0, 0.5}, cfg);
  EXPECT_EQ(z[0], 0.0);
  EXPECT_DOUBLE_EQ(z[1], std::log(4.0));
  EXPECT_EQ(z[2], 0.0);
}

TEST(Bce, ClosedForms) {
  EXPECT_EQ(bce(1.0, 1), 0.0);
  EXPECT_EQ(bce(0.0, 0), 0.0);
  EXPECT_NEAR(bce(0.5, 1), std::log(2.0), 1e-15);
  nn::Tape t;
  const Var l = t.input(std::vector<double>{0.0, 0.0});
  EXPECT_NEAR(t.scalar(t.nll_softmax(l, logit_index(1))), std::log(2.0), 1e-15);
}

TEST(EndToEnd, GradientMatchesFiniteDifferences) {
  int checked = 0;
  for (std::uint64_t seed = 1; checked < 20 && seed < 200; ++seed) {
    ModelConfig cfg = small_config(4);
    cfg.seed = seed;
    auto m = make_model(cfg, 7);
    std::mt19937_64 rng(seed);
    randomize(m.params, rng);
    const auto in = fixture::random_instance(rng, 8);
    const auto w = Weights::of(m.params);
    auto f = [&](nn::Tape& t) { return fixture::instance_loss(t, w, cfg, in); };
    nn::Tape probe;
    f(probe);
    if (probe.min_maxpool_margin() < 1e-3) continue;  // maxpool tie: not differentiable here
    std::vector<nn::Parameter*> ps;
    for (auto& p : m.params.all()) ps.push_back(&p);
    const auto r = nn::grad_check(f, ps, 1e-4, 1e-4);
    EXPECT_TRUE(r.passed) << "seed " << seed << " worst " << r.worst << " at " << r.where;
    ++checked;
  }
  EXPECT_EQ(checked, 20);
}

TEST(EndToEnd, LongMethodsAreNeverExpanded) {
  ModelConfig cfg = small_config(4);
  auto m = make_model(cfg, 7);
  std::mt19937_64 rng(3);
  auto in = fixture::random_instance(rng, 8);
  in.method.is_short = false;
  const auto w = Weights::of(m.params);
  nn::Tape a, b;
  const Var la = instance_loss(a, w, cfg, in);
  in.neighbors.clear();
  const Var lb = instance_loss(b, w, cfg, in);
  EXPECT_EQ(a.scalar(la), b.scalar(lb));
}

TEST(EndToEnd, MethodWithoutTextIsDegenerate) {
  auto m = make_model(small_config());
  const auto w = Weights::of(m.params);
  nn::Tape t;
  EXPECT_THROW(embed_method(t, w, EncodedMethod{}), DegenerateInputError);
  EXPECT_EQ(values(t, embed_report(t, w, {})), (std::vector<double>{0, 0, 0}));
}

TEST(Vocab, UnknownIsZeroAndCapsApply) {
  const auto v = Vocabulary::from_words(std::vector<std::string>{"b", "a", "a"});
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(v.id("a"), 1);
  EXPECT_EQ(v.id("zzz"), Vocabulary::kUnknown);
  EXPECT_EQ(v.encode({"b", "q", "a"}, 2), (std::vector<int>{2, 0}));
}

TEST(Persistence, RoundTrip) {
  ModelConfig cfg = small_config();
  cfg.use_bffs = false;
  cfg.learning_rate = 0.1;
  auto m = make_model(cfg);
  std::stringstream ss;
  save_model(ss, m);
  EXPECT_EQ(ss.str().rfind("# revloc model seed=5\n", 0), 0u);
  const auto back = load_model(ss);
  EXPECT_TRUE(back.params == m.params);
  EXPECT_TRUE(back.vocab == m.vocab);
  EXPECT_EQ(back.config.to_map(), m.config.to_map());
}

TEST(Persistence, DetectsVocabularyTampering) {
  auto m = make_model(small_config());
  std::stringstream ss;
  save_model(ss, m);
  std::string text = ss.str();
  text.replace(text.find("\nw3\n"), 4, "\nzz\n");
  std::stringstream in(text);
  EXPECT_THROW(load_model(in), FormatError);
}

// Ranking over hand-built candidates.
struct RankFixture {
  std::vector<MethodRecord> methods;
  BugReportRecord report;
  RankingQuery query;

  RankFixture() {
    for (const char* name : {"zeta", "alpha", "mid"}) {
      MethodRecord m;
      m.id = std::string("A.java::") + name + "()";
      m.tokens = {"w1", name};
      m.statement_count = 2;
      methods.push_back(m);
    }
    report.id = "1";
    report.tokens = {"w1", "w2"};
    query.report = &report;
    for (const auto& m : methods) query.candidates.push_back(&m);
    query.features = {{0.1, 1, 0.5}, {0.2, 0, 1.0}, {0.0, 2, 0.0}};
    query.neighbors = {{1}, {}, {0, 1}};
    query.truth = {0, 1, 0};
  }
};

TEST(Rank, EqualScoresOrderById) {
  RankFixture fx;
  auto m = make_model(small_config());
  zero_all(m.params);
  const auto out = rank_methods(m, fx.query);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].method_id, "A.java::alpha()");
  EXPECT_EQ(out[1].method_id, "A.java::mid()");
  EXPECT_EQ(out[2].method_id, "A.java::zeta()");
}

TEST(Rank, MatchesDirectForwardPass) {
  RankFixture fx;
  auto m = make_model(small_config());
  std::mt19937_64 rng(12);
  randomize(m.params, rng);
  Ranker ranker(m);
  const auto out = ranker.rank(fx.query);
  std::set<std::string> ids;
  const auto w = Weights::of(m.params);
  for (const auto& p : out) {
    ids.insert(p.method_id);
    std::size_t i = 0;
    while (fx.query.candidates[i]->id != p.method_id) ++i;
    std::vector<EncodedMethod> ns;
    for (auto n : fx.query.neighbors[i]) ns.push_back(m.encode(*fx.query.candidates[n]));
    std::vector<const EncodedMethod*> np;
    for (const auto& n : ns) np.push_back(&n);
    nn::Tape t;
    const Var r = embed_report(t, w, m.encode(fx.report));
    const Var l = instance_logits(t, w, m.config, m.encode(*fx.query.candidates[i]), np, r, fx.query.features[i]);
    EXPECT_EQ(p.score, positive_probability(t, l));
  }
  EXPECT_EQ(ids.size(), 3u);
  for (std::size_t i = 1; i < out.size(); ++i) EXPECT_GE(out[i - 1].score, out[i].score);
  EXPECT_EQ(ranker.rank(fx.query).front().score, out.front().score);
}

TEST(Config, SetAndValidate) {
  ModelConfig cfg;
  EXPECT_TRUE(cfg.set("d", "16"));
  EXPECT_TRUE(cfg.set("use_menn", "false"));
  EXPECT_FALSE(cfg.set("unknown", "1"));
  EXPECT_THROW(cfg.set("d", "many"), ArgumentError);
  EXPECT_THROW(cfg.set("use_rcfs", "maybe"), ArgumentError);
  EXPECT_EQ(cfg.d, 16u);
  EXPECT_FALSE(cfg.use_menn);
  cfg.learning_rate = 0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
}

}  // namespace
}  // namespace revloc
