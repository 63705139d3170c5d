#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "dann/locator.hpp"
#include "oracles.hpp"

namespace dann::locator {
namespace {

using Vec = std::vector<double>;

using oracle::attention_oracle;

Tensor stack(const std::vector<Vec>& rows, std::size_t pad_to = 0) {
  const std::size_t n = std::max(rows.size(), pad_to);
  Tensor t = Tensor::zeros(n, rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) t(i, j) = rows[i][j];
  return t;
}

std::vector<Vec> random_rows(Rng& rng, std::size_t n, std::size_t d) {
  std::vector<Vec> out(n, Vec(d));
  for (auto& r : out)
    for (double& v : r) v = rng.uniform(-1, 1);
  return out;
}

struct AttentionFixture {
  ParamStore store;
  AttentionParams p;
  AttentionFixture(std::size_t d_in, std::size_t d_attn, std::size_t d_out, std::uint64_t seed) {
    Rng rng(seed);
    p = add_attention_params(store, "att.", d_in, d_attn, d_out, rng);
    for (double& v : store[p.hidden_b].value.data) v = rng.uniform(-0.3, 0.3);
    for (double& v : store[p.project_b].value.data) v = rng.uniform(-0.3, 0.3);
  }
  Vec run(const std::vector<Vec>& items, std::size_t pad_to = 0) {
    Graph g;
    return g.value(sense_attention(g, store, p, g.constant(stack(items, pad_to)), items.size(), 50).output).data;
  }
  Vec project(const Vec& x) {
    Vec out(p.d_out);
    for (std::size_t c = 0; c < p.d_out; ++c) {
      out[c] = store[p.project_b].value[c];
      for (std::size_t k = 0; k < p.d_in; ++k) out[c] += x[k] * store[p.project_w].value(k, c);
    }
    return out;
  }
};

void expect_near(const Vec& a, const Vec& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "at " << i;
}

TEST(SenseAttention, SingleSenseIsItsProjection) {
  AttentionFixture f(6, 4, 5, 1);
  Rng rng(2);
  const auto items = random_rows(rng, 1, 6);
  expect_near(f.run(items), f.project(items[0]), 1e-14);
}

TEST(SenseAttention, IdenticalSensesSplitEvenly) {
  AttentionFixture f(6, 4, 5, 1);
  Rng rng(3);
  const auto one = random_rows(rng, 1, 6);
  Graph g;
  auto r = sense_attention(g, f.store, f.p, g.constant(stack({one[0], one[0]})), 2, 50);
  EXPECT_EQ(g.value(*r.weights).data, (Vec{0.5, 0.5}));
  expect_near(g.value(r.output).data, f.project(one[0]), 1e-14);
}

TEST(SenseAttention, MatchesStepByStepOracle) {
  AttentionFixture f(6, 4, 5, 4);
  Rng rng(5);
  const auto items = random_rows(rng, 3, 6);
  expect_near(f.run(items), attention_oracle(f.store, f.p, items), 1e-12);
}

TEST(SenseAttention, PaddingSlotsAreInert) {
  AttentionFixture f(6, 4, 5, 4);
  Rng rng(6);
  const auto items = random_rows(rng, 3, 6);
  EXPECT_EQ(f.run(items, 7), f.run(items));
}

TEST(SenseAttention, InvariantUnderSensePermutation) {
  AttentionFixture f(6, 4, 5, 8);
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    auto items = random_rows(rng, 1 + rng.below(6), 6);
    const Vec base = f.run(items);
    rng.shuffle(items);
    expect_near(f.run(items), base, 1e-12);
  }
}

TEST(SenseAttention, EdgeCases) {
  AttentionFixture f(6, 4, 5, 1);
  Graph g;
  auto none = sense_attention(g, f.store, f.p, g.zeros(3, 6), 0, 3);
  EXPECT_EQ(g.value(none.output), Tensor::zeros(1, 5));
  EXPECT_FALSE(none.weights.has_value());
  EXPECT_THROW(sense_attention(g, f.store, f.p, g.zeros(4, 6), 4, 3), ContractError);
}

TEST(PronAttention, Examples) {
  ParamStore store;
  Rng rng(12);
  const ParamId table = store.add("phonemes", {3, 4}, Init::kUniform01, rng);  // D, EH, R
  const AttentionParams p = add_attention_params(store, "pron.", 4, 3, 4, rng);
  Graph g;
  EXPECT_EQ(g.value(pron_attention(g, store, p, table, {}).output), Tensor::zeros(1, 4));

  const std::size_t eh[] = {1};
  Vec expected(4);
  for (std::size_t c = 0; c < 4; ++c) {
    expected[c] = store[p.project_b].value[c];
    for (std::size_t k = 0; k < 4; ++k) expected[c] += store[table].value(1, k) * store[p.project_w].value(k, c);
  }
  expect_near(g.value(pron_attention(g, store, p, table, eh).output).data, expected, 1e-14);

  const std::size_t red[] = {2, 1, 0};
  std::vector<Vec> rows;
  for (std::size_t id : red) {
    const Tensor& t = store[table].value;
    rows.push_back(Vec(t.data.begin() + id * 4, t.data.begin() + id * 4 + 4));
  }
  expect_near(g.value(pron_attention(g, store, p, table, red).output).data, attention_oracle(store, p, rows), 1e-12);

  const std::size_t bad[] = {3};
  EXPECT_THROW(pron_attention(g, store, p, table, bad), IndexError);
}

TEST(Fuse, ZeroInputsAndZeroProjection) {
  ParamStore store;
  Rng rng(0);
  const ParamId w = store.add("w", {7, 2}, Init::kZeros, rng), b = store.add("b", {2}, Init::kZeros, rng);
  Graph g;
  const Tensor& y = g.value(fuse_and_project(g, store, w, b, g.zeros(1, 3), g.zeros(1, 2), g.zeros(1, 2), 3, 2, 2));
  EXPECT_EQ(y.data, (Vec{0, 0}));
}

TEST(Fuse, BlockStructureAndLinearOracle) {
  ParamStore store;
  Rng rng(21);
  const ParamId w = store.add("w", {7, 2}, Init::kGlorot, rng), b = store.add("b", {2}, Init::kUniform01, rng);
  const auto parts = random_rows(rng, 3, 3);
  const Tensor c = Tensor::matrix({{parts[0][0], parts[0][1], parts[0][2]}});
  const Tensor s = Tensor::matrix({{parts[1][0], parts[1][1]}});
  const Tensor p = Tensor::matrix({{parts[2][0], parts[2][1]}});

  Graph g;
  const Vec full = g.value(fuse_and_project(g, store, w, b, g.constant(c), g.constant(s), g.constant(p), 3, 2, 2)).data;
  const Vec fused{c[0], c[1], c[2], s[0], s[1], p[0], p[1]};
  for (std::size_t j = 0; j < 2; ++j) {
    double expected = store[b].value[j];
    for (std::size_t k = 0; k < 7; ++k) expected += fused[k] * store[w].value(k, j);
    EXPECT_NEAR(full[j], expected, 1e-14);
  }

  // With E^S = E^P = 0 the result is unchanged when the non-context weight rows are zeroed.
  const Vec context_only =
      g.value(fuse_and_project(g, store, w, b, g.constant(c), g.zeros(1, 2), g.zeros(1, 2), 3, 2, 2)).data;
  for (std::size_t k = 3; k < 7; ++k) store[w].value(k, 0) = store[w].value(k, 1) = 0.0;
  Graph g2;
  EXPECT_EQ(g2.value(fuse_and_project(g2, store, w, b, g2.constant(c), g2.constant(s), g2.constant(p), 3, 2, 2)).data,
            context_only);
}

TEST(Fuse, DimensionMismatchNamesStage) {
  ParamStore store;
  Rng rng(0);
  const ParamId w = store.add("w", {7, 2}, Init::kZeros, rng), b = store.add("b", {2}, Init::kZeros, rng);
  Graph g;
  try {
    fuse_and_project(g, store, w, b, g.zeros(1, 3), g.zeros(1, 5), g.zeros(1, 2), 3, 2, 2);
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("sense"), std::string::npos);
  }
}

TEST(Predict, ArgmaxTieBreak) {
  const Vec margins{0.1, 2.0, 0.3};
  EXPECT_EQ(DannModel::argmax_earliest(margins), 1u);
  const Vec tie{0.2, 0.7, 0.1, 0.7};
  EXPECT_EQ(DannModel::argmax_earliest(tie), 1u);
  EXPECT_THROW(DannModel::argmax_earliest(Vec{}), ContractError);
}

// Small hand-made lexicon and corpus where "bank" and "read" carry senses and phonemes.
struct Toy {
  lexicon::Lexicon lex;
  std::vector<corpus::PunInstance> sentences;

  Toy() {
    std::istringstream cmu("READ  R EH1 D\nBANK  B AE1 NG K\nTHE  DH AH0\nRIVER  R IH1 V ER0\nBOOK  B UH1 K\n");
    lex.pronunciations = lexicon::parse_cmudict(cmu);
    std::istringstream tsv(
        "bank\tbank%1\ta financial institution\nbank\tbank%2\tsloping land beside water\n"
        "bank\tbank%3\ta supply held in reserve\nbank\tbank%4\ta flight maneuver\n"
        "read\tread%1\tinterpret written words\nread\tread%2\thave or contain a certain wording\n"
        "river\triver%1\ta large natural stream of water\nbook\tbook%1\ta written work\n");
    lex.senses = lexicon::parse_sense_inventory(tsv);
    const std::vector<std::pair<std::vector<std::string>, std::size_t>> raw{
        {{"the", "river", "bank", "rose"}, 2}, {{"read", "the", "book"}, 0},  {{"a", "bank", "of", "the", "river"}, 1},
        {{"i", "read", "it"}, 1},              {{"the", "book", "bank"}, 2},  {{"river", "read", "book"}, 1},
        {{"bank", "the", "read"}, 0},          {{"book", "river", "bank"}, 2}};
    for (std::size_t i = 0; i < raw.size(); ++i) {
      corpus::PunInstance inst;
      inst.text_id = "t" + std::to_string(i);
      for (std::size_t j = 0; j < raw[i].first.size(); ++j)
        inst.tokens.push_back({inst.text_id + "_" + std::to_string(j + 1), raw[i].first[j]});
      inst.gold_pun_token = inst.tokens[raw[i].second].id;
      sentences.push_back(std::move(inst));
    }
  }

  ModelConfig tiny_config() const {
    ModelConfig c;
    c.d_s = 3;
    c.d_p = 4;
    c.d_attn = 4;
    c.d_model = 8;
    c.seed = 3;
    return c;
  }

  DannModel model(const ModelConfig& c) const {
    return DannModel(c, build_locator_vocab(sentences, lex), lex.pronunciations.phoneme_vocabulary());
  }
};

TEST(DannModel, PrepareRespectsSenseCap) {
  Toy toy;
  DannModel m = toy.model(toy.tiny_config());
  const PreparedSentence s = m.prepare(toy.sentences[0], toy.lex);
  EXPECT_EQ(s.n_tokens, 4u);
  EXPECT_EQ(s.token_senses[2].size(), 3u);  // bank has 4 senses, d_s = 3
  EXPECT_EQ(s.token_senses[0].size(), 0u);
  EXPECT_EQ(s.token_phonemes[3].size(), 0u);  // "rose" has no pronunciation entry
  EXPECT_EQ(s.labels, (std::vector<std::size_t>{0, 0, 1, 0}));
}

TEST(DannModel, WordsWithoutSensesGiveFiniteLogits) {
  Toy toy;
  DannModel m = toy.model(toy.tiny_config());
  corpus::PunInstance inst;
  inst.text_id = "z";
  inst.tokens = {{"z_1", "zzzq"}, {"z_2", ","}};
  Graph g;
  EXPECT_TRUE(g.value(m.logits(g, m.prepare(inst, toy.lex))).all_finite());
  inst.tokens.clear();
  EXPECT_THROW(m.predict_pun(inst, toy.lex), ContractError);
}

TEST(DannModel, AblationFlags) {
  Toy toy;
  const ModelConfig base = toy.tiny_config();
  DannModel full = toy.model(base);
  DannModel same = toy.model(ablate(base, true, true));
  const PreparedSentence s = full.prepare(toy.sentences[0], toy.lex);
  EXPECT_EQ(full.pun_probabilities(s), same.pun_probabilities(s));

  // Disabled branches must make the logits independent of the lexical inputs they read.
  PreparedSentence no_lex = s;
  for (auto& v : no_lex.token_senses) v.clear();
  for (auto& v : no_lex.token_phonemes) v.clear();
  PreparedSentence no_senses = s;
  for (auto& v : no_senses.token_senses) v.clear();

  DannModel sense_off = toy.model(ablate(base, false, true));
  EXPECT_EQ(sense_off.pun_probabilities(s), sense_off.pun_probabilities(no_senses));
  EXPECT_NE(full.pun_probabilities(s), full.pun_probabilities(no_senses));

  DannModel both_off = toy.model(ablate(base, false, false));
  EXPECT_EQ(both_off.pun_probabilities(s), both_off.pun_probabilities(no_lex));
}

TEST(DannModel, GradCheckAtInitAndAfterTraining) {
  Toy toy;
  DannModel m = toy.model(toy.tiny_config());
  std::vector<PreparedSentence> batch{m.prepare(toy.sentences[0], toy.lex), m.prepare(toy.sentences[2], toy.lex)};
  auto two_sentence_loss = [&](Graph& g) { return g.add(m.loss(g, batch[0]), m.loss(g, batch[1])); };
  EXPECT_LE(grad_check(m.params(), two_sentence_loss).max_rel_error, 1e-4);
  fit_locator(m, batch, TrainConfig{5, 1e-2, 2, 1});
  EXPECT_LE(grad_check(m.params(), two_sentence_loss).max_rel_error, 1e-4);
}

TEST(Training, ZeroLearningRateLeavesParameters) {
  Toy toy;
  DannModel m = toy.model(toy.tiny_config());
  const auto before = m.params().snapshot();
  std::vector<PreparedSentence> data;
  for (const auto& s : toy.sentences) data.push_back(m.prepare(s, toy.lex));
  fit_locator(m, data, TrainConfig{3, 0.0, 4, 1});
  EXPECT_EQ(m.params().snapshot(), before);
}

TEST(Training, LossDecreasesOnEightSentences) {
  Toy toy;
  const auto run = train_locator(toy.sentences, toy.lex, toy.tiny_config(), TrainConfig{30, 1e-2, 4, 1});
  ASSERT_EQ(run.loss_curve.size(), 30u);
  EXPECT_LT(run.loss_curve.back(), run.loss_curve.front());
}

TEST(Training, SeededRunsAreIdenticalAndCheckpointRestores) {
  Toy toy;
  const TrainConfig tc{4, 1e-2, 4, 9};
  auto a = train_locator(toy.sentences, toy.lex, toy.tiny_config(), tc);
  auto b = train_locator(toy.sentences, toy.lex, toy.tiny_config(), tc);
  EXPECT_EQ(a.loss_curve, b.loss_curve);
  EXPECT_EQ(a.model.params().snapshot(), b.model.params().snapshot());

  std::stringstream buf;
  a.model.save(buf);
  DannModel restored = DannModel::load(buf);
  for (const auto& inst : toy.sentences) {
    const auto s = a.model.prepare(inst, toy.lex);
    EXPECT_EQ(restored.pun_probabilities(restored.prepare(inst, toy.lex)), a.model.pun_probabilities(s));
    EXPECT_EQ(restored.predict_pun(inst, toy.lex), a.model.predict_pun(inst, toy.lex));
  }
}

}  // namespace
}  // namespace dann::locator
