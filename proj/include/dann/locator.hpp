#pragma once

#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "dann/corpus.hpp"
#include "dann/encoder.hpp"
#include "dann/error.hpp"
#include "dann/lexicon.hpp"
#include "dann/numcore.hpp"

namespace dann::locator {

struct ModelConfig {
  std::size_t d_s = 50;     // senses per word
  std::size_t d_p = 16;     // phoneme embedding width
  std::size_t d_attn = 16;  // attention hidden width
  std::size_t d_model = 32;
  std::size_t n_layers = 1;
  std::size_t max_len = 64;
  std::uint64_t seed = 7;
  bool use_sense = true;
  bool use_pron = true;

  void validate() const {
    if (d_s < 1) throw ConfigError("d_s must be >= 1");
    if (d_p < 1 || d_attn < 1 || d_model < 1) throw ConfigError("model dimensions must be positive");
  }
};

/// Returns the config with the sense and/or pronunciation branch disabled.
/// Disabled branches keep their parameters but contribute zeros.
inline ModelConfig ablate(ModelConfig cfg, bool use_sense, bool use_pron) {
  cfg.use_sense = use_sense;
  cfg.use_pron = use_pron;
  return cfg;
}

/// Hidden layer + query scoring + projection of one attention branch.
struct AttentionParams {
  ParamId hidden_w, hidden_b;
  ParamId query;
  ParamId project_w, project_b;
  std::size_t d_in = 0, d_attn = 0, d_out = 0;
};

inline AttentionParams add_attention_params(ParamStore& store, const std::string& prefix, std::size_t d_in,
                                            std::size_t d_attn, std::size_t d_out, Rng& rng) {
  if (d_attn == 0) throw ConfigError("attention width must be positive");
  AttentionParams p;
  p.d_in = d_in;
  p.d_attn = d_attn;
  p.d_out = d_out;
  p.hidden_w = store.add(prefix + "hidden_w", {d_in, d_attn}, Init::kGlorot, rng);
  p.hidden_b = store.add(prefix + "hidden_b", {d_attn}, Init::kZeros, rng);
  p.query = store.add(prefix + "query", {d_attn, 1}, Init::kGlorot, rng);
  p.project_w = store.add(prefix + "project_w", {d_in, d_out}, Init::kGlorot, rng);
  p.project_b = store.add(prefix + "project_b", {d_out}, Init::kZeros, rng);
  return p;
}

struct AttentionResult {
  Var output;                  // 1 x d_out
  std::optional<Var> weights;  // 1 x rows, absent when nothing is attended
};

/// Scores each item as tanh(item * W + b) . q, normalizes with a softmax over
/// the first `real_count` rows (the rest are masked to exactly zero), and
/// returns the weighted sum of the projected items.
inline AttentionResult attend(Graph& g, ParamStore& store, const AttentionParams& p, Var items,
                              std::size_t real_count) {
  if (real_count == 0) return {g.zeros(1, p.d_out), std::nullopt};
  const std::size_t rows = g.value(items).rows();
  if (real_count > rows) {
    throw ContractError("attention: " + std::to_string(real_count) + " real slots but only " +
                        std::to_string(rows) + " rows");
  }
  Var hidden = g.tanh(g.linear(items, g.param(store, p.hidden_w), g.param(store, p.hidden_b)));
  Var scores = g.transpose(g.matmul(hidden, g.param(store, p.query)));
  std::vector<double> mask(rows, 0.0);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(real_count), 1.0);
  Var weights = g.masked_softmax(scores, mask);
  Var projected = g.linear(items, g.param(store, p.project_w), g.param(store, p.project_b));
  return {g.matmul(weights, projected), weights};
}

/// E^S for one word: attention over its (possibly zero-padded) sense vectors.
inline AttentionResult sense_attention(Graph& g, ParamStore& store, const AttentionParams& p, Var sense_vectors,
                                       std::size_t real_count, std::size_t d_s) {
  if (real_count > d_s) {
    throw ContractError("sense attention got " + std::to_string(real_count) + " senses, cap is " +
                        std::to_string(d_s));
  }
  return attend(g, store, p, sense_vectors, real_count);
}

/// E^P for one word: attention over its embedded phonemes.
inline AttentionResult pron_attention(Graph& g, ParamStore& store, const AttentionParams& p, ParamId phoneme_table,
                                      std::span<const std::size_t> phoneme_ids) {
  if (phoneme_ids.empty()) return {g.zeros(1, p.d_out), std::nullopt};
  Var embedded = g.embedding(g.param(store, phoneme_table), phoneme_ids);
  return attend(g, store, p, embedded, phoneme_ids.size());
}

/// logits = [E^c | E^S | E^P] * W + b.
inline Var fuse_and_project(Graph& g, ParamStore& store, ParamId out_w, ParamId out_b, Var context, Var sense,
                            Var pron, std::size_t d_context, std::size_t d_sense, std::size_t d_pron) {
  auto check = [&](const char* stage, Var v, std::size_t width) {
    if (g.value(v).cols() != width) {
      throw DimensionError(std::string("fuse: ") + stage + " width " + std::to_string(g.value(v).cols()) +
                           ", expected " + std::to_string(width));
    }
  };
  check("contextual", context, d_context);
  check("sense", sense, d_sense);
  check("pronunciation", pron, d_pron);
  const Var parts[] = {context, sense, pron};
  return g.linear(g.concat_cols(parts), g.param(store, out_w), g.param(store, out_b));
}

/// Ids and lookups for one sentence, resolved once before training.
struct PreparedSentence {
  std::vector<std::size_t> sequence;                   // CLS tokens SEP
  std::size_t n_tokens = 0;
  std::vector<std::vector<std::size_t>> glosses;       // unique gloss id sequences
  std::vector<std::vector<std::size_t>> token_senses;  // per token: indices into glosses, <= d_s
  std::vector<std::vector<std::size_t>> token_phonemes;
  std::vector<std::size_t> labels;                     // per token {0=O, 1=P}; empty without gold
};

/// The dual-attentive locator: contextual encoder, sense attention,
/// pronunciation attention and a two-way output projection per token.
class DannModel {
 public:
  DannModel(ModelConfig cfg, encoder::Vocab vocab, std::vector<std::string> phonemes)
      : cfg_(cfg), vocab_(std::move(vocab)), phonemes_(std::move(phonemes)) {
    cfg_.validate();
    for (std::size_t i = 0; i < phonemes_.size(); ++i) phoneme_ids_.emplace(phonemes_[i], i);
    Rng rng(cfg_.seed);
    encoder::EncoderConfig ec{cfg_.d_model, cfg_.n_layers, cfg_.max_len, vocab_.size()};
    encoder_ = encoder::Encoder(store_, ec, rng, "encoder.");
    phoneme_table_ = store_.add("phoneme_embedding", {phonemes_.size(), cfg_.d_p}, Init::kUniform01, rng);
    sense_ = add_attention_params(store_, "sense_attention.", cfg_.d_model, cfg_.d_attn, cfg_.d_model, rng);
    pron_ = add_attention_params(store_, "pron_attention.", cfg_.d_p, cfg_.d_attn, cfg_.d_p, rng);
    out_w_ = store_.add("output.w", {fused_width(), 2}, Init::kGlorot, rng);
    out_b_ = store_.add("output.b", {2}, Init::kZeros, rng);
  }

  std::size_t fused_width() const { return cfg_.d_model + cfg_.d_model + cfg_.d_p; }

  ParamStore& params() noexcept { return store_; }
  const ParamStore& params() const noexcept { return store_; }
  const ModelConfig& config() const noexcept { return cfg_; }
  void set_ablation(bool use_sense, bool use_pron) { cfg_ = ablate(cfg_, use_sense, use_pron); }
  const encoder::Vocab& vocab() const noexcept { return vocab_; }
  const encoder::Encoder& encoder() const noexcept { return encoder_; }
  const AttentionParams& sense_params() const noexcept { return sense_; }
  const AttentionParams& pron_params() const noexcept { return pron_; }
  ParamId phoneme_table() const noexcept { return phoneme_table_; }
  ParamId output_weight() const noexcept { return out_w_; }
  ParamId output_bias() const noexcept { return out_b_; }

  PreparedSentence prepare(const corpus::PunInstance& inst, const lexicon::Lexicon& lex) const {
    PreparedSentence p;
    const auto words = inst.lowered_surfaces();
    p.n_tokens = words.size();
    p.sequence.push_back(encoder::Vocab::kCls);
    for (const auto& w : words) p.sequence.push_back(vocab_.id(w));
    p.sequence.push_back(encoder::Vocab::kSep);
    std::unordered_map<std::string, std::size_t> gloss_slot;
    for (const auto& w : words) {
      std::vector<std::size_t> slots;
      for (const auto* sense : lex.senses.lookup_senses(w, cfg_.d_s).senses) {
        auto [it, inserted] = gloss_slot.emplace(sense->sense_key, p.glosses.size());
        if (inserted) p.glosses.push_back(vocab_.ids(tokenize_text(sense->gloss)));
        slots.push_back(it->second);
      }
      p.token_senses.push_back(std::move(slots));
      std::vector<std::size_t> ph;
      for (const auto& sym : lex.pronunciations.lookup_phonemes(w)) {
        auto it = phoneme_ids_.find(sym);
        if (it == phoneme_ids_.end()) throw IndexError("phoneme '" + sym + "' unknown to the model");
        ph.push_back(it->second);
      }
      p.token_phonemes.push_back(std::move(ph));
    }
    if (inst.gold_pun_token) {
      for (auto tag : corpus::build_bio_labels(inst)) p.labels.push_back(static_cast<std::size_t>(tag));
    }
    return p;
  }

  /// Per-token {O, P} logits, n_tokens x 2.
  Var logits(Graph& g, const PreparedSentence& s) {
    if (s.n_tokens == 0) throw ContractError("cannot score an empty sentence");
    const std::size_t n = s.n_tokens, d = cfg_.d_model;

    const encoder::Encoded enc = encoder_.encode_sequence(g, store_, s.sequence);
    const std::size_t available = g.value(enc.contextual).rows() - 1;
    Var context = g.slice_rows(enc.contextual, 1, std::min(n, available));
    if (available < n) {
      const Var parts[] = {context, g.zeros(n - available, d)};
      context = g.concat_rows(parts);
    }

    Var sense = g.zeros(n, d);
    if (cfg_.use_sense) {
      std::vector<std::optional<Var>> gloss_vectors(s.glosses.size());
      std::vector<Var> rows;
      rows.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& slots = s.token_senses[i];
        if (slots.empty()) {
          rows.push_back(g.zeros(1, d));
          continue;
        }
        std::vector<Var> vecs;
        for (std::size_t slot : slots) {
          if (!gloss_vectors[slot]) gloss_vectors[slot] = encoder_.encode_gloss(g, store_, s.glosses[slot]);
          vecs.push_back(*gloss_vectors[slot]);
        }
        rows.push_back(sense_attention(g, store_, sense_, g.concat_rows(vecs), vecs.size(), cfg_.d_s).output);
      }
      sense = g.concat_rows(rows);
    }

    Var pron = g.zeros(n, cfg_.d_p);
    if (cfg_.use_pron) {
      std::vector<Var> rows;
      rows.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        rows.push_back(pron_attention(g, store_, pron_, phoneme_table_, s.token_phonemes[i]).output);
      }
      pron = g.concat_rows(rows);
    }
    return fuse_and_project(g, store_, out_w_, out_b_, context, sense, pron, d, d, cfg_.d_p);
  }

  /// Mean per-token cross-entropy against the {O, P} labels.
  Var loss(Graph& g, const PreparedSentence& s) {
    if (s.labels.size() != s.n_tokens) throw ContractError("sentence has no gold labels");
    return g.cross_entropy(logits(g, s), s.labels);
  }

  /// Softmax probability of P for every token.
  std::vector<double> pun_probabilities(const PreparedSentence& s) {
    Graph g;
    const Tensor& L = g.value(logits(g, s));
    std::vector<double> out(L.rows());
    for (std::size_t i = 0; i < L.rows(); ++i) {
      const double m = std::max(L(i, 0), L(i, 1));
      const double e0 = std::exp(L(i, 0) - m), e1 = std::exp(L(i, 1) - m);
      out[i] = e1 / (e0 + e1);
    }
    return out;
  }

  std::string predict_pun(const corpus::PunInstance& inst, const lexicon::Lexicon& lex) {
    if (inst.tokens.empty()) throw ContractError("no prediction for empty text " + inst.text_id);
    return inst.tokens[argmax_earliest(pun_probabilities(prepare(inst, lex)))].id;
  }

  /// Index of the largest value; ties go to the earliest index.
  static std::size_t argmax_earliest(std::span<const double> values) {
    if (values.empty()) throw ContractError("argmax of an empty list");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
      if (values[i] > values[best]) best = i;
    return best;
  }

  nlohmann::json checkpoint_config() const {
    return {{"model", "dann"},
            {"d_s", cfg_.d_s},
            {"d_p", cfg_.d_p},
            {"d_A", cfg_.d_attn},
            {"d_model", cfg_.d_model},
            {"n_layers", cfg_.n_layers},
            {"max_len", cfg_.max_len},
            {"use_sense", cfg_.use_sense},
            {"use_pron", cfg_.use_pron},
            {"vocab", vocab_.to_json()},
            {"phonemes", phonemes_}};
  }

  void save(std::ostream& os) const { save_checkpoint(os, store_, cfg_.seed, checkpoint_config()); }

  static DannModel load(std::istream& is) {
    const Checkpoint ck = read_checkpoint(is);
    const auto& c = ck.config();
    if (c.value("model", "") != "dann") throw ContractError("checkpoint does not hold a locator model");
    ModelConfig cfg;
    cfg.d_s = c.at("d_s");
    cfg.d_p = c.at("d_p");
    cfg.d_attn = c.at("d_A");
    cfg.d_model = c.at("d_model");
    cfg.n_layers = c.at("n_layers");
    cfg.max_len = c.at("max_len");
    cfg.use_sense = c.at("use_sense");
    cfg.use_pron = c.at("use_pron");
    cfg.seed = ck.seed();
    DannModel m(cfg, encoder::Vocab::from_json(c.at("vocab")), c.at("phonemes").get<std::vector<std::string>>());
    apply_checkpoint(ck, m.store_);
    return m;
  }

 private:
  ModelConfig cfg_;
  encoder::Vocab vocab_;
  std::vector<std::string> phonemes_;
  std::unordered_map<std::string, std::size_t> phoneme_ids_;
  ParamStore store_;
  encoder::Encoder encoder_;
  ParamId phoneme_table_;
  AttentionParams sense_, pron_;
  ParamId out_w_, out_b_;
};

/// Vocabulary from training sentences and the glosses of every sense their
/// words can take.
inline encoder::Vocab build_locator_vocab(const std::vector<corpus::PunInstance>& train,
                                          const lexicon::Lexicon& lex) {
  std::vector<std::vector<std::string>> seqs;
  for (const auto& inst : train) {
    auto words = inst.lowered_surfaces();
    for (const auto& w : words)
      for (const auto* sense : lex.senses.candidates(w)) seqs.push_back(tokenize_text(sense->gloss));
    seqs.push_back(std::move(words));
  }
  return encoder::build_vocab(seqs);
}

struct TrainConfig {
  std::size_t epochs = 50;
  double lr = 5e-3;
  std::size_t batch_size = 8;
  std::uint64_t seed = 7;
};

struct LocatorTraining {
  DannModel model;
  std::vector<double> loss_curve;  // mean training loss per epoch
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Mean loss over prepared sentences without updating anything.
inline double mean_loss(DannModel& model, const std::vector<PreparedSentence>& data) {
  double total = 0.0;
  for (const auto& s : data) {
    Graph g;
    total += g.value(model.loss(g, s))[0];
  }
  return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

/// Adam on mean per-token cross-entropy, minibatches in a seeded order.
inline void fit_locator(DannModel& model, const std::vector<PreparedSentence>& data, const TrainConfig& tc,
                        std::vector<double>* curve = nullptr, const EpochCallback& on_epoch = {}) {
  if (tc.batch_size == 0) throw ConfigError("batch_size must be positive");
  Adam adam(AdamConfig{tc.lr});
  Rng order_rng(tc.seed ^ 0x6C6F6361746F72ULL);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    order_rng.shuffle(order);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t end = std::min(order.size(), start + tc.batch_size);
      const double weight = 1.0 / static_cast<double>(end - start);
      model.params().zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        Graph g;
        Var loss = model.loss(g, data[order[b]]);
        const double value = g.value(loss)[0];
        if (!std::isfinite(value)) {
          throw NonFiniteError("non-finite locator loss at epoch " + std::to_string(epoch) + ", step " +
                               std::to_string(b));
        }
        total += value;
        g.backward(g.scale(loss, weight));
      }
      adam.step(model.params());
    }
    const double mean = data.empty() ? 0.0 : total / static_cast<double>(data.size());
    if (curve) curve->push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
}

inline LocatorTraining train_locator(const std::vector<corpus::PunInstance>& train, const lexicon::Lexicon& lex,
                                     const ModelConfig& cfg, const TrainConfig& tc, const EpochCallback& on_epoch = {}) {
  for (const auto& inst : train) {
    if (!inst.gold_pun_token) throw ContractError("training instance " + inst.text_id + " has no gold pun token");
  }
  LocatorTraining out{DannModel(cfg, build_locator_vocab(train, lex), lex.pronunciations.phoneme_vocabulary()), {}};
  std::vector<PreparedSentence> data;
  data.reserve(train.size());
  for (const auto& inst : train)
    if (!inst.tokens.empty()) data.push_back(out.model.prepare(inst, lex));
  fit_locator(out.model, data, tc, &out.loss_curve, on_epoch);
  return out;
}

}  // namespace dann::locator
