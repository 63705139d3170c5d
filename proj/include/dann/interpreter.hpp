#pragma once

#include <cmath>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dann/corpus.hpp"
#include "dann/encoder.hpp"
#include "dann/error.hpp"
#include "dann/lexicon.hpp"
#include "dann/numcore.hpp"

namespace dann::interp {

struct InterpConfig {
  std::size_t d_model = 32;
  std::size_t n_layers = 2;
  std::size_t max_len = 64;
  std::uint64_t seed = 7;
};

/// Top-two senses of a pun token, or an abstention.
struct SensePrediction {
  std::string token_id;
  std::optional<std::pair<std::string, std::string>> top2;
  std::pair<double, double> probabilities{0.0, 0.0};

  bool abstained() const noexcept { return !top2.has_value(); }
};

/// CLS pun SEP gloss SEP
inline std::vector<std::size_t> serialize_pair(const encoder::Vocab& vocab, const std::vector<std::string>& pun,
                                               const std::vector<std::string>& gloss) {
  if (pun.empty()) throw ContractError("pun-gloss pair with no pun tokens");
  std::vector<std::size_t> seq{encoder::Vocab::kCls};
  for (const auto& t : pun) seq.push_back(vocab.id(t));
  seq.push_back(encoder::Vocab::kSep);
  for (const auto& t : gloss) seq.push_back(vocab.id(t));
  seq.push_back(encoder::Vocab::kSep);
  return seq;
}

/// Sentence-pair classifier: encoder CLS vector -> linear -> {no, yes}.
class InterpModel {
 public:
  InterpModel(InterpConfig cfg, encoder::Vocab vocab) : cfg_(cfg), vocab_(std::move(vocab)) {
    Rng rng(cfg_.seed);
    encoder_ = encoder::Encoder(store_, {cfg_.d_model, cfg_.n_layers, cfg_.max_len, vocab_.size()}, rng, "encoder.");
    classifier_w_ = store_.add("classifier.w", {cfg_.d_model, 2}, Init::kGlorot, rng);
    classifier_b_ = store_.add("classifier.b", {2}, Init::kZeros, rng);
  }

  ParamStore& params() noexcept { return store_; }
  const ParamStore& params() const noexcept { return store_; }
  const InterpConfig& config() const noexcept { return cfg_; }
  const encoder::Vocab& vocab() const noexcept { return vocab_; }
  ParamId classifier_weight() const noexcept { return classifier_w_; }
  ParamId classifier_bias() const noexcept { return classifier_b_; }
  const encoder::Encoder& encoder() const noexcept { return encoder_; }

  std::vector<std::size_t> serialize(const corpus::PairExample& pair) const {
    return serialize_pair(vocab_, pair.pun_tokens, pair.gloss_tokens);
  }

  /// 1 x 2 logits for one serialized pair.
  Var logits(Graph& g, std::span<const std::size_t> sequence) {
    const encoder::Encoded enc = encoder_.encode_sequence(g, store_, sequence);
    return g.linear(enc.pooled, g.param(store_, classifier_w_), g.param(store_, classifier_b_));
  }

  Var loss(Graph& g, std::span<const std::size_t> sequence, corpus::PairLabel label) {
    const std::size_t lab[] = {static_cast<std::size_t>(label)};
    return g.cross_entropy(logits(g, sequence), lab);
  }

  double yes_probability(std::span<const std::size_t> sequence) {
    Graph g;
    const Tensor& L = g.value(logits(g, sequence));
    const double m = std::max(L[0], L[1]);
    const double no = std::exp(L[0] - m), yes = std::exp(L[1] - m);
    return yes / (no + yes);
  }

  /// softmax(classifier(CLS))[yes]
  double score_pair(const corpus::PairExample& pair) { return yes_probability(serialize(pair)); }

  nlohmann::json checkpoint_config() const {
    return {{"model", "interpreter"},
            {"d_model", cfg_.d_model},
            {"n_layers", cfg_.n_layers},
            {"max_len", cfg_.max_len},
            {"vocab", vocab_.to_json()}};
  }

  void save(std::ostream& os) const { save_checkpoint(os, store_, cfg_.seed, checkpoint_config()); }

  static InterpModel load(std::istream& is) {
    const Checkpoint ck = read_checkpoint(is);
    const auto& c = ck.config();
    if (c.value("model", "") != "interpreter") throw ContractError("checkpoint does not hold an interpreter model");
    InterpConfig cfg{c.at("d_model"), c.at("n_layers"), c.at("max_len"), ck.seed()};
    InterpModel m(cfg, encoder::Vocab::from_json(c.at("vocab")));
    apply_checkpoint(ck, m.store_);
    return m;
  }

 private:
  InterpConfig cfg_;
  encoder::Vocab vocab_;
  ParamStore store_;
  encoder::Encoder encoder_;
  ParamId classifier_w_, classifier_b_;
};

inline encoder::Vocab build_pair_vocab(const std::vector<corpus::PairExample>& pairs) {
  std::vector<std::vector<std::string>> seqs;
  for (const auto& p : pairs) {
    seqs.push_back(p.pun_tokens);
    seqs.push_back(p.gloss_tokens);
  }
  return encoder::build_vocab(seqs);
}

struct TrainConfig {
  std::size_t epochs = 50;
  double lr = 1e-3;
  std::size_t batch_size = 8;
  std::uint64_t seed = 7;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Adam on pair cross-entropy. Returns the mean loss per epoch.
inline std::vector<double> fit_interpreter(InterpModel& model, const std::vector<corpus::PairExample>& pairs,
                                           const TrainConfig& tc, const EpochCallback& on_epoch = {}) {
  if (tc.batch_size == 0) throw ConfigError("batch_size must be positive");
  std::vector<std::vector<std::size_t>> seqs;
  seqs.reserve(pairs.size());
  for (const auto& p : pairs) seqs.push_back(model.serialize(p));
  Adam adam(AdamConfig{tc.lr});
  Rng order_rng(tc.seed ^ 0x696E74657270ULL);
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> curve;
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    order_rng.shuffle(order);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t end = std::min(order.size(), start + tc.batch_size);
      const double weight = 1.0 / static_cast<double>(end - start);
      model.params().zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        Graph g;
        Var loss = model.loss(g, seqs[order[b]], pairs[order[b]].label);
        const double value = g.value(loss)[0];
        if (!std::isfinite(value)) {
          throw NonFiniteError("non-finite interpreter loss at epoch " + std::to_string(epoch) + ", step " +
                               std::to_string(b));
        }
        total += value;
        g.backward(g.scale(loss, weight));
      }
      adam.step(model.params());
    }
    const double mean = pairs.empty() ? 0.0 : total / static_cast<double>(pairs.size());
    curve.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return curve;
}

struct InterpTraining {
  InterpModel model;
  std::vector<double> loss_curve;
};

inline InterpTraining train_interpreter(const std::vector<corpus::PairExample>& pairs, const InterpConfig& cfg,
                                        const TrainConfig& tc, const EpochCallback& on_epoch = {}) {
  InterpTraining out{InterpModel(cfg, build_pair_vocab(pairs)), {}};
  out.loss_curve = fit_interpreter(out.model, pairs, tc, on_epoch);
  return out;
}

/// Picks the two highest-scoring keys; ties keep inventory order.
inline SensePrediction top2_from_scores(std::string token_id, const std::vector<std::string>& keys,
                                        const std::vector<double>& scores) {
  SensePrediction out;
  out.token_id = std::move(token_id);
  if (keys.size() < 2) return out;
  std::size_t first = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[first]) first = i;
  std::size_t second = first == 0 ? 1 : 0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (i != first && scores[i] > scores[second]) second = i;
  out.top2 = std::make_pair(keys[first], keys[second]);
  out.probabilities = {scores[first], scores[second]};
  return out;
}

/// Scores every candidate sense of the gold pun word and keeps the top two.
/// Fewer than two candidates abstains.
inline SensePrediction predict_top2(const corpus::PunInstance& inst, const lexicon::SenseInventory& inventory,
                                    InterpModel& model) {
  const corpus::Token* pun = inst.gold_token();
  if (!pun) throw ContractError("interpretation needs the pun location of " + inst.text_id);
  const auto candidates = inventory.candidates(pun->surface);
  std::vector<std::string> keys;
  std::vector<double> scores;
  if (candidates.size() >= 2) {
    const auto words = inst.lowered_surfaces();
    for (const auto* sense : candidates) {
      keys.push_back(sense->sense_key);
      scores.push_back(model.yes_probability(serialize_pair(model.vocab(), words, tokenize_text(sense->gloss))));
    }
  }
  return top2_from_scores(pun->id, keys, scores);
}

/// Most-frequent-sense baseline: inventory ranks 0 and 1.
inline SensePrediction mfs_baseline(const corpus::PunInstance& inst, const lexicon::SenseInventory& inventory) {
  const corpus::Token* pun = inst.gold_token();
  if (!pun) throw ContractError("interpretation needs the pun location of " + inst.text_id);
  SensePrediction out;
  out.token_id = pun->id;
  const auto candidates = inventory.candidates(pun->surface);
  if (candidates.size() >= 2) out.top2 = std::make_pair(candidates[0]->sense_key, candidates[1]->sense_key);
  return out;
}

/// "token_id key1 key2" (abstentions are omitted).
inline void write_predictions(std::ostream& out, const std::vector<SensePrediction>& preds) {
  for (const auto& p : preds)
    if (p.top2) out << p.token_id << ' ' << p.top2->first << ' ' << p.top2->second << '\n';
}

}  // namespace dann::interp
