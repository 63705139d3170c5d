#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "dann/error.hpp"
#include "dann/numcore.hpp"

namespace dann::encoder {

/// Token -> id map with fixed reserved ids.
class Vocab {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kCls = 1;
  static constexpr std::size_t kSep = 2;
  static constexpr std::size_t kUnk = 3;
  static constexpr std::size_t kReserved = 4;

  Vocab() : tokens_{"[PAD]", "[CLS]", "[SEP]", "[UNK]"} {
    for (std::size_t i = 0; i < tokens_.size(); ++i) ids_.emplace(tokens_[i], i);
  }

  std::size_t add(const std::string& token) {
    auto [it, inserted] = ids_.emplace(token, tokens_.size());
    if (inserted) tokens_.push_back(token);
    return it->second;
  }

  std::size_t id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& token) const { return ids_.contains(token); }
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::size_t size() const noexcept { return tokens_.size(); }

  std::vector<std::size_t> ids(std::span<const std::string> tokens) const {
    std::vector<std::size_t> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(id(t));
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < tokens_.size(); ++i) j[tokens_[i]] = i;
    return j;
  }

  static Vocab from_json(const nlohmann::json& j) {
    std::vector<std::string> by_id(j.size());
    for (const auto& [tok, id] : j.items()) {
      const auto i = id.get<std::size_t>();
      if (i >= by_id.size() || !by_id[i].empty()) throw ContractError("vocab ids are not dense");
      by_id[i] = tok;
    }
    Vocab v;
    for (std::size_t i = 0; i < kReserved; ++i) {
      if (by_id[i] != v.tokens_[i]) throw ContractError("vocab reserved id " + std::to_string(i) + " altered");
    }
    for (std::size_t i = kReserved; i < by_id.size(); ++i) v.add(by_id[i]);
    return v;
  }

  bool operator==(const Vocab& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
};

/// Ids assigned by (count desc, token asc) after the reserved block.
inline Vocab build_vocab(std::span<const std::vector<std::string>> sequences, std::size_t min_count = 1) {
  std::map<std::string, std::size_t> counts;
  const Vocab reserved;
  for (const auto& seq : sequences)
    for (const auto& tok : seq)
      if (!reserved.contains(tok)) ++counts[tok];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab v;
  for (const auto& [tok, n] : ranked)
    if (n >= min_count) v.add(tok);
  return v;
}

struct EncoderConfig {
  std::size_t d_model = 32;
  std::size_t n_layers = 1;
  std::size_t max_len = 64;
  std::size_t vocab_size = Vocab::kReserved;

  void validate() const {
    if (d_model < 4 || d_model % 2 != 0) throw ConfigError("d_model must be even and >= 4");
    if (max_len < 2) throw ConfigError("max_len must be >= 2");
    if (vocab_size < Vocab::kReserved) throw ConfigError("vocab_size below the reserved block");
  }
};

struct LayerParams {
  ParamId wq, wk, wv, wo;
  ParamId ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

struct EncoderParams {
  ParamId token_embedding;
  ParamId position_embedding;
  std::vector<LayerParams> layers;
};

struct Encoded {
  Var contextual;               // n x d_model
  Var pooled;                   // 1 x d_model, position 0
  std::vector<Var> attention;   // per layer, n x n
  bool truncated = false;
};

/// Token + learned position embeddings followed by n_layers blocks of
/// single-head self-attention and a tanh feed-forward, each with a plain
/// residual connection.
class Encoder {
 public:
  Encoder() = default;

  Encoder(ParamStore& store, const EncoderConfig& cfg, Rng& rng, const std::string& prefix) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t d = cfg_.d_model;
    params_.token_embedding = store.add(prefix + "token_embedding", {cfg_.vocab_size, d}, Init::kUniform01, rng);
    params_.position_embedding = store.add(prefix + "position_embedding", {cfg_.max_len, d}, Init::kUniform01, rng);
    for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
      const std::string p = prefix + "layer" + std::to_string(l) + ".";
      LayerParams lp;
      lp.wq = store.add(p + "wq", {d, d}, Init::kGlorot, rng);
      lp.wk = store.add(p + "wk", {d, d}, Init::kGlorot, rng);
      lp.wv = store.add(p + "wv", {d, d}, Init::kGlorot, rng);
      lp.wo = store.add(p + "wo", {d, d}, Init::kGlorot, rng);
      lp.ffn_w1 = store.add(p + "ffn_w1", {d, 2 * d}, Init::kGlorot, rng);
      lp.ffn_b1 = store.add(p + "ffn_b1", {2 * d}, Init::kZeros, rng);
      lp.ffn_w2 = store.add(p + "ffn_w2", {2 * d, d}, Init::kGlorot, rng);
      lp.ffn_b2 = store.add(p + "ffn_b2", {d}, Init::kZeros, rng);
      params_.layers.push_back(lp);
    }
  }

  const EncoderConfig& config() const noexcept { return cfg_; }
  const EncoderParams& params() const noexcept { return params_; }

  /// Encodes a sequence that starts with CLS. Sequences longer than max_len
  /// are truncated and flagged.
  Encoded encode_sequence(Graph& g, ParamStore& store, std::span<const std::size_t> ids) const {
    if (ids.empty() || ids.front() != Vocab::kCls) throw ContractError("sequence must start with CLS");
    Encoded out;
    if (ids.size() > cfg_.max_len) {
      ids = ids.first(cfg_.max_len);
      out.truncated = true;
    }
    for (std::size_t id : ids) {
      if (id >= cfg_.vocab_size) throw IndexError("token id " + std::to_string(id) + " outside vocabulary");
    }
    const std::size_t n = ids.size();
    std::vector<std::size_t> positions(n);
    for (std::size_t i = 0; i < n; ++i) positions[i] = i;
    std::vector<double> key_mask(n);
    for (std::size_t i = 0; i < n; ++i) key_mask[i] = ids[i] == Vocab::kPad ? 0.0 : 1.0;

    Var x = g.add(g.embedding(g.param(store, params_.token_embedding), ids),
                  g.embedding(g.param(store, params_.position_embedding), positions));
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg_.d_model));
    for (const LayerParams& lp : params_.layers) {
      Var q = g.matmul(x, g.param(store, lp.wq));
      Var k = g.matmul(x, g.param(store, lp.wk));
      Var v = g.matmul(x, g.param(store, lp.wv));
      Var scores = g.scale(g.matmul(q, g.transpose(k)), inv_sqrt_d);
      Var attn = g.masked_softmax(scores, key_mask);
      out.attention.push_back(attn);
      Var h = g.add(x, g.matmul(g.matmul(attn, v), g.param(store, lp.wo)));
      Var f = g.tanh(g.linear(h, g.param(store, lp.ffn_w1), g.param(store, lp.ffn_b1)));
      x = g.add(h, g.linear(f, g.param(store, lp.ffn_w2), g.param(store, lp.ffn_b2)));
    }
    out.contextual = x;
    out.pooled = g.slice_rows(x, 0, 1);
    return out;
  }

  /// Pooled CLS vector of "CLS gloss SEP"; an empty gloss gives zeros.
  Var encode_gloss(Graph& g, ParamStore& store, std::span<const std::size_t> gloss_ids) const {
    if (gloss_ids.empty()) return g.zeros(1, cfg_.d_model);
    std::vector<std::size_t> seq;
    seq.reserve(gloss_ids.size() + 2);
    seq.push_back(Vocab::kCls);
    seq.insert(seq.end(), gloss_ids.begin(), gloss_ids.end());
    seq.push_back(Vocab::kSep);
    return encode_sequence(g, store, seq).pooled;
  }

 private:
  EncoderConfig cfg_;
  EncoderParams params_;
};

inline nlohmann::json to_json(const EncoderConfig& c) {
  return {{"d_model", c.d_model}, {"n_layers", c.n_layers}, {"max_len", c.max_len}, {"vocab_size", c.vocab_size}};
}

}  // namespace dann::encoder
