#pragma once

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>

#include "dann/error.hpp"
#include "dann/lexicon.hpp"
#include "dann/numcore/rng.hpp"
#include "dann/text.hpp"

namespace dann::corpus {

struct Token {
  std::string id;
  std::string surface;
  bool operator==(const Token&) const = default;
};

/// One SemEval text with optional gold annotations.
struct PunInstance {
  std::string text_id;
  std::vector<Token> tokens;
  std::optional<std::string> gold_pun_token;
  std::optional<std::set<std::string>> gold_sense_keys;

  /// Index of a token id, or npos.
  std::size_t index_of(const std::string& token_id) const {
    for (std::size_t i = 0; i < tokens.size(); ++i)
      if (tokens[i].id == token_id) return i;
    return static_cast<std::size_t>(-1);
  }

  const Token* gold_token() const {
    if (!gold_pun_token) return nullptr;
    const std::size_t i = index_of(*gold_pun_token);
    return i < tokens.size() ? &tokens[i] : nullptr;
  }

  std::vector<std::string> lowered_surfaces() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(to_lower(t.surface));
    return out;
  }

  bool operator==(const PunInstance&) const = default;
};

enum class PairLabel { kNo = 0, kYes = 1 };

/// A pun sentence paired with one candidate gloss of its pun word.
struct PairExample {
  std::string token_id;  // pun token the pair belongs to
  std::vector<std::string> pun_tokens;
  std::vector<std::string> gloss_tokens;
  std::string sense_key;
  PairLabel label = PairLabel::kNo;
  bool operator==(const PairExample&) const = default;
};

struct ParsedCorpus {
  std::vector<PunInstance> instances;
  std::vector<std::string> warnings;
};

namespace detail {

inline void collect_texts(const boost::property_tree::ptree& node, ParsedCorpus& out,
                          const std::string& source) {
  for (const auto& [tag, child] : node) {
    if (tag != "text") {
      if (tag != "<xmlattr>" && tag != "<xmlcomment>") collect_texts(child, out, source);
      continue;
    }
    PunInstance inst;
    inst.text_id = child.get<std::string>("<xmlattr>.id", "");
    if (inst.text_id.empty()) throw ParseError(source, 0, "<text> element without id");
    for (const auto& [wtag, word] : child) {
      if (wtag != "word") continue;
      Token tok{word.get<std::string>("<xmlattr>.id", ""), std::string(trim(word.get_value<std::string>()))};
      if (!tok.id.starts_with(inst.text_id + "_")) {
        throw ParseError(source, 0,
                         "word id '" + tok.id + "' is not prefixed by text id '" + inst.text_id + "'");
      }
      inst.tokens.push_back(std::move(tok));
    }
    if (inst.tokens.empty()) out.warnings.push_back("text " + inst.text_id + " has no words");
    out.instances.push_back(std::move(inst));
  }
}

}  // namespace detail

/// Reads <text id=..><word id=..>surface</word>...</text> elements in order.
inline ParsedCorpus parse_semeval_xml(std::istream& in, const std::string& source = "xml") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(source, e.line(), e.message());
  }
  ParsedCorpus out;
  detail::collect_texts(tree, out, source);
  std::unordered_set<std::string> ids;
  for (const auto& inst : out.instances) {
    if (!ids.insert(inst.text_id).second) throw ParseError(source, 0, "duplicate text id " + inst.text_id);
  }
  return out;
}

/// "text_id token_id" per line (tab or spaces).
inline std::map<std::string, std::string> parse_gold_location(std::istream& in,
                                                              const std::string& source = "gold") {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto f = split_whitespace(line);
    if (f.empty()) continue;
    if (f.size() != 2) throw ParseError(source, line_no, "expected 'text_id token_id'");
    if (!f[1].starts_with(f[0] + "_")) {
      throw ParseError(source, line_no, "token " + f[1] + " does not belong to text " + f[0]);
    }
    if (!out.emplace(f[0], f[1]).second) throw ParseError(source, line_no, "duplicate text id " + f[0]);
  }
  return out;
}

/// "token_id key1 key2 ..." per line, at least two keys. Keys joined by ';'
/// inside one field are split as well.
inline std::map<std::string, std::set<std::string>> parse_gold_senses(std::istream& in,
                                                                      const std::string& source = "gold") {
  std::map<std::string, std::set<std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto f = split_whitespace(line);
    if (f.empty()) continue;
    std::set<std::string> keys;
    std::size_t listed = 0;
    for (std::size_t i = 1; i < f.size(); ++i) {
      for (auto& k : split(f[i], ';')) {
        if (k.empty()) continue;
        ++listed;
        keys.insert(std::move(k));
      }
    }
    if (listed < 2) throw ParseError(source, line_no, "token " + f[0] + " lists fewer than 2 sense keys");
    if (!out.emplace(f[0], std::move(keys)).second) {
      throw ParseError(source, line_no, "duplicate token id " + f[0]);
    }
  }
  return out;
}

/// Attaches gold annotations to parsed instances. Unknown ids are errors.
inline void attach_gold(std::vector<PunInstance>& instances, const std::map<std::string, std::string>& location,
                        const std::map<std::string, std::set<std::string>>& senses) {
  std::unordered_map<std::string, PunInstance*> by_text;
  std::unordered_map<std::string, PunInstance*> by_token;
  for (auto& inst : instances) {
    by_text.emplace(inst.text_id, &inst);
    for (const auto& t : inst.tokens) by_token.emplace(t.id, &inst);
  }
  for (const auto& [text_id, token_id] : location) {
    auto it = by_text.find(text_id);
    if (it == by_text.end()) throw ContractError("gold location for unknown text " + text_id);
    if (it->second->index_of(token_id) >= it->second->tokens.size()) {
      throw ContractError("gold token " + token_id + " not found in text " + text_id);
    }
    it->second->gold_pun_token = token_id;
  }
  for (const auto& [token_id, keys] : senses) {
    auto it = by_token.find(token_id);
    if (it == by_token.end()) throw ContractError("gold senses for unknown token " + token_id);
    PunInstance& inst = *it->second;
    if (!inst.gold_pun_token) inst.gold_pun_token = token_id;
    if (*inst.gold_pun_token != token_id) {
      throw ContractError("gold senses for " + token_id + " but pun located at " + *inst.gold_pun_token);
    }
    inst.gold_sense_keys = keys;
  }
}

/// text_id -> fold index; folds differ in size by at most one.
struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> fold_of;  // aligned with the instance list
  std::map<std::string, std::size_t> assignment;

  std::vector<std::size_t> fold_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t f : fold_of) ++sizes[f];
    return sizes;
  }
};

/// Seeded shuffle, then round-robin assignment.
inline FoldPlan make_folds(const std::vector<PunInstance>& instances, std::size_t k, std::uint64_t seed) {
  if (k == 0 || k > instances.size()) {
    throw ConfigError("cannot split " + std::to_string(instances.size()) + " instances into " +
                      std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  FoldPlan plan;
  plan.k = k;
  plan.fold_of.assign(instances.size(), 0);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    plan.fold_of[order[pos]] = pos % k;
    plan.assignment[instances[order[pos]].text_id] = pos % k;
  }
  return plan;
}

enum class Tag { kO = 0, kP = 1 };

inline std::vector<Tag> build_bio_labels(const PunInstance& inst) {
  if (!inst.gold_pun_token) throw ContractError("instance " + inst.text_id + " has no gold pun token");
  const std::size_t at = inst.index_of(*inst.gold_pun_token);
  if (at >= inst.tokens.size()) {
    throw ContractError("gold token " + *inst.gold_pun_token + " missing from " + inst.text_id);
  }
  std::vector<Tag> tags(inst.tokens.size(), Tag::kO);
  tags[at] = Tag::kP;
  return tags;
}

struct PairBuild {
  std::vector<PairExample> pairs;
  std::vector<std::string> warnings;
};

/// One pair per candidate sense of the pun word (inventory order), labeled
/// yes iff the key is gold. Instances without candidates are skipped.
inline PairBuild build_pun_gloss_pairs(const PunInstance& inst, const lexicon::SenseInventory& inventory) {
  PairBuild out;
  const Token* pun = inst.gold_token();
  if (!pun) throw ContractError("instance " + inst.text_id + " has no gold pun token");
  const auto candidates = inventory.candidates(pun->surface);
  if (candidates.empty()) {
    out.warnings.push_back("no candidate senses for '" + to_lower(pun->surface) + "' in " + inst.text_id);
    return out;
  }
  const auto pun_tokens = inst.lowered_surfaces();
  bool any_gold = false;
  for (const auto* sense : candidates) {
    PairExample p;
    p.token_id = pun->id;
    p.pun_tokens = pun_tokens;
    p.gloss_tokens = tokenize_text(sense->gloss);
    p.sense_key = sense->sense_key;
    const bool yes = inst.gold_sense_keys && inst.gold_sense_keys->contains(sense->sense_key);
    any_gold = any_gold || yes;
    p.label = yes ? PairLabel::kYes : PairLabel::kNo;
    out.pairs.push_back(std::move(p));
  }
  if (inst.gold_sense_keys && !any_gold) {
    out.warnings.push_back("gold keys of " + pun->id + " are disjoint from the inventory");
  }
  return out;
}

// ---- JSON-lines interchange ------------------------------------------------

inline nlohmann::json to_json(const PunInstance& inst) {
  nlohmann::json j;
  j["text_id"] = inst.text_id;
  j["tokens"] = nlohmann::json::array();
  for (const auto& t : inst.tokens) j["tokens"].push_back({{"id", t.id}, {"surface", t.surface}});
  j["gold_pun_token"] = inst.gold_pun_token ? nlohmann::json(*inst.gold_pun_token) : nlohmann::json(nullptr);
  j["gold_sense_keys"] = inst.gold_sense_keys ? nlohmann::json(*inst.gold_sense_keys) : nlohmann::json(nullptr);
  return j;
}

inline PunInstance instance_from_json(const nlohmann::json& j) {
  PunInstance inst;
  inst.text_id = j.at("text_id").get<std::string>();
  for (const auto& t : j.at("tokens")) {
    inst.tokens.push_back({t.at("id").get<std::string>(), t.at("surface").get<std::string>()});
  }
  if (j.contains("gold_pun_token") && !j["gold_pun_token"].is_null()) {
    inst.gold_pun_token = j["gold_pun_token"].get<std::string>();
  }
  if (j.contains("gold_sense_keys") && !j["gold_sense_keys"].is_null()) {
    inst.gold_sense_keys = j["gold_sense_keys"].get<std::set<std::string>>();
  }
  return inst;
}

inline nlohmann::json to_json(const PairExample& p) {
  return {{"token_id", p.token_id},
          {"pun_tokens", p.pun_tokens},
          {"gloss_tokens", p.gloss_tokens},
          {"sense_key", p.sense_key},
          {"label", p.label == PairLabel::kYes ? "yes" : "no"}};
}

inline PairExample pair_from_json(const nlohmann::json& j) {
  PairExample p;
  p.token_id = j.value("token_id", "");
  p.pun_tokens = j.at("pun_tokens").get<std::vector<std::string>>();
  p.gloss_tokens = j.at("gloss_tokens").get<std::vector<std::string>>();
  p.sense_key = j.at("sense_key").get<std::string>();
  const auto label = j.at("label").get<std::string>();
  if (label != "yes" && label != "no") throw ContractError("pair label must be yes|no, got " + label);
  p.label = label == "yes" ? PairLabel::kYes : PairLabel::kNo;
  return p;
}

template <class T>
void write_jsonl(std::ostream& out, const std::vector<T>& items) {
  for (const auto& item : items) out << to_json(item).dump() << '\n';
}

inline std::vector<PunInstance> read_instances_jsonl(std::istream& in, const std::string& source = "instances") {
  std::vector<PunInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(instance_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  return out;
}

// ---- writers for the SemEval formats (fixtures and synthetic data) --------

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline void write_semeval_xml(std::ostream& out, const std::vector<PunInstance>& instances) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<corpus>\n";
  for (const auto& inst : instances) {
    out << "  <text id=\"" << xml_escape(inst.text_id) << "\">\n";
    for (const auto& t : inst.tokens) {
      out << "    <word id=\"" << xml_escape(t.id) << "\">" << xml_escape(t.surface) << "</word>\n";
    }
    out << "  </text>\n";
  }
  out << "</corpus>\n";
}

inline void write_gold_location(std::ostream& out, const std::vector<PunInstance>& instances) {
  for (const auto& inst : instances)
    if (inst.gold_pun_token) out << inst.text_id << '\t' << *inst.gold_pun_token << '\n';
}

inline void write_gold_senses(std::ostream& out, const std::vector<PunInstance>& instances) {
  for (const auto& inst : instances) {
    if (!inst.gold_pun_token || !inst.gold_sense_keys) continue;
    out << *inst.gold_pun_token;
    for (const auto& k : *inst.gold_sense_keys) out << ' ' << k;
    out << '\n';
  }
}

}  // namespace dann::corpus
