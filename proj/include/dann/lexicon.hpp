#pragma once

#include <cctype>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dann/error.hpp"
#include "dann/text.hpp"

namespace dann::lexicon {

struct PronunciationEntry {
  std::string word;
  std::vector<std::string> phonemes;
  bool operator==(const PronunciationEntry&) const = default;
};

/// Word -> phoneme sequence, plus the phoneme vocabulary.
///
/// Phoneme ids follow the sorted order of the symbols, so the table is a pure
/// function of its entries.
class PronunciationTable {
 public:
  void set(PronunciationEntry e) {
    for (const auto& ph : e.phonemes) symbols_.emplace(ph, 0);
    auto [it, inserted] = index_.emplace(e.word, entries_.size());
    if (inserted) {
      entries_.push_back(std::move(e));
    } else {
      entries_[it->second] = std::move(e);
    }
    renumber();
  }

  /// Stress-stripped phonemes, empty for unknown words.
  const std::vector<std::string>& lookup_phonemes(std::string_view word) const {
    static const std::vector<std::string> kEmpty;
    auto it = index_.find(to_lower(word));
    return it == index_.end() ? kEmpty : entries_[it->second].phonemes;
  }

  std::vector<std::size_t> lookup_phoneme_ids(std::string_view word) const {
    std::vector<std::size_t> ids;
    for (const auto& ph : lookup_phonemes(word)) ids.push_back(symbols_.at(ph));
    return ids;
  }

  std::size_t phoneme_id(const std::string& symbol) const {
    auto it = symbols_.find(symbol);
    if (it == symbols_.end()) throw IndexError("unknown phoneme '" + symbol + "'");
    return it->second;
  }

  std::vector<std::string> phoneme_vocabulary() const {
    std::vector<std::string> out;
    for (const auto& [sym, id] : symbols_) out.push_back(sym);
    return out;
  }

  std::size_t phoneme_count() const noexcept { return symbols_.size(); }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<PronunciationEntry>& entries() const noexcept { return entries_; }

  /// Entries in insertion order.
  bool operator==(const PronunciationTable& o) const { return entries_ == o.entries_; }

  std::size_t duplicate_warnings = 0;

 private:
  void renumber() {
    std::size_t i = 0;
    for (auto& [sym, id] : symbols_) id = i++;
  }

  std::vector<PronunciationEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<std::string, std::size_t> symbols_;
};

/// Parses cmudict plain text: ";;;" comments, "WORD  PH1 PH2 ..." entries,
/// "WORD(n)" alternate pronunciations (dropped).
inline PronunciationTable parse_cmudict(std::istream& in, const std::string& source = "cmudict") {
  PronunciationTable table;
  std::vector<PronunciationEntry> pending;
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t duplicates = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.starts_with(";;;")) continue;
    auto fields = split_whitespace(line);
    std::string word = to_lower(fields.front());
    if (fields.size() < 2) throw ParseError(source, line_no, "entry '" + word + "' has no phonemes");
    if (word.size() > 3 && word.back() == ')') {
      const auto open = word.rfind('(');
      if (open != std::string::npos && open > 0 &&
          word.find_first_not_of("0123456789", open + 1) == word.size() - 1) {
        continue;
      }
    }
    PronunciationEntry e{word, {}};
    for (std::size_t i = 1; i < fields.size(); ++i) {
      std::string ph = fields[i];
      while (!ph.empty() && std::isdigit(static_cast<unsigned char>(ph.back()))) ph.pop_back();
      if (ph.empty()) throw ParseError(source, line_no, "empty phoneme symbol");
      e.phonemes.push_back(std::move(ph));
    }
    if (auto it = seen.find(word); it != seen.end()) {
      ++duplicates;
      pending[it->second] = std::move(e);
    } else {
      seen.emplace(word, pending.size());
      pending.push_back(std::move(e));
    }
  }
  for (auto& e : pending) table.set(std::move(e));
  table.duplicate_warnings = duplicates;
  return table;
}

/// Canonical dump; parse_cmudict of the result reproduces the table.
inline void dump_cmudict(const PronunciationTable& table, std::ostream& out) {
  for (const auto& e : table.entries()) {
    std::string upper = e.word;
    for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    out << upper << ' ';
    for (const auto& ph : e.phonemes) out << ' ' << ph;
    out << '\n';
  }
}

struct SenseEntry {
  std::string lemma;
  std::string sense_key;
  std::string gloss;
  bool operator==(const SenseEntry&) const = default;
};

/// Senses per lemma in file order; rank 0 is the most frequent sense.
class SenseInventory {
 public:
  void add(SenseEntry e) {
    if (!keys_.insert(e.sense_key).second) {
      throw ContractError("duplicate sense key '" + e.sense_key + "'");
    }
    by_lemma_[e.lemma].push_back(entries_.size());
    entries_.push_back(std::move(e));
  }

  struct Lookup {
    std::vector<const SenseEntry*> senses;
    std::size_t count = 0;  // real senses returned (== senses.size())
  };

  /// First min(n, cap) senses of the lemma in inventory order.
  Lookup lookup_senses(std::string_view lemma, std::size_t cap) const {
    if (cap < 1) throw ContractError("sense cap must be >= 1");
    Lookup out;
    auto it = by_lemma_.find(to_lower(lemma));
    if (it == by_lemma_.end()) return out;
    for (std::size_t idx : it->second) {
      if (out.senses.size() == cap) break;
      out.senses.push_back(&entries_[idx]);
    }
    out.count = out.senses.size();
    return out;
  }

  /// Every sense of the lemma, uncapped.
  std::vector<const SenseEntry*> candidates(std::string_view lemma) const {
    return lookup_senses(lemma, static_cast<std::size_t>(-1)).senses;
  }

  std::size_t sense_count(std::string_view lemma) const {
    auto it = by_lemma_.find(to_lower(lemma));
    return it == by_lemma_.end() ? 0 : it->second.size();
  }

  std::size_t max_sense_count() const {
    std::size_t m = 0;
    for (const auto& [lemma, idx] : by_lemma_) m = std::max(m, idx.size());
    return m;
  }

  bool contains_key(const std::string& key) const { return keys_.contains(key); }

  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<SenseEntry>& entries() const noexcept { return entries_; }

  bool operator==(const SenseInventory& o) const { return entries_ == o.entries_; }

 private:
  std::vector<SenseEntry> entries_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_lemma_;
  std::unordered_set<std::string> keys_;
};

/// Parses "lemma \t sense_key \t gloss" lines (no header).
inline SenseInventory parse_sense_inventory(std::istream& in, const std::string& source = "senses") {
  SenseInventory inv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 3) {
      throw ParseError(source, line_no,
                       "expected 3 tab-separated columns, found " + std::to_string(cols.size()));
    }
    SenseEntry e{to_lower(trim(cols[0])), std::string(trim(cols[1])), std::string(trim(cols[2]))};
    if (e.lemma.empty() || e.sense_key.empty()) throw ParseError(source, line_no, "empty lemma or sense key");
    if (e.gloss.empty()) throw ParseError(source, line_no, "empty gloss for " + e.sense_key);
    try {
      inv.add(std::move(e));
    } catch (const ContractError& err) {
      throw ParseError(source, line_no, err.what());
    }
  }
  return inv;
}

inline void dump_sense_inventory(const SenseInventory& inv, std::ostream& out) {
  for (const auto& e : inv.entries()) out << e.lemma << '\t' << e.sense_key << '\t' << e.gloss << '\n';
}

/// Both lexical resources a model needs.
struct Lexicon {
  PronunciationTable pronunciations;
  SenseInventory senses;
};

}  // namespace dann::lexicon
