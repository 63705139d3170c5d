#pragma once

#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "dann/corpus.hpp"
#include "dann/lexicon.hpp"
#include "dann/numcore/rng.hpp"

// Planted-signal corpora whose answers are known by construction.
//
// Sentences in the train and test splits draw their words from disjoint
// pools, so a word's identity (context channel) never reveals the pun at test
// time; the pun is only recoverable from the channel the generator plants it
// in.

namespace dann::synth {

enum class Channel { kSense, kPronunciation, kInterpretation };

struct Options {
  Channel channel = Channel::kSense;
  std::size_t n_train = 512;
  std::size_t n_test = 128;
  std::uint64_t seed = 7;
  std::size_t min_words = 6;
  std::size_t max_words = 12;
  std::size_t min_senses = 1;
  std::size_t max_senses = 3;
  // Sense rank holding the trigger gloss; npos draws it per word.
  std::size_t trigger_rank = static_cast<std::size_t>(-1);
  std::size_t interp_candidates = 4;
  std::size_t interp_topics = 4;

  /// Defaults for one channel; interpretation uses shorter sentences.
  static Options for_channel(Channel c) {
    Options o;
    o.channel = c;
    if (c == Channel::kInterpretation) {
      o.min_words = 4;
      o.max_words = 8;
    }
    return o;
  }
};

struct Dataset {
  std::vector<corpus::PunInstance> train;
  std::vector<corpus::PunInstance> test;
  std::string cmudict_text;
  std::string sense_tsv;
  lexicon::Lexicon lexicon;
  double mfs_chance = 0.0;  // expected MFS accuracy on the test split
};

inline constexpr const char* kTriggerToken = "quix";
inline constexpr const char* kPlantedBigram[2] = {"ZH", "OY"};

namespace detail {

inline const std::vector<std::string>& ordinary_phonemes() {
  static const std::vector<std::string> kSet = {"AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D",  "DH", "EH",
                                                "ER", "EY", "F",  "G",  "HH", "IH", "IY", "JH", "K",  "L",  "M",
                                                "N",  "NG", "OW", "P",  "R",  "S",  "SH", "T",  "TH", "UH", "UW",
                                                "V",  "W",  "Y",  "Z"};
  return kSet;
}

class WordFactory {
 public:
  explicit WordFactory(Rng& rng) : rng_(rng) {}

  std::string fresh(std::size_t syllables_min = 2, std::size_t syllables_max = 3) {
    static const std::string kOnset = "bdfgklmnprstvz";
    static const std::string kVowel = "aeiou";
    for (;;) {
      const std::size_t n = syllables_min + rng_.below(syllables_max - syllables_min + 1);
      std::string w;
      for (std::size_t i = 0; i < n; ++i) {
        w += kOnset[rng_.below(kOnset.size())];
        w += kVowel[rng_.below(kVowel.size())];
      }
      if (w != kTriggerToken && used_.insert(w).second) return w;
    }
  }

 private:
  Rng& rng_;
  std::unordered_set<std::string> used_;
};

struct WordSpec {
  std::string surface;
  std::vector<std::string> glosses;
  std::vector<std::string> phonemes;
};

inline std::string join(const std::vector<std::string>& parts, const char* sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

inline std::string sense_key(const std::string& word, std::size_t rank) {
  return word + "%1:00:" + (rank < 10 ? "0" : "") + std::to_string(rank) + "::";
}

inline std::vector<std::string> random_gloss(Rng& rng, const std::vector<std::string>& fillers) {
  std::vector<std::string> g;
  const std::size_t n = 3 + rng.below(4);
  for (std::size_t i = 0; i < n; ++i) g.push_back(fillers[rng.below(fillers.size())]);
  return g;
}

inline std::vector<std::string> random_phonemes(Rng& rng) {
  const auto& set = ordinary_phonemes();
  std::vector<std::string> p;
  const std::size_t n = 2 + rng.below(4);
  for (std::size_t i = 0; i < n; ++i) p.push_back(set[rng.below(set.size())]);
  return p;
}

inline void emit_lexicon(const std::vector<WordSpec>& words, Dataset& out) {
  std::ostringstream cmu, tsv;
  cmu << ";;; synthetic pronunciation dictionary\n";
  for (const auto& w : words) {
    std::string upper = w.surface;
    for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (!w.phonemes.empty()) cmu << upper << "  " << join(w.phonemes) << '\n';
    for (std::size_t r = 0; r < w.glosses.size(); ++r) {
      tsv << w.surface << '\t' << sense_key(w.surface, r) << '\t' << w.glosses[r] << '\n';
    }
  }
  out.cmudict_text = cmu.str();
  out.sense_tsv = tsv.str();
  std::istringstream cmu_in(out.cmudict_text), tsv_in(out.sense_tsv);
  out.lexicon.pronunciations = lexicon::parse_cmudict(cmu_in, "synthetic-cmudict");
  out.lexicon.senses = lexicon::parse_sense_inventory(tsv_in, "synthetic-senses");
}

inline corpus::PunInstance make_instance(const std::string& text_id, const std::vector<std::string>& words,
                                         std::size_t pun_at) {
  corpus::PunInstance inst;
  inst.text_id = text_id;
  for (std::size_t i = 0; i < words.size(); ++i) {
    inst.tokens.push_back({text_id + "_" + std::to_string(i + 1), words[i]});
  }
  inst.gold_pun_token = inst.tokens[pun_at].id;
  return inst;
}

// Location corpora: each split has its own pools of plain and pun words.
inline Dataset make_location(const Options& opt) {
  Rng rng(opt.seed);
  WordFactory factory(rng);
  std::vector<std::string> fillers;
  for (int i = 0; i < 40; ++i) fillers.push_back(factory.fresh(1, 2));

  std::vector<WordSpec> lexicon_words;
  auto make_word = [&](bool pun) {
    WordSpec w;
    w.surface = factory.fresh();
    const std::size_t n = opt.min_senses + rng.below(opt.max_senses - opt.min_senses + 1);
    for (std::size_t r = 0; r < n; ++r) w.glosses.push_back(join(random_gloss(rng, fillers)));
    w.phonemes = random_phonemes(rng);
    if (pun && opt.channel == Channel::kSense) {
      const std::size_t rank = opt.trigger_rank < n ? opt.trigger_rank : rng.below(n);
      auto g = random_gloss(rng, fillers);
      g.insert(g.begin() + static_cast<std::ptrdiff_t>(rng.below(g.size() + 1)), kTriggerToken);
      w.glosses[rank] = join(g);
    }
    if (pun && opt.channel == Channel::kPronunciation) {
      const std::size_t at = rng.below(w.phonemes.size() + 1);
      w.phonemes.insert(w.phonemes.begin() + static_cast<std::ptrdiff_t>(at),
                        {kPlantedBigram[0], kPlantedBigram[1]});
    }
    lexicon_words.push_back(w);
    return w.surface;
  };

  Dataset out;
  auto make_split = [&](std::size_t n, const std::string& prefix, std::vector<corpus::PunInstance>& dst) {
    const std::size_t plain_pool = std::max<std::size_t>(60, n / 2);
    const std::size_t pun_pool = std::max<std::size_t>(20, n / 6);
    std::vector<std::string> plain, puns;
    for (std::size_t i = 0; i < plain_pool; ++i) plain.push_back(make_word(false));
    for (std::size_t i = 0; i < pun_pool; ++i) puns.push_back(make_word(true));
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t len = opt.min_words + rng.below(opt.max_words - opt.min_words + 1);
      std::vector<std::string> words;
      for (std::size_t i = 0; i < len; ++i) words.push_back(plain[rng.below(plain.size())]);
      const std::size_t at = rng.below(len);
      words[at] = puns[rng.below(puns.size())];
      dst.push_back(make_instance(prefix + std::to_string(s + 1), words, at));
    }
  };
  make_split(opt.n_train, "syn_", out.train);
  make_split(opt.n_test, "synt_", out.test);
  emit_lexicon(lexicon_words, out);
  return out;
}

// Interpretation corpus: every sentence carries a topic token; the pun word's
// gold glosses carry the same topic, the other candidates carry different
// ones. Gold rank pairs are balanced over all C(K, 2) combinations.
inline Dataset make_interpretation(const Options& opt) {
  if (opt.interp_candidates < 3 || opt.interp_topics < opt.interp_candidates) {
    throw ConfigError("interpretation corpus needs >= 3 candidates and at least as many topics");
  }
  Rng rng(opt.seed);
  WordFactory factory(rng);
  std::vector<std::string> fillers, topics, context;
  for (int i = 0; i < 30; ++i) fillers.push_back(factory.fresh(1, 2));
  for (std::size_t i = 0; i < opt.interp_topics; ++i) topics.push_back(factory.fresh(2, 2));
  for (int i = 0; i < 60; ++i) context.push_back(factory.fresh());

  const std::size_t K = opt.interp_candidates;
  std::vector<std::pair<std::size_t, std::size_t>> combos;
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t b = a + 1; b < K; ++b) combos.emplace_back(a, b);

  std::vector<WordSpec> lexicon_words;
  Dataset out;
  auto make_split = [&](std::size_t n, const std::string& prefix, std::vector<corpus::PunInstance>& dst) {
    std::vector<std::size_t> combo_of(n);
    for (std::size_t i = 0; i < n; ++i) combo_of[i] = i % combos.size();
    rng.shuffle(combo_of);
    for (std::size_t s = 0; s < n; ++s) {
      const auto [g1, g2] = combos[combo_of[s]];
      std::vector<std::size_t> topic_order(topics.size());
      for (std::size_t i = 0; i < topic_order.size(); ++i) topic_order[i] = i;
      rng.shuffle(topic_order);
      const std::string& topic = topics[topic_order[0]];

      WordSpec w;
      w.surface = factory.fresh(3, 3);
      w.phonemes = random_phonemes(rng);
      std::size_t other = 1;
      for (std::size_t r = 0; r < K; ++r) {
        auto g = random_gloss(rng, fillers);
        const bool gold = r == g1 || r == g2;
        const std::string& t = gold ? topic : topics[topic_order[other++]];
        g.insert(g.begin() + static_cast<std::ptrdiff_t>(rng.below(g.size() + 1)), t);
        w.glosses.push_back(join(g));
      }
      lexicon_words.push_back(w);

      const std::size_t len = opt.min_words + rng.below(opt.max_words - opt.min_words + 1);
      std::vector<std::string> words;
      for (std::size_t i = 0; i < len; ++i) words.push_back(context[rng.below(context.size())]);
      const std::size_t topic_at = rng.below(len);
      words[topic_at] = topic;
      std::size_t pun_at = rng.below(len);
      if (pun_at == topic_at) pun_at = (pun_at + 1) % len;
      words[pun_at] = w.surface;
      auto inst = make_instance(prefix + std::to_string(s + 1), words, pun_at);
      inst.gold_sense_keys = std::set<std::string>{sense_key(w.surface, g1), sense_key(w.surface, g2)};
      dst.push_back(std::move(inst));
    }
  };
  make_split(opt.n_train, "syn_", out.train);
  make_split(opt.n_test, "synt_", out.test);
  emit_lexicon(lexicon_words, out);
  out.mfs_chance = 1.0 / static_cast<double>(combos.size());
  return out;
}

}  // namespace detail

inline Dataset generate(const Options& opt) {
  if (opt.min_words < 2 || opt.max_words < opt.min_words) throw ConfigError("bad sentence length range");
  if (opt.min_senses < 1 || opt.max_senses < opt.min_senses) throw ConfigError("bad sense count range");
  return opt.channel == Channel::kInterpretation ? detail::make_interpretation(opt) : detail::make_location(opt);
}

}  // namespace dann::synth
