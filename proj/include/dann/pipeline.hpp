#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dann/corpus.hpp"
#include "dann/error.hpp"
#include "dann/evalkit.hpp"
#include "dann/interpreter.hpp"
#include "dann/lexicon.hpp"
#include "dann/locator.hpp"
#include "dann/numcore.hpp"
#include "dann/synthetic.hpp"

namespace dann::pipeline {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitAcceptance = 2;

/// Everything a run depends on. Loaded from a JSON file; CLI flags override
/// single keys.
struct RunConfig {
  std::string xml;
  std::string gold_location;
  std::string gold_senses;
  std::string cmudict;
  std::string sense_tsv;
  std::string work_dir = "work";
  std::string checkpoint;

  std::size_t d_s = 50;
  std::size_t d_p = 16;
  std::size_t d_A = 16;
  std::size_t d_model = 32;
  std::size_t n_layers = 1;
  std::size_t max_len = 64;

  std::size_t epochs = 50;
  double lr = 5e-3;
  std::size_t batch_size = 8;
  std::size_t interp_n_layers = 2;
  double interp_lr = 1e-3;
  std::optional<std::uint64_t> seed;
  std::size_t k_folds = 10;

  std::string task = "locate";  // locate | interpret
  bool mfs = false;
  std::string ablate;           // "", "sense", "pron"
  std::vector<std::size_t> sweep_ds{1, 2, 5, 10, 20, 50};

  std::uint64_t required_seed() const {
    if (!seed) throw ConfigError("config has no seed; set \"seed\" or pass --seed");
    return *seed;
  }

  void validate() const {
    if (task != "locate" && task != "interpret") throw ConfigError("task must be locate or interpret, got " + task);
    if (!ablate.empty() && ablate != "sense" && ablate != "pron") {
      throw ConfigError("ablate must be sense or pron, got " + ablate);
    }
    if (k_folds < 2) throw ConfigError("k_folds must be >= 2");
    required_seed();
  }

  locator::ModelConfig locator_config() const {
    locator::ModelConfig m;
    m.d_s = d_s;
    m.d_p = d_p;
    m.d_attn = d_A;
    m.d_model = d_model;
    m.n_layers = n_layers;
    m.max_len = max_len;
    m.seed = required_seed();
    return locator::ablate(m, ablate != "sense", ablate != "pron");
  }

  interp::InterpConfig interp_config() const { return {d_model, interp_n_layers, max_len, required_seed()}; }

  locator::TrainConfig locator_train() const { return {epochs, lr, batch_size, required_seed()}; }
  interp::TrainConfig interp_train() const { return {epochs, interp_lr, batch_size, required_seed()}; }
};

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j{{"xml", c.xml},
                   {"gold_location", c.gold_location},
                   {"gold_senses", c.gold_senses},
                   {"cmudict", c.cmudict},
                   {"sense_tsv", c.sense_tsv},
                   {"work_dir", c.work_dir},
                   {"checkpoint", c.checkpoint},
                   {"d_s", c.d_s},
                   {"d_p", c.d_p},
                   {"d_A", c.d_A},
                   {"d_model", c.d_model},
                   {"n_layers", c.n_layers},
                   {"max_len", c.max_len},
                   {"epochs", c.epochs},
                   {"lr", c.lr},
                   {"batch_size", c.batch_size},
                   {"interp_n_layers", c.interp_n_layers},
                   {"interp_lr", c.interp_lr},
                   {"k_folds", c.k_folds},
                   {"task", c.task},
                   {"mfs", c.mfs},
                   {"ablate", c.ablate},
                   {"sweep_ds", c.sweep_ds}};
  j["seed"] = c.seed ? nlohmann::json(*c.seed) : nlohmann::json(nullptr);
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "xml") c.xml = v.get<std::string>();
    else if (key == "gold_location") c.gold_location = v.get<std::string>();
    else if (key == "gold_senses") c.gold_senses = v.get<std::string>();
    else if (key == "cmudict") c.cmudict = v.get<std::string>();
    else if (key == "sense_tsv") c.sense_tsv = v.get<std::string>();
    else if (key == "work_dir") c.work_dir = v.get<std::string>();
    else if (key == "checkpoint") c.checkpoint = v.get<std::string>();
    else if (key == "d_s") c.d_s = v.get<std::size_t>();
    else if (key == "d_p") c.d_p = v.get<std::size_t>();
    else if (key == "d_A") c.d_A = v.get<std::size_t>();
    else if (key == "d_model") c.d_model = v.get<std::size_t>();
    else if (key == "n_layers") c.n_layers = v.get<std::size_t>();
    else if (key == "max_len") c.max_len = v.get<std::size_t>();
    else if (key == "epochs") c.epochs = v.get<std::size_t>();
    else if (key == "lr") c.lr = v.get<double>();
    else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
    else if (key == "interp_n_layers") c.interp_n_layers = v.get<std::size_t>();
    else if (key == "interp_lr") c.interp_lr = v.get<double>();
    else if (key == "seed") {
      if (!v.is_null()) c.seed = v.get<std::uint64_t>();
    }
    else if (key == "k_folds") c.k_folds = v.get<std::size_t>();
    else if (key == "task") c.task = v.get<std::string>();
    else if (key == "mfs") c.mfs = v.get<bool>();
    else if (key == "ablate") c.ablate = v.get<std::string>();
    else if (key == "sweep_ds") c.sweep_ds = v.get<std::vector<std::size_t>>();
    else throw ConfigError("unknown config key '" + key + "'");
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

// ---- file helpers ----------------------------------------------------------

inline std::ifstream open_input(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("config does not set the ") + what + " path");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(std::string("cannot open ") + what + " file " + path);
  return in;
}

inline std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

inline lexicon::Lexicon load_lexicon(const RunConfig& c) {
  lexicon::Lexicon lex;
  auto cmu = open_input(c.cmudict, "cmudict");
  lex.pronunciations = lexicon::parse_cmudict(cmu, c.cmudict);
  auto tsv = open_input(c.sense_tsv, "sense_tsv");
  lex.senses = lexicon::parse_sense_inventory(tsv, c.sense_tsv);
  return lex;
}

inline fs::path instances_path(const RunConfig& c) { return fs::path(c.work_dir) / "instances.jsonl"; }
inline fs::path pairs_path(const RunConfig& c) { return fs::path(c.work_dir) / "pairs.jsonl"; }

inline std::vector<corpus::PunInstance> load_prepared(const RunConfig& c) {
  const fs::path p = instances_path(c);
  std::ifstream in(p);
  if (!in) {
    throw ConfigError("no prepared corpus at " + p.string() + "; run `dann prepare` with the same config first");
  }
  return corpus::read_instances_jsonl(in, p.string());
}

inline std::string fold_checkpoint_name(const std::string& task, std::size_t fold) {
  return task + "_fold" + std::to_string(fold) + ".ckpt";
}

// ---- prepare ---------------------------------------------------------------

struct PrepareSummary {
  std::size_t instances = 0;
  std::size_t empty_texts = 0;
  std::size_t with_location = 0;
  std::size_t with_senses = 0;
  std::size_t pairs = 0;
  std::size_t pair_instances_skipped = 0;
  std::size_t pronunciations = 0;
  std::size_t senses = 0;

  nlohmann::json to_json() const {
    return {{"instances", instances},         {"empty_texts", empty_texts},
            {"with_gold_location", with_location}, {"with_gold_senses", with_senses},
            {"pairs", pairs},                 {"pair_instances_skipped", pair_instances_skipped},
            {"pronunciations", pronunciations}, {"senses", senses}};
  }
};

/// Parses the corpus, gold files and lexicons; writes instances.jsonl and
/// pairs.jsonl into work_dir.
inline PrepareSummary prepare(const RunConfig& c, std::ostream& out) {
  auto xml = open_input(c.xml, "xml");
  corpus::ParsedCorpus parsed = corpus::parse_semeval_xml(xml, c.xml);
  std::map<std::string, std::string> location;
  std::map<std::string, std::set<std::string>> senses;
  if (!c.gold_location.empty()) {
    auto in = open_input(c.gold_location, "gold_location");
    location = corpus::parse_gold_location(in, c.gold_location);
  }
  if (!c.gold_senses.empty()) {
    auto in = open_input(c.gold_senses, "gold_senses");
    senses = corpus::parse_gold_senses(in, c.gold_senses);
  }
  corpus::attach_gold(parsed.instances, location, senses);
  const lexicon::Lexicon lex = load_lexicon(c);

  PrepareSummary s;
  s.instances = parsed.instances.size();
  s.empty_texts = parsed.warnings.size();
  s.pronunciations = lex.pronunciations.size();
  s.senses = lex.senses.size();
  std::vector<corpus::PairExample> pairs;
  for (const auto& inst : parsed.instances) {
    if (inst.gold_pun_token) ++s.with_location;
    if (!inst.gold_sense_keys) continue;
    ++s.with_senses;
    auto built = corpus::build_pun_gloss_pairs(inst, lex.senses);
    if (built.pairs.empty()) ++s.pair_instances_skipped;
    pairs.insert(pairs.end(), built.pairs.begin(), built.pairs.end());
  }
  s.pairs = pairs.size();
  {
    auto f = open_output(instances_path(c));
    corpus::write_jsonl(f, parsed.instances);
  }
  {
    auto f = open_output(pairs_path(c));
    corpus::write_jsonl(f, pairs);
  }
  {
    auto f = open_output(fs::path(c.work_dir) / "prepare_summary.json");
    f << s.to_json().dump(2) << '\n';
  }
  out << "instances: " << s.instances << '\n'
      << "empty texts: " << s.empty_texts << '\n'
      << "with gold location: " << s.with_location << '\n'
      << "with gold senses: " << s.with_senses << '\n'
      << "pun-gloss pairs: " << s.pairs << '\n'
      << "instances without candidate senses: " << s.pair_instances_skipped << '\n'
      << "pronunciations: " << s.pronunciations << '\n'
      << "sense entries: " << s.senses << '\n';
  return s;
}

// ---- locate / interpret cross-validation -----------------------------------

inline std::vector<corpus::PunInstance> locatable(const std::vector<corpus::PunInstance>& all) {
  std::vector<corpus::PunInstance> out;
  for (const auto& inst : all)
    if (inst.gold_pun_token && !inst.tokens.empty()) out.push_back(inst);
  return out;
}

inline std::vector<corpus::PunInstance> interpretable(const std::vector<corpus::PunInstance>& all) {
  std::vector<corpus::PunInstance> out;
  for (const auto& inst : all)
    if (inst.gold_pun_token && inst.gold_sense_keys) out.push_back(inst);
  return out;
}

inline evalkit::PRF score_locator(locator::DannModel& model, const std::vector<corpus::PunInstance>& test,
                                  const lexicon::Lexicon& lex) {
  std::map<std::string, std::string> pred, gold;
  for (const auto& inst : test) {
    gold[inst.text_id] = *inst.gold_pun_token;
    pred[inst.text_id] = model.predict_pun(inst, lex);
  }
  return evalkit::location_prf(pred, gold);
}

inline evalkit::PRF score_interpretations(const std::vector<interp::SensePrediction>& preds,
                                          const std::vector<corpus::PunInstance>& test) {
  std::map<std::string, std::optional<evalkit::KeyPair>> p;
  std::map<std::string, std::set<std::string>> gold;
  for (const auto& inst : test) gold[*inst.gold_pun_token] = *inst.gold_sense_keys;
  for (const auto& pr : preds) p[pr.token_id] = pr.top2;
  return evalkit::interpretation_prf(p, gold);
}

inline std::vector<corpus::PairExample> pairs_for(const std::vector<corpus::PunInstance>& instances,
                                                  const lexicon::SenseInventory& inv) {
  std::vector<corpus::PairExample> pairs;
  for (const auto& inst : instances) {
    auto built = corpus::build_pun_gloss_pairs(inst, inv);
    pairs.insert(pairs.end(), built.pairs.begin(), built.pairs.end());
  }
  return pairs;
}

enum class Mode { kTrain, kEval };

inline std::string report_stem(const RunConfig& c, Mode mode) {
  std::string stem = (mode == Mode::kTrain ? "report_" : "eval_") + c.task;
  if (c.task == "interpret" && c.mfs) stem += "_mfs";
  if (c.task == "locate" && !c.ablate.empty()) stem += "_no_" + c.ablate;
  return stem;
}

/// Cross-validated locator run. Trains (and checkpoints) per fold, or loads
/// the fold checkpoints written by an earlier training run.
inline evalkit::CvResult run_locate_cv(const RunConfig& c, const std::vector<corpus::PunInstance>& instances,
                                       const lexicon::Lexicon& lex, Mode mode, std::ostream* log,
                                       bool write_checkpoints) {
  const fs::path dir(c.work_dir);
  const std::string ckpt_task = c.ablate.empty() ? "locate" : "locate_no_" + c.ablate;
  auto train = [&](std::size_t fold, const std::vector<corpus::PunInstance>& split) {
    if (mode == Mode::kEval) {
      const fs::path p = dir / fold_checkpoint_name(ckpt_task, fold);
      std::ifstream in(p, std::ios::binary);
      if (!in) throw ConfigError("missing checkpoint " + p.string() + "; run `dann train` first");
      return locator::DannModel::load(in);
    }
    auto on_epoch = [&](std::size_t epoch, double loss) {
      if (log) *log << nlohmann::json{{"epoch", epoch}, {"loss", loss}, {"fold", fold}}.dump() << '\n';
    };
    auto trained = locator::train_locator(split, lex, c.locator_config(), c.locator_train(), on_epoch);
    if (write_checkpoints) {
      auto f = open_output(dir / fold_checkpoint_name(ckpt_task, fold));
      trained.model.save(f);
    }
    return std::move(trained.model);
  };
  auto evaluate = [&](std::size_t, locator::DannModel& model, const std::vector<corpus::PunInstance>& test) {
    return score_locator(model, test, lex);
  };
  return evalkit::cross_validate(instances, c.k_folds, c.required_seed(), train, evaluate);
}

inline evalkit::CvResult run_interpret_cv(const RunConfig& c, const std::vector<corpus::PunInstance>& instances,
                                          const lexicon::Lexicon& lex, Mode mode, std::ostream* log) {
  const fs::path dir(c.work_dir);
  auto write_preds = [&](std::size_t fold, const std::vector<interp::SensePrediction>& preds) {
    const std::string name = std::string(c.mfs ? "mfs_" : "") + "predictions_fold" + std::to_string(fold) + ".txt";
    auto f = open_output(dir / name);
    interp::write_predictions(f, preds);
  };
  if (c.mfs) {
    auto train = [](std::size_t, const std::vector<corpus::PunInstance>&) { return 0; };
    auto evaluate = [&](std::size_t fold, int, const std::vector<corpus::PunInstance>& test) {
      std::vector<interp::SensePrediction> preds;
      for (const auto& inst : test) preds.push_back(interp::mfs_baseline(inst, lex.senses));
      write_preds(fold, preds);
      return score_interpretations(preds, test);
    };
    return evalkit::cross_validate(instances, c.k_folds, c.required_seed(), train, evaluate);
  }
  auto train = [&](std::size_t fold, const std::vector<corpus::PunInstance>& split) {
    const fs::path p = dir / fold_checkpoint_name("interpret", fold);
    if (mode == Mode::kEval) {
      std::ifstream in(p, std::ios::binary);
      if (!in) throw ConfigError("missing checkpoint " + p.string() + "; run `dann train` first");
      return interp::InterpModel::load(in);
    }
    auto on_epoch = [&](std::size_t epoch, double loss) {
      if (log) *log << nlohmann::json{{"epoch", epoch}, {"loss", loss}, {"fold", fold}}.dump() << '\n';
    };
    auto trained = interp::train_interpreter(pairs_for(split, lex.senses), c.interp_config(), c.interp_train(),
                                             on_epoch);
    auto f = open_output(p);
    trained.model.save(f);
    return std::move(trained.model);
  };
  auto evaluate = [&](std::size_t fold, interp::InterpModel& model, const std::vector<corpus::PunInstance>& test) {
    std::vector<interp::SensePrediction> preds;
    for (const auto& inst : test) preds.push_back(interp::predict_top2(inst, lex.senses, model));
    write_preds(fold, preds);
    return score_interpretations(preds, test);
  };
  return evalkit::cross_validate(instances, c.k_folds, c.required_seed(), train, evaluate);
}

/// Shared body of `train` and `eval`: cross-validate, write the JSON report
/// and text table.
inline evalkit::CvResult run_task(const RunConfig& c, Mode mode, std::ostream& out) {
  c.validate();
  const auto all = load_prepared(c);
  const lexicon::Lexicon lex = load_lexicon(c);
  const fs::path dir(c.work_dir);
  std::optional<std::ofstream> log;
  if (mode == Mode::kTrain && !(c.task == "interpret" && c.mfs)) {
    log = open_output(dir / ("train_log_" + report_stem(c, mode).substr(7) + ".jsonl"));
  }
  std::ostream* log_stream = log ? &*log : nullptr;
  evalkit::CvResult cv;
  if (c.task == "locate") {
    cv = run_locate_cv(c, locatable(all), lex, mode, log_stream, true);
  } else {
    cv = run_interpret_cv(c, interpretable(all), lex, mode, log_stream);
  }
  const std::string task_name = c.task == "interpret" && c.mfs ? "interpret-mfs" : c.task;
  nlohmann::json report = evalkit::report_json(task_name, cv);
  report["config"] = to_json(c);
  const std::string stem = report_stem(c, mode);
  {
    auto f = open_output(dir / (stem + ".json"));
    f << report.dump(2) << '\n';
  }
  const std::string table = evalkit::report_table(task_name, cv);
  {
    auto f = open_output(dir / (stem + ".txt"));
    f << table;
  }
  out << table;
  return cv;
}

inline int cmd_prepare(const RunConfig& c, std::ostream& out) {
  prepare(c, out);
  return kExitOk;
}

inline int cmd_train(const RunConfig& c, std::ostream& out) {
  run_task(c, Mode::kTrain, out);
  return kExitOk;
}

inline int cmd_eval(const RunConfig& c, std::ostream& out) {
  run_task(c, Mode::kEval, out);
  return kExitOk;
}

// ---- sweep -----------------------------------------------------------------

inline std::vector<evalkit::SweepRow> run_sweep(const RunConfig& c, const std::vector<corpus::PunInstance>& instances,
                                                const lexicon::Lexicon& lex) {
  return evalkit::sense_count_sweep(c.sweep_ds, [&](std::size_t ds) {
    RunConfig variant = c;
    variant.d_s = ds;
    return run_locate_cv(variant, instances, lex, Mode::kTrain, nullptr, false);
  });
}

inline int cmd_sweep(const RunConfig& c, std::ostream& out) {
  c.validate();
  const auto instances = locatable(load_prepared(c));
  const lexicon::Lexicon lex = load_lexicon(c);
  const auto rows = run_sweep(c, instances, lex);
  std::ostringstream csv;
  evalkit::write_sweep_csv(csv, rows);
  auto f = open_output(fs::path(c.work_dir) / "sweep.csv");
  f << csv.str();
  out << csv.str();
  return kExitOk;
}

// ---- gradcheck -------------------------------------------------------------

struct GradCheckOutcome {
  GradCheckReport locator;
  GradCheckReport interpreter;
  double worst() const { return std::max(locator.max_rel_error, interpreter.max_rel_error); }
};

inline constexpr double kGradCheckTolerance = 1e-4;

/// Finite-difference check of both models at tiny dimensions on a small
/// seeded synthetic batch.
inline GradCheckOutcome run_gradcheck(std::uint64_t seed) {
  synth::Options so;
  so.seed = seed;
  so.n_train = 2;
  so.n_test = 1;
  so.min_words = 3;
  so.max_words = 4;
  so.min_senses = 1;
  so.max_senses = 3;
  const synth::Dataset loc = synth::generate(so);

  locator::ModelConfig mc;
  mc.d_s = 3;
  mc.d_p = 4;
  mc.d_attn = 4;
  mc.d_model = 8;
  mc.n_layers = 1;
  mc.max_len = 16;
  mc.seed = seed;
  locator::DannModel dann(mc, locator::build_locator_vocab(loc.train, loc.lexicon),
                          loc.lexicon.pronunciations.phoneme_vocabulary());
  std::vector<locator::PreparedSentence> batch;
  for (const auto& inst : loc.train) batch.push_back(dann.prepare(inst, loc.lexicon));

  GradCheckOutcome out;
  out.locator = grad_check(dann.params(), [&](Graph& g) {
    std::vector<Var> losses;
    for (const auto& s : batch) losses.push_back(dann.loss(g, s));
    return g.mean(g.concat_cols(losses));
  });

  synth::Options io = so;
  io.channel = synth::Channel::kInterpretation;
  io.interp_candidates = 3;
  io.interp_topics = 3;
  const synth::Dataset itp = synth::generate(io);
  const auto pairs = pairs_for(itp.train, itp.lexicon.senses);
  interp::InterpModel model({8, 2, 24, seed}, interp::build_pair_vocab(pairs));
  std::vector<std::vector<std::size_t>> seqs;
  for (std::size_t i = 0; i < 2 && i < pairs.size(); ++i) seqs.push_back(model.serialize(pairs[i]));
  out.interpreter = grad_check(model.params(), [&](Graph& g) {
    std::vector<Var> losses;
    for (std::size_t i = 0; i < seqs.size(); ++i) losses.push_back(model.loss(g, seqs[i], pairs[i].label));
    return g.mean(g.concat_cols(losses));
  });
  return out;
}

inline int cmd_gradcheck(const RunConfig& c, std::ostream& out) {
  const GradCheckOutcome r = run_gradcheck(c.required_seed());
  out << std::scientific;
  auto print = [&](const char* model, const GradCheckReport& rep) {
    out << model << ": max relative error " << rep.max_rel_error << '\n';
    for (const auto& p : rep.per_param) out << "  " << p.name << ' ' << p.max_rel_error << '\n';
  };
  print("locator", r.locator);
  print("interpreter", r.interpreter);
  const bool ok = r.worst() <= kGradCheckTolerance;
  out << (ok ? "PASS" : "FAIL") << " (tolerance " << kGradCheckTolerance << ")\n";
  return ok ? kExitOk : kExitAcceptance;
}

// ---- predict ---------------------------------------------------------------

/// Reads one sentence per line and writes "token_index<TAB>token" for the
/// predicted pun. Empty lines produce "-1<TAB>".
inline int cmd_predict(const RunConfig& c, std::istream& in, std::ostream& out, std::ostream& err) {
  const fs::path ckpt = c.checkpoint.empty() ? fs::path(c.work_dir) / fold_checkpoint_name("locate", 0)
                                              : fs::path(c.checkpoint);
  std::ifstream f(ckpt, std::ios::binary);
  if (!f) throw ConfigError("cannot open checkpoint " + ckpt.string() + "; run `dann train` first");
  locator::DannModel model = locator::DannModel::load(f);
  const lexicon::Lexicon lex = load_lexicon(c);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    corpus::PunInstance inst;
    inst.text_id = "line_" + std::to_string(n);
    const auto words = split_whitespace(line);
    for (std::size_t i = 0; i < words.size(); ++i) {
      inst.tokens.push_back({inst.text_id + "_" + std::to_string(i + 1), words[i]});
    }
    if (inst.tokens.empty()) {
      err << "line " << n << ": empty sentence, no prediction\n";
      out << "-1\t\n";
      continue;
    }
    const std::size_t at = locator::DannModel::argmax_earliest(model.pun_probabilities(model.prepare(inst, lex)));
    out << at << '\t' << words[at] << '\n';
  }
  return kExitOk;
}

// ---- synthetic fixtures ----------------------------------------------------

/// Writes a planted-signal corpus (train and test splits concatenated) plus
/// its lexicon files and a matching config into work_dir.
inline int cmd_synth(const RunConfig& c, const std::string& channel, std::ostream& out) {
  synth::Channel ch;
  if (channel == "sense") ch = synth::Channel::kSense;
  else if (channel == "pron") ch = synth::Channel::kPronunciation;
  else if (channel == "interp") ch = synth::Channel::kInterpretation;
  else throw ConfigError("synthetic channel must be sense, pron or interp");
  synth::Options o = synth::Options::for_channel(ch);
  o.seed = c.required_seed();
  const synth::Dataset d = synth::generate(o);
  std::vector<corpus::PunInstance> all = d.train;
  all.insert(all.end(), d.test.begin(), d.test.end());
  const fs::path dir(c.work_dir);
  {
    auto f = open_output(dir / "corpus.xml");
    corpus::write_semeval_xml(f, all);
  }
  {
    auto f = open_output(dir / "gold_location.txt");
    corpus::write_gold_location(f, all);
  }
  if (o.channel == synth::Channel::kInterpretation) {
    auto f = open_output(dir / "gold_senses.txt");
    corpus::write_gold_senses(f, all);
  }
  {
    auto f = open_output(dir / "cmudict.txt");
    f << d.cmudict_text;
  }
  {
    auto f = open_output(dir / "senses.tsv");
    f << d.sense_tsv;
  }
  RunConfig cfg = c;
  cfg.xml = (dir / "corpus.xml").string();
  cfg.gold_location = (dir / "gold_location.txt").string();
  cfg.gold_senses = o.channel == synth::Channel::kInterpretation ? (dir / "gold_senses.txt").string() : "";
  cfg.cmudict = (dir / "cmudict.txt").string();
  cfg.sense_tsv = (dir / "senses.tsv").string();
  cfg.task = o.channel == synth::Channel::kInterpretation ? "interpret" : "locate";
  {
    auto f = open_output(dir / "config.json");
    f << to_json(cfg).dump(2) << '\n';
  }
  out << "wrote " << all.size() << " instances to " << dir.string() << '\n';
  return kExitOk;
}

}  // namespace dann::pipeline
