#pragma once

#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dann/corpus.hpp"
#include "dann/error.hpp"

namespace dann::evalkit {

/// SemEval-style scores. precision = correct/attempted, recall =
/// correct/total, f1 = harmonic mean (0 when P+R = 0).
struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t attempted = 0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::size_t warnings = 0;

  static PRF from_counts(std::size_t attempted, std::size_t correct, std::size_t total) {
    PRF r;
    r.attempted = attempted;
    r.correct = correct;
    r.total = total;
    r.precision = attempted == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(attempted);
    r.recall = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
    const double s = r.precision + r.recall;
    r.f1 = s == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / s;
    return r;
  }
};

/// Exact token-id match per text.
inline PRF location_prf(const std::map<std::string, std::string>& predictions,
                        const std::map<std::string, std::string>& gold) {
  std::size_t correct = 0;
  for (const auto& [text_id, token_id] : predictions) {
    auto it = gold.find(text_id);
    if (it == gold.end()) throw ScoringError("prediction for unknown text " + text_id);
    if (it->second == token_id) ++correct;
  }
  return PRF::from_counts(predictions.size(), correct, gold.size());
}

using KeyPair = std::pair<std::string, std::string>;

/// A prediction is correct when its two keys are distinct and both belong to
/// the gold set. Abstentions (nullopt) are not attempted.
inline PRF interpretation_prf(const std::map<std::string, std::optional<KeyPair>>& predictions,
                              const std::map<std::string, std::set<std::string>>& gold) {
  std::size_t attempted = 0, correct = 0, warnings = 0;
  for (const auto& [token_id, pred] : predictions) {
    auto it = gold.find(token_id);
    if (it == gold.end()) throw ScoringError("prediction for unknown token " + token_id);
    if (!pred) continue;
    ++attempted;
    if (pred->first == pred->second) {
      ++warnings;
      continue;
    }
    if (it->second.contains(pred->first) && it->second.contains(pred->second)) ++correct;
  }
  PRF r = PRF::from_counts(attempted, correct, gold.size());
  r.warnings = warnings;
  return r;
}

struct CvResult {
  std::vector<PRF> per_fold;
  PRF mean;  // unweighted mean of P, R, F1; counts summed
};

inline PRF mean_prf(const std::vector<PRF>& folds) {
  PRF m;
  if (folds.empty()) return m;
  for (const auto& f : folds) {
    m.precision += f.precision;
    m.recall += f.recall;
    m.f1 += f.f1;
    m.attempted += f.attempted;
    m.correct += f.correct;
    m.total += f.total;
    m.warnings += f.warnings;
  }
  const double k = static_cast<double>(folds.size());
  m.precision /= k;
  m.recall /= k;
  m.f1 /= k;
  return m;
}

/// k-fold driver. `train(fold, train_split)` returns a model that
/// `evaluate(fold, model, test_split)` scores. Folds run in index order.
template <class TrainFn, class EvalFn>
CvResult cross_validate(const std::vector<corpus::PunInstance>& instances, std::size_t k, std::uint64_t seed,
                        TrainFn&& train, EvalFn&& evaluate) {
  const corpus::FoldPlan plan = corpus::make_folds(instances, k, seed);
  CvResult out;
  for (std::size_t fold = 0; fold < k; ++fold) {
    std::vector<corpus::PunInstance> train_split, test_split;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      (plan.fold_of[i] == fold ? test_split : train_split).push_back(instances[i]);
    }
    if (test_split.empty()) throw ConfigError("fold " + std::to_string(fold) + " has an empty test split");
    auto model = train(fold, train_split);
    out.per_fold.push_back(evaluate(fold, model, test_split));
  }
  out.mean = mean_prf(out.per_fold);
  return out;
}

struct SweepRow {
  std::size_t d_s = 0;
  double f1 = 0.0;
};

/// Runs `run_cv(d_s)` for each value, everything else held fixed.
template <class RunFn>
std::vector<SweepRow> sense_count_sweep(const std::vector<std::size_t>& ds_values, RunFn&& run_cv) {
  if (ds_values.empty()) throw ConfigError("sweep needs at least one d_s value");
  for (std::size_t i = 1; i < ds_values.size(); ++i) {
    if (ds_values[i] <= ds_values[i - 1]) throw ConfigError("sweep d_s values must be strictly ascending");
  }
  std::vector<SweepRow> rows;
  for (std::size_t ds : ds_values) {
    const CvResult r = run_cv(ds);
    rows.push_back({ds, r.mean.f1});
  }
  return rows;
}

// ---- reports ---------------------------------------------------------------

inline nlohmann::json to_json(const PRF& r) {
  return {{"p", r.precision}, {"r", r.recall},     {"f1", r.f1},
          {"attempted", r.attempted}, {"correct", r.correct}, {"total", r.total}};
}

inline nlohmann::json report_json(const std::string& task, const CvResult& cv) {
  nlohmann::json j;
  j["task"] = task;
  j["per_fold"] = nlohmann::json::array();
  for (std::size_t i = 0; i < cv.per_fold.size(); ++i) {
    auto f = to_json(cv.per_fold[i]);
    f["fold"] = i;
    j["per_fold"].push_back(std::move(f));
  }
  j["mean"] = {{"p", cv.mean.precision}, {"r", cv.mean.recall}, {"f1", cv.mean.f1}};
  return j;
}

inline std::string report_table(const std::string& task, const CvResult& cv) {
  std::ostringstream os;
  os << "task: " << task << '\n';
  os << std::left << std::setw(6) << "fold" << std::setw(10) << "P" << std::setw(10) << "R" << std::setw(10) << "F1"
     << "correct/attempted/total\n";
  os << std::fixed << std::setprecision(4);
  for (std::size_t i = 0; i < cv.per_fold.size(); ++i) {
    const PRF& f = cv.per_fold[i];
    os << std::setw(6) << i << std::setw(10) << f.precision << std::setw(10) << f.recall << std::setw(10) << f.f1
       << f.correct << '/' << f.attempted << '/' << f.total << '\n';
  }
  os << std::setw(6) << "mean" << std::setw(10) << cv.mean.precision << std::setw(10) << cv.mean.recall
     << std::setw(10) << cv.mean.f1 << '\n';
  return os.str();
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "d_s,f1\n";
  out << std::setprecision(17);
  for (const auto& r : rows) out << r.d_s << ',' << r.f1 << '\n';
}

}  // namespace dann::evalkit
