#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dann/error.hpp"
#include "dann/numcore/graph.hpp"
#include "dann/numcore/params.hpp"

namespace dann {

struct ParamGradError {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::vector<ParamGradError> per_param;
};

/// Builds a scalar loss on the given graph from the store's parameters.
using LossBuilder = std::function<Var(Graph&)>;

/// Compares backward() against central differences on every coordinate of
/// every parameter. rel_err = |a - n| / max(1, |a|, |n|).
inline GradCheckReport grad_check(ParamStore& store, const LossBuilder& build, double epsilon = 1e-5) {
  auto forward = [&] {
    Graph g;
    return g.value(build(g))[0];
  };
  GradCheckReport report;
  if (store.size() == 0) return report;

  const double first = forward();
  const double second = forward();
  if (first != second) {
    throw DeterminismError("forward pass is not deterministic: " + std::to_string(first) + " vs " +
                           std::to_string(second));
  }

  store.zero_grad();
  {
    Graph g;
    g.backward(build(g));
  }
  std::vector<Tensor> analytic;
  for (const Parameter& p : store) analytic.push_back(p.grad);
  store.zero_grad();

  for (std::size_t i = 0; i < store.size(); ++i) {
    Parameter& p = store.at(i);
    ParamGradError entry{p.name, 0.0, 0};
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double saved = p.value[j];
      p.value[j] = saved + epsilon;
      const double up = forward();
      p.value[j] = saved - epsilon;
      const double down = forward();
      p.value[j] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = analytic[i][j];
      const double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      if (rel > entry.max_rel_error) {
        entry.max_rel_error = rel;
        entry.worst_index = j;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.per_param.push_back(std::move(entry));
  }
  return report;
}

}  // namespace dann
