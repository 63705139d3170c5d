#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "dann/error.hpp"
#include "dann/numcore/rng.hpp"
#include "dann/numcore/tensor.hpp"

namespace dann {

/// Trainable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Stable handle into a ParamStore. Copying a store keeps handles valid.
struct ParamId {
  std::size_t index = static_cast<std::size_t>(-1);
  bool operator==(const ParamId&) const = default;
};

enum class Init { kZeros, kUniform01, kGlorot };

/// Ordered, uniquely named parameter collection.
///
/// Insertion order is the manifest order used by checkpoints and the
/// optimizer. Elements live in a deque so references handed to a Graph stay
/// valid while more parameters are added.
class ParamStore {
 public:
  ParamId add(const std::string& name, std::vector<std::size_t> shape, Init init, Rng& rng) {
    if (by_name_.contains(name)) throw ContractError("duplicate parameter name '" + name + "'");
    Parameter p{name, Tensor(shape), Tensor(shape)};
    switch (init) {
      case Init::kZeros:
        break;
      case Init::kUniform01:
        for (double& v : p.value.data) v = rng.uniform(-0.1, 0.1);
        break;
      case Init::kGlorot: {
        const double fan_in = static_cast<double>(shape.empty() ? 1 : shape.front());
        const double fan_out = static_cast<double>(shape.size() < 2 ? 1 : shape.back());
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& v : p.value.data) v = rng.uniform(-limit, limit);
        break;
      }
    }
    by_name_.emplace(name, params_.size());
    params_.push_back(std::move(p));
    return ParamId{params_.size() - 1};
  }

  Parameter& operator[](ParamId id) { return params_.at(id.index); }
  const Parameter& operator[](ParamId id) const { return params_.at(id.index); }

  Parameter& at(std::size_t i) { return params_.at(i); }
  const Parameter& at(std::size_t i) const { return params_.at(i); }

  const Parameter* find(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : &params_[it->second];
  }
  Parameter* find(const std::string& name) {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : &params_[it->second];
  }

  std::size_t size() const noexcept { return params_.size(); }

  std::size_t coordinate_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.grad.fill(0.0);
  }

  std::vector<Tensor> snapshot() const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.value);
    return out;
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::deque<Parameter> params_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

}  // namespace dann
