// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "proact/errors.hpp"

namespace proact {

/// Dense row-major 2-D tensor. Vectors are 1 x n rows unless stated.
/// float is the training/inference precision, double the verification one.
template <class T>
using Tensor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <class T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

std::string shape_string(Eigen::Index rows, Eigen::Index cols);

template <class T>
std::string shape_string(const Tensor<T>& t) {
  return shape_string(t.rows(), t.cols());
}

template <class T>
bool all_finite(const Tensor<T>& t) {
  return t.allFinite();
}

template <class T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
};

/// Gradient slots shaped like a ParamStore, used as per-clip scratch when
/// clips are processed in parallel and summed afterwards.
template <class T>
class GradientSet {
 public:
  GradientSet() = default;

  explicit GradientSet(const std::vector<std::pair<Eigen::Index, Eigen::Index>>& shapes) {
    slots_.reserve(shapes.size());
    for (const auto& [r, c] : shapes) slots_.push_back(Tensor<T>::Zero(r, c));
  }

  std::size_t size() const { return slots_.size(); }
  Tensor<T>& operator[](std::size_t i) { return slots_[i]; }
  const Tensor<T>& operator[](std::size_t i) const { return slots_[i]; }

  void zero() {
    for (auto& s : slots_) s.setZero();
  }

 private:
  std::vector<Tensor<T>> slots_;
};

/// Named parameters with matching gradient slots and the optimizer step
/// counter. Names are unique; indices returned by add() are stable.
template <class T>
class ParamStore {
 public:
  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    if (index_.contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
    const std::size_t id = params_.size();
    index_.emplace(name, id);
    params_.push_back({std::move(name), Tensor<T>::Zero(rows, cols), Tensor<T>::Zero(rows, cols)});
    return id;
  }

  std::size_t size() const { return params_.size(); }

  Parameter<T>& at(std::size_t i) { return params_.at(i); }
  const Parameter<T>& at(std::size_t i) const { return params_.at(i); }

  const Tensor<T>& value(std::size_t i) const { return params_[i].value; }
  Tensor<T>& value(std::size_t i) { return params_[i].value; }
  Tensor<T>& grad(std::size_t i) { return params_[i].grad; }
  const Tensor<T>& grad(std::size_t i) const { return params_[i].grad; }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(std::string_view name) const {
    auto id = find(name);
    if (!id) throw ConfigError("unknown parameter '" + std::string(name) + "'");
    return *id;
  }

  std::size_t total_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.grad.setZero();
  }

  GradientSet<T> make_gradient_set() const {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;
    shapes.reserve(params_.size());
    for (const auto& p : params_) shapes.emplace_back(p.value.rows(), p.value.cols());
    return GradientSet<T>(shapes);
  }

  void accumulate(const GradientSet<T>& g) {
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i].grad += g[i];
  }

  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }

  template <class U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& p : params_) {
      const auto id = out.add(p.name, p.value.rows(), p.value.cols());
      out.value(id) = p.value.template cast<U>();
      out.grad(id) = p.grad.template cast<U>();
    }
    out.set_step(step_);
    return out;
  }

  /// Copy values (not gradients) from a store with identical layout.
  template <class U>
  void assign_values(const ParamStore<U>& other) {
    if (other.size() != size()) throw DimensionError("parameter layout mismatch");
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (other.at(i).name != params_[i].name ||
          other.value(i).rows() != params_[i].value.rows() ||
          other.value(i).cols() != params_[i].value.cols())
        throw DimensionError("parameter layout mismatch at '" + params_[i].name + "'");
      params_[i].value = other.value(i).template cast<T>();
    }
  }

 private:
  std::vector<Parameter<T>> params_;
  std::unordered_map<std::string, std::size_t> index_;
  std::int64_t step_ = 0;
};

template <class T>
void fill_normal(Tensor<T>& t, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<T>(dist(rng));
}

}  // namespace proact
