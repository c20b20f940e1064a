#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

#include "state.hpp"

namespace partial_control {

/// Slope-mu tent map, deterministic part only.
inline double tent_apply(double x, double mu) { return x <= 0.5 ? mu * x : mu * (1.0 - x); }

/// Hénon map (x, y) -> (a - b y - x^2, x).
inline State henon_apply(State q, double a, double b) { return {a - b * q.y - q.x * q.x, q.x}; }

/// Lozi map (x, y) -> (1 - a |x| + b y, x).
inline State lozi_apply(State q, double a, double b) { return {1.0 - a * std::fabs(q.x) + b * q.y, q.x}; }

using Parameters = std::map<std::string, double>;

/// A deterministic map f acting on states of a fixed dimension.
class MapSystem {
 public:
  using Function = std::function<State(State)>;

  MapSystem(std::string name, int dimension, Parameters parameters, Function f)
      : name_(std::move(name)), dimension_(dimension), parameters_(std::move(parameters)), f_(std::move(f)) {
    if (dimension_ != 1 && dimension_ != 2) throw std::invalid_argument("map dimension must be 1 or 2");
  }

  State operator()(State q) const { return f_(q); }

  const std::string& name() const { return name_; }
  int dimension() const { return dimension_; }
  const Parameters& parameters() const { return parameters_; }
  double parameter(const std::string& key) const {
    auto it = parameters_.find(key);
    if (it == parameters_.end()) throw std::out_of_range("map '" + name_ + "' has no parameter '" + key + "'");
    return it->second;
  }

 private:
  std::string name_;
  int dimension_;
  Parameters parameters_;
  Function f_;
};

inline MapSystem tent_map(double mu = 3.0) {
  return {"tent", 1, {{"mu", mu}}, [mu](State q) { return State{tent_apply(q.x, mu), 0.0}; }};
}

inline MapSystem henon_map(double a = 6.0, double b = 0.4) {
  return {"henon", 2, {{"a", a}, {"b", b}}, [a, b](State q) { return henon_apply(q, a, b); }};
}

inline MapSystem lozi_map(double a = 2.0, double b = 0.5) {
  return {"lozi", 2, {{"a", a}, {"b", b}}, [a, b](State q) { return lozi_apply(q, a, b); }};
}

inline MapSystem identity_map(int dimension) {
  return {"identity", dimension, {}, [](State q) { return q; }};
}

/// Translation q -> q + c along every used axis; a toy system for tests.
inline MapSystem shift_map(int dimension, double c) {
  return {"shift", dimension, {{"c", c}}, [dimension, c](State q) {
            return State{q.x + c, dimension == 2 ? q.y + c : 0.0};
          }};
}

/// Builds a named map. Missing parameters take their reference defaults;
/// unknown parameter names are rejected.
inline MapSystem make_map(const std::string& name, const Parameters& params, int dimension = 1) {
  auto get = [&](const std::string& key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  auto check = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : params) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) throw std::invalid_argument("map '" + name + "' has no parameter '" + key + "'");
    }
  };
  if (name == "tent") {
    check({"mu"});
    return tent_map(get("mu", 3.0));
  }
  if (name == "henon") {
    check({"a", "b"});
    return henon_map(get("a", 6.0), get("b", 0.4));
  }
  if (name == "lozi") {
    check({"a", "b"});
    return lozi_map(get("a", 2.0), get("b", 0.5));
  }
  if (name == "identity") {
    check({});
    return identity_map(dimension);
  }
  if (name == "shift") {
    check({"c"});
    return shift_map(dimension, get("c", 0.0));
  }
  throw std::invalid_argument("unknown map '" + name + "' (expected tent, henon, lozi, identity or shift)");
}

}  // namespace partial_control
