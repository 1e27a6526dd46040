#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "alqr/model.hpp"

namespace alqr {

/// What a policy may look at when choosing u(t): x(0..t) and u(0..t-1).
struct History {
  std::span<const Vector> states;
  std::span<const Vector> inputs;

  Index time() const { return static_cast<Index>(states.size()) - 1; }
  const Vector& current() const { return states.back(); }
};

struct Action {
  Vector input;
  /// Present for linear policies: input == gain * x(t).
  std::optional<Matrix> gain;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action act(const History& history) = 0;
  virtual std::string_view name() const = 0;
};

}  // namespace alqr
