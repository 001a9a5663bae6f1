#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spectralopt/matrix.hpp"
#include "spectralopt/polar.hpp"

namespace spectralopt::optim {

enum class Kind { Sgd, Muon };

struct OptimizerState {
  Kind kind = Kind::Sgd;
  double eta = 0.01;
  double mu = 0.0;  // momentum in [0, 1); the buffer is orthogonalized, not the raw gradient
  std::optional<Matrix> momentum;  // allocated on first step
  polar::NewtonSchulzConfig ns;
  bool use_exact_polar = false;
  std::int64_t muon_steps = 0;  // instrumentation: updates taken through the Muon branch

  void validate() const;  // eta > 0, mu in [0, 1), ns valid
};

// One update: the momentum buffer moves first (m <- mu*m + g), then
//   Sgd:  w - eta * m
//   Muon: w - eta * polar(m)
// Errors on shape mismatch and on a zero update matrix under Muon.
Matrix step(const Matrix& w, const Matrix& g, OptimizerState& state);

struct ParamSpec {
  std::string label;
  int rows = 1;
  int cols = 1;
};

struct RoutePolicy {
  OptimizerState target;        // applied to matrix-shaped parameters
  double eta_reference = 0.01;  // plain SGD for vectors and scalars
};

struct ParamGroup {
  std::string label;
  bool matrix_shaped = false;
  OptimizerState state;
};

// Matrix-shaped means both dimensions exceed 1; everything else trains with
// the reference SGD. Duplicate labels are an error.
std::vector<ParamGroup> route(const std::vector<ParamSpec>& params,
                              const RoutePolicy& policy);

}  // namespace spectralopt::optim
