#include "spectralopt/optim.hpp"

#include <set>

#include "spectralopt/densela.hpp"

namespace spectralopt::optim {

void OptimizerState::validate() const {
  if (!(eta > 0.0)) throw DimensionError("optimizer: eta must be positive");
  if (!(mu >= 0.0 && mu < 1.0)) {
    throw DimensionError("optimizer: mu must lie in [0, 1)");
  }
  ns.validate();
}

Matrix step(const Matrix& w, const Matrix& g, OptimizerState& state) {
  state.validate();
  if (!same_shape(w, g)) {
    throw DimensionError("optimizer step: parameter and gradient shapes disagree");
  }
  if (!state.momentum) {
    state.momentum = Matrix(w.rows(), w.cols());
  } else if (!same_shape(*state.momentum, g)) {
    throw DimensionError("optimizer step: momentum buffer shape disagrees");
  }
  *state.momentum = state.mu * *state.momentum + g;

  if (state.kind == Kind::Sgd) {
    return w - state.eta * *state.momentum;
  }

  ++state.muon_steps;
  if (la::frobenius_norm(*state.momentum) == 0.0) {
    throw NumericError("optimizer step: zero update matrix has no polar factor");
  }
  Matrix direction = state.use_exact_polar
                         ? polar::exact_polar(*state.momentum)
                         : polar::newton_schulz(*state.momentum, state.ns).q;
  return w - state.eta * direction;
}

std::vector<ParamGroup> route(const std::vector<ParamSpec>& params,
                              const RoutePolicy& policy) {
  policy.target.validate();
  if (!(policy.eta_reference > 0.0)) {
    throw DimensionError("route: eta_reference must be positive");
  }
  std::set<std::string> seen;
  std::vector<ParamGroup> groups;
  groups.reserve(params.size());
  for (const ParamSpec& p : params) {
    if (p.rows < 1 || p.cols < 1) {
      throw DimensionError("route: parameter '" + p.label + "' has empty shape");
    }
    if (!seen.insert(p.label).second) {
      throw DimensionError("route: duplicate parameter label '" + p.label + "'");
    }
    ParamGroup grp;
    grp.label = p.label;
    grp.matrix_shaped = p.rows > 1 && p.cols > 1;
    if (grp.matrix_shaped) {
      grp.state = policy.target;
    } else {
      grp.state.kind = Kind::Sgd;
      grp.state.eta = policy.eta_reference;
      grp.state.mu = policy.target.mu;
    }
    grp.state.momentum.reset();
    grp.state.muon_steps = 0;
    groups.push_back(std::move(grp));
  }
  return groups;
}

}  // namespace spectralopt::optim
