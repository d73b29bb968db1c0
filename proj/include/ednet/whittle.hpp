#pragma once

#include "ednet/model.hpp"

namespace ednet {

/// Whittle index of a two-state arm computed from its known passive and
/// active rows (the pseudo-action row is ignored). The index is the
/// passivity subsidy m at which active and passive are indifferent in
/// `state` for the discounted MDP with reward s + m*1{passive}, located
/// by bisection over [-1, 1/(1-gamma)] with value iteration at each
/// candidate subsidy.
double threshold_whittle_index(const TransitionTensor& tensor, int state, double gamma,
                               double vi_tol = 1e-9, double bisect_tol = 1e-6);

/// Advantage of active over passive in `state` under subsidy m, evaluated
/// at the converged values of the subsidized MDP. Exposed for the
/// grid-search cross-check of the bisection root.
double whittle_active_advantage(const TransitionTensor& tensor, int state, double gamma,
                                double subsidy, double vi_tol = 1e-9);

}  // namespace ednet
