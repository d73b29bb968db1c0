#include "ednet/whittle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ednet {

namespace {

struct ArmValues {
    double v[2];
};

// Value iteration for the two-action (passive/active) subsidized arm MDP.
ArmValues solve_values(const TransitionTensor& t, double gamma, double subsidy, double vi_tol) {
    ArmValues values{{0.0, 0.0}};
    for (int iter = 0; iter < 100000; ++iter) {
        double next[2];
        double delta = 0.0;
        for (int s = 0; s < 2; ++s) {
            const double future_passive =
                t.p[kPassive][s][0] * values.v[0] + t.p[kPassive][s][1] * values.v[1];
            const double future_active =
                t.p[kActive][s][0] * values.v[0] + t.p[kActive][s][1] * values.v[1];
            const double q_passive = s + subsidy + gamma * future_passive;
            const double q_active = s + gamma * future_active;
            next[s] = std::max(q_passive, q_active);
            delta = std::max(delta, std::abs(next[s] - values.v[s]));
        }
        values.v[0] = next[0];
        values.v[1] = next[1];
        if (delta < vi_tol) return values;
    }
    throw std::runtime_error("threshold_whittle_index: value iteration did not converge");
}

}  // namespace

double whittle_active_advantage(const TransitionTensor& t, int state, double gamma,
                                double subsidy, double vi_tol) {
    const ArmValues values = solve_values(t, gamma, subsidy, vi_tol);
    const double future_passive =
        t.p[kPassive][state][0] * values.v[0] + t.p[kPassive][state][1] * values.v[1];
    const double future_active =
        t.p[kActive][state][0] * values.v[0] + t.p[kActive][state][1] * values.v[1];
    const double q_passive = state + subsidy + gamma * future_passive;
    const double q_active = state + gamma * future_active;
    return q_active - q_passive;
}

double threshold_whittle_index(const TransitionTensor& tensor, int state, double gamma,
                               double vi_tol, double bisect_tol) {
    if (state != 0 && state != 1)
        throw std::invalid_argument("threshold_whittle_index: state must be 0 or 1");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("threshold_whittle_index: gamma must be in (0,1)");

    double lo = -1.0;
    double hi = 1.0 / (1.0 - gamma);
    // the advantage is decreasing in the subsidy; the root is the index
    double f_lo = whittle_active_advantage(tensor, state, gamma, lo, vi_tol);
    double f_hi = whittle_active_advantage(tensor, state, gamma, hi, vi_tol);
    if (f_lo <= 0.0) return lo;
    if (f_hi >= 0.0) return hi;
    while (hi - lo > bisect_tol) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = whittle_active_advantage(tensor, state, gamma, mid, vi_tol);
        if (f_mid > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace ednet
