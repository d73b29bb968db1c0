#include "ednet/env.hpp"

#include <stdexcept>
#include <string>

namespace ednet {

JointAction expand_action(const GroupNetwork& network, const std::vector<int>& pulled) {
    const int n = network.n_arms();
    JointAction action(n, static_cast<std::uint8_t>(kPassive));
    for (int i : pulled) {
        if (i < 0 || i >= n)
            throw std::invalid_argument("expand_action: arm index " + std::to_string(i) +
                                        " out of range");
        if (action[i] == kActive)
            throw std::invalid_argument("expand_action: duplicate arm index " +
                                        std::to_string(i));
        action[i] = kActive;
    }
    for (int i : pulled)
        for (int j : network.neighbors(i))
            if (action[j] == kPassive) action[j] = kSemiActive;
    return action;
}

namespace {

void check_step_inputs(const StudentModel& model, const JointState& state,
                       const JointAction& action) {
    const int n = model.n_arms();
    if (static_cast<int>(state.size()) != n || static_cast<int>(action.size()) != n)
        throw std::invalid_argument("step: state/action length != n_arms");
    for (int i = 0; i < n; ++i) {
        if (state[i] > 1) throw std::invalid_argument("step: state entries must be 0 or 1");
        if (action[i] > kActive)
            throw std::invalid_argument("step: action entries must be in {0,1,2}");
    }
    // every semi-active arm must be justified by some pulled neighbor
    for (int j = 0; j < n; ++j) {
        if (action[j] != kSemiActive) continue;
        bool justified = false;
        for (int i : model.network.neighbors(j)) {
            if (action[i] == kActive) {
                justified = true;
                break;
            }
        }
        if (!justified)
            throw std::invalid_argument("step: arm " + std::to_string(j) +
                                        " is semi-active without a pulled neighbor");
    }
}

}  // namespace

StepOutcome step(const StudentModel& model, const JointState& state, const JointAction& action,
                 Xoshiro256StarStar& rng) {
    check_step_inputs(model, state, action);
    const int n = model.n_arms();
    StepOutcome out;
    out.next_state.resize(n);
    out.applied_actions = action;
    int reward = 0;
    for (int i = 0; i < n; ++i) {
        const double p_up = model.tensors[i].up(action[i], state[i]);
        const double u = rng.uniform01();
        const std::uint8_t next = u < p_up ? 1 : 0;
        out.next_state[i] = next;
        reward += next;
    }
    out.reward = reward;
    return out;
}

JointState reset_state(int n_arms) { return JointState(n_arms, 0); }

Environment::Environment(const StudentModel& model, EnvConfig config)
    : model_(model), config_(config), rng_(config.seed), state_(reset_state(model.n_arms())) {
    if (config_.horizon < 1) throw std::invalid_argument("Environment: horizon must be >= 1");
    if (config_.k < 1 || config_.k > model.n_arms())
        throw std::invalid_argument("Environment: k must be in [1, n_arms]");
}

const JointState& Environment::reset() {
    state_ = reset_state(model_.n_arms());
    return state_;
}

StepOutcome Environment::step(const std::vector<int>& pulled) {
    if (static_cast<int>(pulled.size()) != config_.k)
        throw std::invalid_argument("Environment: expected exactly k=" +
                                    std::to_string(config_.k) + " pulled arms, got " +
                                    std::to_string(pulled.size()));
    const JointAction action = expand_action(model_.network, pulled);
    StepOutcome outcome = ednet::step(model_, state_, action, rng_);
    state_ = outcome.next_state;
    return outcome;
}

}  // namespace ednet
