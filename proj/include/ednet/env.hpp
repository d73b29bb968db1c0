#pragma once

#include <cstdint>
#include <vector>

#include "ednet/model.hpp"
#include "ednet/rng.hpp"

namespace ednet {

struct EnvConfig {
    int horizon = 50;       // actions per episode
    int k = 1;              // arms pulled per step
    std::uint64_t seed = 0;
};

struct StepOutcome {
    JointState next_state;
    int reward;  // sum of next-state entries
    JointAction applied_actions;
};

/// Builds the joint action for a pull set: pulled arms become active,
/// their group neighbors semi-active, everything else passive. An arm
/// neighboring several pulled arms receives the pseudo-action once.
JointAction expand_action(const GroupNetwork& network, const std::vector<int>& pulled);

/// Samples every arm's next state independently from its tensor row.
/// Consumes exactly one uniform draw per arm, in ascending arm order,
/// so a trajectory is reproducible from the generator seed alone.
StepOutcome step(const StudentModel& model, const JointState& state, const JointAction& action,
                 Xoshiro256StarStar& rng);

/// All arms start unlearned. Episode resets never touch agent state.
JointState reset_state(int n_arms);

/// Stateful convenience wrapper around expand_action/step for one trial.
/// Owns its generator; one instance per logical thread of control.
class Environment {
public:
    Environment(const StudentModel& model, EnvConfig config);

    /// Starts an episode: all arms unlearned. Leaves the generator alone.
    const JointState& reset();
    /// Expands the pull set (must have exactly k arms) and samples the
    /// transition, advancing the internal state.
    StepOutcome step(const std::vector<int>& pulled);

    const JointState& state() const { return state_; }
    const EnvConfig& config() const { return config_; }

private:
    const StudentModel& model_;
    EnvConfig config_;
    Xoshiro256StarStar rng_;
    JointState state_;
};

}  // namespace ednet
