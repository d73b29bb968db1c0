#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ednet {

// Arm actions. Semi-active is a pseudo-action: the environment applies it
// to group neighbors of a pulled arm; agents never choose it directly.
inline constexpr int kPassive = 0;
inline constexpr int kSemiActive = 1;
inline constexpr int kActive = 2;
inline constexpr int kNumActions = 3;

inline constexpr double kStochasticityTol = 1e-9;

/// Per-arm transition probabilities, indexed [action][from-state][to-state].
struct TransitionTensor {
    std::array<std::array<std::array<double, 2>, 2>, 3> p{};

    double prob(int a, int s, int s_next) const { return p[a][s][s_next]; }
    /// Probability of ending in the learned state from `s` under `a`.
    double up(int a, int s) const { return p[a][s][1]; }

    /// Builds a row-stochastic tensor from the six 0->1 / 1->1 probabilities.
    static TransitionTensor from_up_probs(const std::array<double, 3>& up_from_0,
                                          const std::array<double, 3>& up_from_1);
};

/// Arm-to-topic memberships plus the derived neighbor sets.
/// Immutable after construction; safe to share across threads.
class GroupNetwork {
public:
    GroupNetwork(int n_arms, int n_topics, std::vector<std::vector<int>> membership);

    int n_arms() const { return n_arms_; }
    int n_topics() const { return n_topics_; }
    const std::vector<int>& topics_of(int arm) const;
    const std::vector<int>& members_of(int topic) const;
    /// Neighbor set excluding the arm itself (sorted ascending).
    const std::vector<int>& neighbors(int arm) const;

    const std::vector<std::vector<int>>& membership() const { return membership_; }

private:
    int n_arms_;
    int n_topics_;
    std::vector<std::vector<int>> membership_;     // arm -> sorted topic ids
    std::vector<std::vector<int>> topic_members_;  // topic -> sorted arm ids
    std::vector<std::vector<int>> neighbors_;      // arm -> sorted neighbor ids
};

/// Arms that share a group with `arm`, excluding `arm` itself.
std::vector<int> neighborhood(const GroupNetwork& network, int arm);

/// A simulated learner: one transition tensor per arm over a group network.
struct StudentModel {
    GroupNetwork network;
    std::vector<TransitionTensor> tensors;

    int n_arms() const { return network.n_arms(); }
};

struct Violation {
    int arm;  // -1 for model-level violations
    std::string constraint;
    std::string detail;

    std::string to_string() const;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    std::string to_string() const;
};

/// Checks every tensor against the model constraints: row-stochasticity,
/// strictly positive entries, retention dominance (learned state is
/// stickier than unlearned for every action), and the effort ordering
/// passive < semi-active < active in both rows. Violations are reported
/// as data; the model is never mutated.
ValidationReport validate(const StudentModel& model);

using JointState = std::vector<std::uint8_t>;   // entries in {0,1}
using JointAction = std::vector<std::uint8_t>;  // entries in {0,1,2}

int joint_reward(const JointState& state);

// --- serialization ---------------------------------------------------------

nlohmann::ordered_json model_to_json(const StudentModel& model);
StudentModel model_from_json(const nlohmann::json& j);

void save_model(const StudentModel& model, const std::filesystem::path& path);
StudentModel load_model(const std::filesystem::path& path);

}  // namespace ednet
