#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "ednet/model.hpp"
#include "ednet/rng.hpp"

namespace ednet {

struct LearnerConfig {
    double alpha = 0.1;
    double gamma = 0.95;
    bool use_replay = true;       // false selects the no-replay ablation
    int buffer_capacity = 10000;
    int batch_size = 64;
};

/// Per-arm state-action values q[arm][state][action], zero-initialized.
/// The network-aware learners use 3 actions; the network-blind baseline
/// keeps a 2-action table (passive, active).
class QTable {
public:
    explicit QTable(int n_arms, int n_actions = kNumActions);

    int n_arms() const { return n_arms_; }
    int n_actions() const { return n_actions_; }

    double get(int arm, int s, int a) const { return q_[index(arm, s, a)]; }
    void set(int arm, int s, int a, double v) { q_[index(arm, s, a)] = v; }
    double max_over_actions(int arm, int s) const;

    const std::vector<double>& raw() const { return q_; }

private:
    int index(int arm, int s, int a) const { return (arm * 2 + s) * n_actions_ + a; }

    int n_arms_;
    int n_actions_;
    std::vector<double> q_;
};

/// One logged interaction: joint state, joint action, scalar reward,
/// joint next state.
struct Experience {
    JointState state;
    JointAction action;
    double reward;
    JointState next_state;
};

/// Bounded FIFO of experiences; eviction is oldest-first.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Experience e);
    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return entries_.empty(); }
    /// Entries in insertion order, 0 = oldest surviving.
    const Experience& at(std::size_t i) const;
    /// One experience uniformly at random; consumes one draw.
    const Experience& sample(Xoshiro256StarStar& rng) const;

private:
    std::size_t capacity_;
    std::size_t head_ = 0;  // index of the oldest entry once full
    std::vector<Experience> entries_;
};

/// Exploration schedule N/(N+t); t is the global interaction count
/// accumulated across episodes.
double epsilon_schedule(int n_arms, std::int64_t global_step);

/// Whittle index estimate for pulling `arm` in the current joint state:
/// its own active-over-passive value gap plus the semi-active-over-passive
/// gaps of its group neighbors, all at the arms' current states.
double whittle_estimate(const QTable& q, const JointState& state, const GroupNetwork& network,
                        int arm);

/// Decomposed joint state-action value of pulling `arm`: active value for
/// the arm, semi-active for its neighbors, passive for everything else.
/// Differs from whittle_estimate by a constant in the arm argument, which
/// makes the two rankings identical.
double joint_q_decomposition(const QTable& q, const JointState& state,
                             const GroupNetwork& network, int arm);

/// Decomposed joint value of pulling a set of arms, with non-stacking
/// semi-active coverage (the pull set's neighbors count once).
double joint_q_decomposition_set(const QTable& q, const JointState& state,
                                 const GroupNetwork& network, const std::vector<int>& pulled);

/// q[arm][s][a] <- (1-alpha) q[arm][s][a] + alpha (r + gamma max_a' q[arm][s'][a']).
/// Touches exactly one entry.
void q_update(QTable& q, int arm, int s, int a, double reward, int s_next,
              const LearnerConfig& config);

/// Samples `batch_size` experiences uniformly with replacement and applies
/// q_update to every arm of each sampled experience, crediting each arm
/// with its own next state as reward.
void learn_from_batch(QTable& q, const ReplayBuffer& buffer, const LearnerConfig& config,
                      Xoshiro256StarStar& rng);

/// Applies the per-arm update once for a single transition (the no-replay path).
void learn_from_transition(QTable& q, const Experience& e, const LearnerConfig& config);

/// Greedy pull-set construction for k > 1: repeatedly adds the arm with
/// the highest residual index estimate, dropping contributions of arms
/// already selected or already semi-active through an earlier selection.
/// Ties break toward the lowest index. Costs about (2N-k)k/2 evaluations.
std::vector<int> greedy_select_k(const QTable& q, const JointState& state,
                                 const GroupNetwork& network, int k);

/// Argmax of whittle_estimate with uniform tie-breaking.
int select_greedy_eduqate(const QTable& q, const JointState& state, const GroupNetwork& network,
                          Xoshiro256StarStar& rng);

/// Epsilon-greedy arm choice over whittle_estimate.
int select_arm_eduqate(const QTable& q, const JointState& state, const GroupNetwork& network,
                       std::int64_t global_step, Xoshiro256StarStar& rng);

/// Epsilon-greedy arm choice for the network-blind two-action learner.
int select_arm_wiql(const QTable& q2, const JointState& state, std::int64_t global_step,
                    Xoshiro256StarStar& rng);

// --- checkpointing ----------------------------------------------------------

nlohmann::ordered_json qtable_to_json(const QTable& q, std::int64_t global_step,
                                      const LearnerConfig& config);

struct QTableCheckpoint {
    QTable q;
    std::int64_t global_step;
    LearnerConfig config;
};

QTableCheckpoint qtable_from_json(const nlohmann::json& j);

}  // namespace ednet
