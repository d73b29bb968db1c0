#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ednet/env.hpp"
#include "ednet/model.hpp"
#include "ednet/qtable.hpp"
#include "ednet/rng.hpp"

namespace ednet {

/// A teacher policy. One instance per trial; learning state (if any)
/// persists across episode resets.
class Policy {
public:
    virtual ~Policy() = default;

    /// Chooses the k arms to pull in the current joint state.
    virtual std::vector<int> select_arms(const JointState& state, Xoshiro256StarStar& rng) = 0;

    /// Receives the executed transition; learning policies update here.
    virtual void observe(const Experience& experience, Xoshiro256StarStar& rng) {}

    virtual const std::string& name() const = 0;

    /// Learning policies expose their table for checkpointing.
    virtual const QTable* qtable() const { return nullptr; }
    virtual std::int64_t global_step() const { return 0; }
    virtual const LearnerConfig* learner_config() const { return nullptr; }
};

/// Whittle-index Q-learner over the full three-action space, scoring arms
/// with the network-aware index estimate and (by default) replaying stored
/// experiences each step. use_replay=false gives the ablated variant that
/// learns from the current transition only.
class EduQatePolicy : public Policy {
public:
    EduQatePolicy(const GroupNetwork& network, int k, LearnerConfig config, std::string name);

    std::vector<int> select_arms(const JointState& state, Xoshiro256StarStar& rng) override;
    void observe(const Experience& experience, Xoshiro256StarStar& rng) override;
    const std::string& name() const override { return name_; }
    const QTable* qtable() const override { return &q_; }
    std::int64_t global_step() const override { return step_; }
    const LearnerConfig* learner_config() const override { return &config_; }

private:
    const GroupNetwork& network_;
    int k_;
    LearnerConfig config_;
    std::string name_;
    QTable q_;
    ReplayBuffer buffer_;
    std::int64_t step_ = 0;
};

/// Network-blind Whittle Q-learner: keeps a two-action table and logs the
/// pulled arm as active and every other arm (semi-active neighbors
/// included) as passive.
class WiqlPolicy : public Policy {
public:
    WiqlPolicy(int n_arms, int k, LearnerConfig config);

    std::vector<int> select_arms(const JointState& state, Xoshiro256StarStar& rng) override;
    void observe(const Experience& experience, Xoshiro256StarStar& rng) override;
    const std::string& name() const override { return name_; }
    const QTable* qtable() const override { return &q_; }
    std::int64_t global_step() const override { return step_; }
    const LearnerConfig* learner_config() const override { return &config_; }

private:
    int n_arms_;
    int k_;
    LearnerConfig config_;
    std::string name_;
    QTable q_;  // actions: 0 = passive, 1 = active
    std::int64_t step_ = 0;
};

/// Computes Whittle indices from the true passive/active rows at
/// construction and pulls the highest-index arm for the current states.
/// Ignores semi-active effects by design. Deterministic lowest-index ties.
class ThresholdWhittlePolicy : public Policy {
public:
    ThresholdWhittlePolicy(const StudentModel& model, int k, double gamma);

    std::vector<int> select_arms(const JointState& state, Xoshiro256StarStar& rng) override;
    const std::string& name() const override { return name_; }

private:
    int n_arms_;
    int k_;
    std::string name_;
    std::vector<std::array<double, 2>> index_;  // [arm][state]
};

/// Oracle one-step maximizer: scores each candidate pull by the expected
/// next-step reward including semi-active propagation. Lowest-index ties.
class MyopicPolicy : public Policy {
public:
    MyopicPolicy(const StudentModel& model, int k);

    std::vector<int> select_arms(const JointState& state, Xoshiro256StarStar& rng) override;
    const std::string& name() const override { return name_; }

private:
    const StudentModel& model_;
    int k_;
    std::string name_;
};

/// Uniformly random distinct pulls, no learning.
class RandomPolicy : public Policy {
public:
    RandomPolicy(int n_arms, int k);

    std::vector<int> select_arms(const JointState& state, Xoshiro256StarStar& rng) override;
    const std::string& name() const override { return name_; }

private:
    int n_arms_;
    int k_;
    std::string name_;
};

inline const std::vector<std::string>& known_policies() {
    static const std::vector<std::string> names = {"eduqate", "eduqate-minus", "wiql",
                                                   "tw",      "myopic",        "random"};
    return names;
}

/// Builds a policy by name. The model reference must outlive the policy;
/// tw and myopic read the true tensors from it.
std::unique_ptr<Policy> make_policy(const std::string& name, const StudentModel& model, int k,
                                    const LearnerConfig& config);

/// One-step expected reward of pulling exactly `arm`, under the true model.
double myopic_expected_reward(const StudentModel& model, const JointState& state, int arm);

/// Single-arm oracle choice (lowest-index ties), exposed for tests.
int select_arm_myopic(const StudentModel& model, const JointState& state);

/// k distinct arms drawn uniformly without replacement.
std::vector<int> sample_distinct_arms(int n_arms, int k, Xoshiro256StarStar& rng);

}  // namespace ednet
