#include "ednet/agents.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "ednet/whittle.hpp"

namespace ednet {

std::vector<int> sample_distinct_arms(int n_arms, int k, Xoshiro256StarStar& rng) {
    if (k < 1 || k > n_arms) throw std::invalid_argument("sample_distinct_arms: bad k");
    std::vector<int> pool(n_arms);
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < k; ++i) {
        const int j = i + rng.uniform_int(n_arms - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

// --- EduQate ----------------------------------------------------------------

EduQatePolicy::EduQatePolicy(const GroupNetwork& network, int k, LearnerConfig config,
                             std::string name)
    : network_(network),
      k_(k),
      config_(config),
      name_(std::move(name)),
      q_(network.n_arms()),
      buffer_(config.buffer_capacity) {}

std::vector<int> EduQatePolicy::select_arms(const JointState& state, Xoshiro256StarStar& rng) {
    const double eps = epsilon_schedule(network_.n_arms(), step_);
    ++step_;
    if (rng.uniform01() < eps) return sample_distinct_arms(network_.n_arms(), k_, rng);
    if (k_ == 1) return {select_greedy_eduqate(q_, state, network_, rng)};
    return greedy_select_k(q_, state, network_, k_);
}

void EduQatePolicy::observe(const Experience& experience, Xoshiro256StarStar& rng) {
    if (config_.use_replay) {
        buffer_.push(experience);
        learn_from_batch(q_, buffer_, config_, rng);
    } else {
        learn_from_transition(q_, experience, config_);
    }
}

// --- WIQL -------------------------------------------------------------------

WiqlPolicy::WiqlPolicy(int n_arms, int k, LearnerConfig config)
    : n_arms_(n_arms), k_(k), config_(config), name_("wiql"), q_(n_arms, 2) {}

std::vector<int> WiqlPolicy::select_arms(const JointState& state, Xoshiro256StarStar& rng) {
    const double eps = epsilon_schedule(n_arms_, step_);
    ++step_;
    if (rng.uniform01() < eps) return sample_distinct_arms(n_arms_, k_, rng);
    std::vector<double> lambda(n_arms_);
    for (int i = 0; i < n_arms_; ++i)
        lambda[i] = q_.get(i, state[i], 1) - q_.get(i, state[i], 0);
    if (k_ == 1) {
        double best = *std::max_element(lambda.begin(), lambda.end());
        std::vector<int> ties;
        for (int i = 0; i < n_arms_; ++i)
            if (lambda[i] == best) ties.push_back(i);
        if (ties.size() == 1) return {ties[0]};
        return {ties[rng.uniform_int(static_cast<int>(ties.size()))]};
    }
    std::vector<int> order(n_arms_);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return lambda[a] > lambda[b]; });
    order.resize(k_);
    return order;
}

void WiqlPolicy::observe(const Experience& experience, Xoshiro256StarStar&) {
    // pulled arms log as active, everything else as passive: the learner
    // never sees the pseudo-action
    for (int arm = 0; arm < n_arms_; ++arm) {
        const int logged_action = experience.action[arm] == kActive ? 1 : 0;
        const int s = experience.state[arm];
        const int s_next = experience.next_state[arm];
        const double r_arm = static_cast<double>(s_next);
        const double old = q_.get(arm, s, logged_action);
        const double target = r_arm + config_.gamma * q_.max_over_actions(arm, s_next);
        q_.set(arm, s, logged_action, (1.0 - config_.alpha) * old + config_.alpha * target);
    }
}

// --- Threshold Whittle ------------------------------------------------------

ThresholdWhittlePolicy::ThresholdWhittlePolicy(const StudentModel& model, int k, double gamma)
    : n_arms_(model.n_arms()), k_(k), name_("tw") {
    index_.resize(n_arms_);
    for (int i = 0; i < n_arms_; ++i)
        for (int s = 0; s < 2; ++s)
            index_[i][s] = threshold_whittle_index(model.tensors[i], s, gamma);
}

std::vector<int> ThresholdWhittlePolicy::select_arms(const JointState& state,
                                                     Xoshiro256StarStar&) {
    std::vector<int> order(n_arms_);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return index_[a][state[a]] > index_[b][state[b]];
    });
    order.resize(k_);
    return order;
}

// --- Myopic -----------------------------------------------------------------

double myopic_expected_reward(const StudentModel& model, const JointState& state, int arm) {
    const JointAction action = expand_action(model.network, {arm});
    double expected = 0.0;
    for (int i = 0; i < model.n_arms(); ++i)
        expected += model.tensors[i].up(action[i], state[i]);
    return expected;
}

int select_arm_myopic(const StudentModel& model, const JointState& state) {
    int best_arm = 0;
    double best = myopic_expected_reward(model, state, 0);
    for (int i = 1; i < model.n_arms(); ++i) {
        const double v = myopic_expected_reward(model, state, i);
        if (v > best) {
            best = v;
            best_arm = i;
        }
    }
    return best_arm;
}

MyopicPolicy::MyopicPolicy(const StudentModel& model, int k)
    : model_(model), k_(k), name_("myopic") {}

std::vector<int> MyopicPolicy::select_arms(const JointState& state, Xoshiro256StarStar&) {
    if (k_ == 1) return {select_arm_myopic(model_, state)};
    // greedy marginal expected-reward expansion of the pull set
    std::vector<int> pulled;
    std::vector<bool> in_set(model_.n_arms(), false);
    auto set_value = [&](const std::vector<int>& set) {
        const JointAction action = expand_action(model_.network, set);
        double expected = 0.0;
        for (int i = 0; i < model_.n_arms(); ++i)
            expected += model_.tensors[i].up(action[i], state[i]);
        return expected;
    };
    double current = 0.0;
    for (int round = 0; round < k_; ++round) {
        int best_arm = -1;
        double best_value = 0.0;
        for (int c = 0; c < model_.n_arms(); ++c) {
            if (in_set[c]) continue;
            std::vector<int> trial = pulled;
            trial.push_back(c);
            const double value = set_value(trial) - current;
            if (best_arm < 0 || value > best_value) {
                best_arm = c;
                best_value = value;
            }
        }
        pulled.push_back(best_arm);
        in_set[best_arm] = true;
        current += best_value;
    }
    std::sort(pulled.begin(), pulled.end());
    return pulled;
}

// --- Random -----------------------------------------------------------------

RandomPolicy::RandomPolicy(int n_arms, int k) : n_arms_(n_arms), k_(k), name_("random") {}

std::vector<int> RandomPolicy::select_arms(const JointState&, Xoshiro256StarStar& rng) {
    return sample_distinct_arms(n_arms_, k_, rng);
}

// --- factory ----------------------------------------------------------------

std::unique_ptr<Policy> make_policy(const std::string& name, const StudentModel& model, int k,
                                    const LearnerConfig& config) {
    if (name == "eduqate") {
        LearnerConfig c = config;
        c.use_replay = true;
        return std::make_unique<EduQatePolicy>(model.network, k, c, "eduqate");
    }
    if (name == "eduqate-minus") {
        LearnerConfig c = config;
        c.use_replay = false;
        return std::make_unique<EduQatePolicy>(model.network, k, c, "eduqate-minus");
    }
    if (name == "wiql") return std::make_unique<WiqlPolicy>(model.n_arms(), k, config);
    if (name == "tw")
        return std::make_unique<ThresholdWhittlePolicy>(model, k, config.gamma);
    if (name == "myopic") return std::make_unique<MyopicPolicy>(model, k);
    if (name == "random") return std::make_unique<RandomPolicy>(model.n_arms(), k);
    throw std::invalid_argument("unknown policy: " + name);
}

}  // namespace ednet
