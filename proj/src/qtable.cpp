#include "ednet/qtable.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ednet {

QTable::QTable(int n_arms, int n_actions) : n_arms_(n_arms), n_actions_(n_actions) {
    if (n_arms < 1) throw std::invalid_argument("QTable: n_arms must be >= 1");
    if (n_actions < 2 || n_actions > kNumActions)
        throw std::invalid_argument("QTable: n_actions must be 2 or 3");
    q_.assign(static_cast<std::size_t>(n_arms) * 2 * n_actions, 0.0);
}

double QTable::max_over_actions(int arm, int s) const {
    double m = get(arm, s, 0);
    for (int a = 1; a < n_actions_; ++a) m = std::max(m, get(arm, s, a));
    return m;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    entries_.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::push(Experience e) {
    if (entries_.size() < capacity_) {
        entries_.push_back(std::move(e));
    } else {
        entries_[head_] = std::move(e);
        head_ = (head_ + 1) % capacity_;
    }
}

const Experience& ReplayBuffer::at(std::size_t i) const {
    if (i >= entries_.size()) throw std::out_of_range("ReplayBuffer: index out of range");
    return entries_[(head_ + i) % entries_.size()];
}

const Experience& ReplayBuffer::sample(Xoshiro256StarStar& rng) const {
    if (entries_.empty()) throw std::logic_error("ReplayBuffer: sample from empty buffer");
    return entries_[rng.uniform_int(static_cast<int>(entries_.size()))];
}

double epsilon_schedule(int n_arms, std::int64_t global_step) {
    if (global_step < 0) throw std::invalid_argument("epsilon_schedule: negative step");
    return static_cast<double>(n_arms) / (static_cast<double>(n_arms) + global_step);
}

double whittle_estimate(const QTable& q, const JointState& state, const GroupNetwork& network,
                        int arm) {
    const int s = state[arm];
    double lambda = q.get(arm, s, kActive) - q.get(arm, s, kPassive);
    for (int j : network.neighbors(arm)) {
        const int sj = state[j];
        lambda += q.get(j, sj, kSemiActive) - q.get(j, sj, kPassive);
    }
    return lambda;
}

double joint_q_decomposition(const QTable& q, const JointState& state,
                             const GroupNetwork& network, int arm) {
    double value = q.get(arm, state[arm], kActive);
    for (int j : network.neighbors(arm)) value += q.get(j, state[j], kSemiActive);
    // remaining arms are passive
    std::vector<bool> covered(network.n_arms(), false);
    covered[arm] = true;
    for (int j : network.neighbors(arm)) covered[j] = true;
    for (int z = 0; z < network.n_arms(); ++z)
        if (!covered[z]) value += q.get(z, state[z], kPassive);
    return value;
}

double joint_q_decomposition_set(const QTable& q, const JointState& state,
                                 const GroupNetwork& network, const std::vector<int>& pulled) {
    const int n = network.n_arms();
    std::vector<std::uint8_t> role(n, kPassive);
    for (int i : pulled)
        for (int j : network.neighbors(i))
            if (role[j] == kPassive) role[j] = kSemiActive;
    for (int i : pulled) role[i] = kActive;
    double value = 0.0;
    for (int z = 0; z < n; ++z) value += q.get(z, state[z], role[z]);
    return value;
}

void q_update(QTable& q, int arm, int s, int a, double reward, int s_next,
              const LearnerConfig& config) {
    const double old = q.get(arm, s, a);
    const double target = reward + config.gamma * q.max_over_actions(arm, s_next);
    q.set(arm, s, a, (1.0 - config.alpha) * old + config.alpha * target);
}

namespace {

// Per-arm credit: each arm's reward share is its own next state, the
// arm-wise decomposition of the joint reward.
void update_all_arms(QTable& q, const Experience& e, const LearnerConfig& config) {
    const int n = q.n_arms();
    for (int arm = 0; arm < n; ++arm) {
        const double r_arm = static_cast<double>(e.next_state[arm]);
        q_update(q, arm, e.state[arm], e.action[arm], r_arm, e.next_state[arm], config);
    }
}

}  // namespace

void learn_from_batch(QTable& q, const ReplayBuffer& buffer, const LearnerConfig& config,
                      Xoshiro256StarStar& rng) {
    if (buffer.empty()) throw std::logic_error("learn_from_batch: buffer is empty");
    for (int b = 0; b < config.batch_size; ++b) {
        const Experience& e = buffer.sample(rng);
        update_all_arms(q, e, config);
    }
}

void learn_from_transition(QTable& q, const Experience& e, const LearnerConfig& config) {
    update_all_arms(q, e, config);
}

std::vector<int> greedy_select_k(const QTable& q, const JointState& state,
                                 const GroupNetwork& network, int k) {
    const int n = network.n_arms();
    if (k < 1 || k > n)
        throw std::invalid_argument("greedy_select_k: k must be in [1, n_arms], got " +
                                    std::to_string(k));
    std::vector<bool> selected(n, false);
    std::vector<bool> covered(n, false);  // in the pull set or semi-active through it
    std::vector<int> pulled;
    pulled.reserve(k);

    for (int round = 0; round < k; ++round) {
        int best_arm = -1;
        double best_value = 0.0;
        for (int c = 0; c < n; ++c) {
            if (selected[c]) continue;
            double value = 0.0;
            if (!covered[c]) value += q.get(c, state[c], kActive) - q.get(c, state[c], kPassive);
            for (int j : network.neighbors(c)) {
                if (covered[j]) continue;
                value += q.get(j, state[j], kSemiActive) - q.get(j, state[j], kPassive);
            }
            if (best_arm < 0 || value > best_value) {
                best_arm = c;
                best_value = value;
            }
        }
        pulled.push_back(best_arm);
        selected[best_arm] = true;
        covered[best_arm] = true;
        for (int j : network.neighbors(best_arm)) covered[j] = true;
    }
    return pulled;
}

namespace {

int pick_argmax_uniform(const std::vector<double>& scores, Xoshiro256StarStar& rng) {
    double best = scores[0];
    for (double v : scores) best = std::max(best, v);
    std::vector<int> ties;
    for (int i = 0; i < static_cast<int>(scores.size()); ++i)
        if (scores[i] == best) ties.push_back(i);
    if (ties.size() == 1) return ties[0];
    return ties[rng.uniform_int(static_cast<int>(ties.size()))];
}

}  // namespace

int select_greedy_eduqate(const QTable& q, const JointState& state, const GroupNetwork& network,
                          Xoshiro256StarStar& rng) {
    const int n = network.n_arms();
    std::vector<double> lambda(n);
    for (int i = 0; i < n; ++i) lambda[i] = whittle_estimate(q, state, network, i);
    return pick_argmax_uniform(lambda, rng);
}

int select_arm_eduqate(const QTable& q, const JointState& state, const GroupNetwork& network,
                       std::int64_t global_step, Xoshiro256StarStar& rng) {
    const int n = network.n_arms();
    const double eps = epsilon_schedule(n, global_step);
    if (rng.uniform01() < eps) return rng.uniform_int(n);
    return select_greedy_eduqate(q, state, network, rng);
}

int select_arm_wiql(const QTable& q2, const JointState& state, std::int64_t global_step,
                    Xoshiro256StarStar& rng) {
    const int n = q2.n_arms();
    const double eps = epsilon_schedule(n, global_step);
    if (rng.uniform01() < eps) return rng.uniform_int(n);
    std::vector<double> lambda(n);
    for (int i = 0; i < n; ++i) lambda[i] = q2.get(i, state[i], 1) - q2.get(i, state[i], 0);
    return pick_argmax_uniform(lambda, rng);
}

nlohmann::ordered_json qtable_to_json(const QTable& q, std::int64_t global_step,
                                      const LearnerConfig& config) {
    nlohmann::ordered_json j;
    j["n_arms"] = q.n_arms();
    auto arms = nlohmann::ordered_json::array();
    for (int i = 0; i < q.n_arms(); ++i) {
        auto states = nlohmann::ordered_json::array();
        for (int s = 0; s < 2; ++s) {
            auto actions = nlohmann::ordered_json::array();
            for (int a = 0; a < q.n_actions(); ++a) actions.push_back(q.get(i, s, a));
            states.push_back(std::move(actions));
        }
        arms.push_back(std::move(states));
    }
    j["q"] = std::move(arms);
    j["global_step"] = global_step;
    j["config"] = {{"alpha", config.alpha},
                   {"gamma", config.gamma},
                   {"use_replay", config.use_replay}};
    return j;
}

QTableCheckpoint qtable_from_json(const nlohmann::json& j) {
    const int n_arms = j.at("n_arms").get<int>();
    const auto& jq = j.at("q");
    if (!jq.is_array() || static_cast<int>(jq.size()) != n_arms)
        throw std::invalid_argument("qtable: q must be an array of length n_arms");
    const int n_actions = static_cast<int>(jq.at(0).at(0).size());
    QTable q(n_arms, n_actions);
    for (int i = 0; i < n_arms; ++i)
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < n_actions; ++a)
                q.set(i, s, a, jq.at(i).at(s).at(a).get<double>());
    LearnerConfig config;
    const auto& jc = j.at("config");
    config.alpha = jc.at("alpha").get<double>();
    config.gamma = jc.at("gamma").get<double>();
    config.use_replay = jc.at("use_replay").get<bool>();
    return QTableCheckpoint{std::move(q), j.at("global_step").get<std::int64_t>(), config};
}

}  // namespace ednet
