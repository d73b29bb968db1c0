#include "ednet/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ednet {

TransitionTensor TransitionTensor::from_up_probs(const std::array<double, 3>& up_from_0,
                                                 const std::array<double, 3>& up_from_1) {
    TransitionTensor t;
    for (int a = 0; a < kNumActions; ++a) {
        t.p[a][0][1] = up_from_0[a];
        t.p[a][0][0] = 1.0 - up_from_0[a];
        t.p[a][1][1] = up_from_1[a];
        t.p[a][1][0] = 1.0 - up_from_1[a];
    }
    return t;
}

GroupNetwork::GroupNetwork(int n_arms, int n_topics, std::vector<std::vector<int>> membership)
    : n_arms_(n_arms), n_topics_(n_topics), membership_(std::move(membership)) {
    if (n_arms_ < 1) throw std::invalid_argument("GroupNetwork: n_arms must be >= 1");
    if (n_topics_ < 1) throw std::invalid_argument("GroupNetwork: n_topics must be >= 1");
    if (static_cast<int>(membership_.size()) != n_arms_)
        throw std::invalid_argument("GroupNetwork: membership size != n_arms");

    topic_members_.assign(n_topics_, {});
    for (int i = 0; i < n_arms_; ++i) {
        auto& topics = membership_[i];
        if (topics.empty())
            throw std::invalid_argument("GroupNetwork: arm " + std::to_string(i) +
                                        " has no topic");
        std::sort(topics.begin(), topics.end());
        topics.erase(std::unique(topics.begin(), topics.end()), topics.end());
        for (int t : topics) {
            if (t < 0 || t >= n_topics_)
                throw std::invalid_argument("GroupNetwork: topic id " + std::to_string(t) +
                                            " out of range for arm " + std::to_string(i));
            topic_members_[t].push_back(i);
        }
    }

    neighbors_.assign(n_arms_, {});
    for (int i = 0; i < n_arms_; ++i) {
        std::set<int> nbrs;
        for (int t : membership_[i])
            for (int j : topic_members_[t])
                if (j != i) nbrs.insert(j);
        neighbors_[i].assign(nbrs.begin(), nbrs.end());
    }
}

const std::vector<int>& GroupNetwork::topics_of(int arm) const {
    if (arm < 0 || arm >= n_arms_)
        throw std::out_of_range("GroupNetwork: arm index " + std::to_string(arm));
    return membership_[arm];
}

const std::vector<int>& GroupNetwork::members_of(int topic) const {
    if (topic < 0 || topic >= n_topics_)
        throw std::out_of_range("GroupNetwork: topic index " + std::to_string(topic));
    return topic_members_[topic];
}

const std::vector<int>& GroupNetwork::neighbors(int arm) const {
    if (arm < 0 || arm >= n_arms_)
        throw std::out_of_range("GroupNetwork: arm index " + std::to_string(arm));
    return neighbors_[arm];
}

std::vector<int> neighborhood(const GroupNetwork& network, int arm) {
    return network.neighbors(arm);
}

std::string Violation::to_string() const {
    std::ostringstream os;
    if (arm >= 0)
        os << constraint << ", arm " << arm;
    else
        os << constraint;
    if (!detail.empty()) os << ", " << detail;
    return os.str();
}

std::string ValidationReport::to_string() const {
    if (ok()) return "valid";
    std::ostringstream os;
    for (std::size_t i = 0; i < violations.size(); ++i) {
        if (i) os << "\n";
        os << violations[i].to_string();
    }
    return os.str();
}

namespace {

void validate_tensor(int arm, const TransitionTensor& t, std::vector<Violation>& out) {
    static const char* action_name[3] = {"action 0", "action 1", "action 2"};
    for (int a = 0; a < kNumActions; ++a) {
        for (int s = 0; s < 2; ++s) {
            const double row_sum = t.p[a][s][0] + t.p[a][s][1];
            if (std::abs(row_sum - 1.0) > kStochasticityTol)
                out.push_back({arm, "row-stochasticity",
                               std::string(action_name[a]) + ", state " + std::to_string(s)});
            for (int s2 = 0; s2 < 2; ++s2)
                if (!(t.p[a][s][s2] > 0.0) || !(t.p[a][s][s2] < 1.0))
                    out.push_back({arm, "positivity",
                                   std::string(action_name[a]) + ", state " + std::to_string(s) +
                                       "->" + std::to_string(s2)});
        }
        if (!(t.up(a, 0) < t.up(a, 1)))
            out.push_back({arm, "retention dominance", action_name[a]});
    }
    for (int s = 0; s < 2; ++s) {
        if (!(t.up(0, s) < t.up(1, s) && t.up(1, s) < t.up(2, s)))
            out.push_back({arm, "effort ordering", "state " + std::to_string(s)});
    }
}

}  // namespace

ValidationReport validate(const StudentModel& model) {
    ValidationReport report;
    if (static_cast<int>(model.tensors.size()) != model.network.n_arms()) {
        report.violations.push_back(
            {-1, "model shape",
             "tensors.length " + std::to_string(model.tensors.size()) + " != n_arms " +
                 std::to_string(model.network.n_arms())});
        return report;
    }
    for (int i = 0; i < model.n_arms(); ++i)
        validate_tensor(i, model.tensors[i], report.violations);
    return report;
}

int joint_reward(const JointState& state) {
    int r = 0;
    for (auto s : state) r += s;
    return r;
}

nlohmann::ordered_json model_to_json(const StudentModel& model) {
    nlohmann::ordered_json j;
    j["n_arms"] = model.network.n_arms();
    j["n_topics"] = model.network.n_topics();
    j["membership"] = model.network.membership();
    auto tensors = nlohmann::ordered_json::array();
    for (const auto& t : model.tensors) {
        nlohmann::ordered_json jt;
        jt["p"] = t.p;
        tensors.push_back(std::move(jt));
    }
    j["tensors"] = std::move(tensors);
    return j;
}

StudentModel model_from_json(const nlohmann::json& j) {
    const int n_arms = j.at("n_arms").get<int>();
    const int n_topics = j.at("n_topics").get<int>();
    auto membership = j.at("membership").get<std::vector<std::vector<int>>>();
    GroupNetwork network(n_arms, n_topics, std::move(membership));

    const auto& jt = j.at("tensors");
    if (!jt.is_array() || static_cast<int>(jt.size()) != n_arms)
        throw std::invalid_argument("model: tensors must be an array of length n_arms");
    std::vector<TransitionTensor> tensors;
    tensors.reserve(n_arms);
    for (const auto& entry : jt) {
        TransitionTensor t;
        t.p = entry.at("p").get<std::array<std::array<std::array<double, 2>, 2>, 3>>();
        tensors.push_back(t);
    }
    return StudentModel{std::move(network), std::move(tensors)};
}

void save_model(const StudentModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot open for writing: " + path.string());
    out << model_to_json(model).dump(2) << "\n";
    if (!out) throw std::ios_base::failure("write failed: " + path.string());
}

StudentModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open model file: " + path.string());
    nlohmann::json j;
    in >> j;
    char c;
    if (in >> c)  // skips whitespace; anything left is trailing data
        throw std::invalid_argument("model file has trailing data: " + path.string());
    return model_from_json(j);
}

}  // namespace ednet
