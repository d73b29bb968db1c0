#include "ednet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "ednet/agents.hpp"
#include "ednet/env.hpp"

namespace ednet {

std::vector<std::uint64_t> ExperimentConfig::effective_seeds() const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> out(30);
    for (int i = 0; i < 30; ++i) out[i] = static_cast<std::uint64_t>(i);
    return out;
}

void ExperimentConfig::check() const {
    if (synthetic.has_value() == model_file.has_value())
        throw std::invalid_argument(
            "experiment config: exactly one of synthetic spec or model file is required");
    if (episodes < 1) throw std::invalid_argument("experiment config: episodes must be >= 1");
    if (horizon < 1) throw std::invalid_argument("experiment config: horizon must be >= 1");
    if (k < 1) throw std::invalid_argument("experiment config: k must be >= 1");
    if (policies.empty()) throw std::invalid_argument("experiment config: no policies given");
    for (const auto& p : policies) {
        if (std::find(known_policies().begin(), known_policies().end(), p) ==
            known_policies().end())
            throw std::invalid_argument("unknown policy: " + p);
    }
    if (jobs < 1) throw std::invalid_argument("experiment config: jobs must be >= 1");
    if (!(learner.alpha > 0.0 && learner.alpha <= 1.0))
        throw std::invalid_argument("experiment config: alpha must be in (0,1]");
    if (!(learner.gamma >= 0.0 && learner.gamma < 1.0))
        throw std::invalid_argument("experiment config: gamma must be in [0,1)");
    if (learner.buffer_capacity < 1 || learner.batch_size < 1)
        throw std::invalid_argument("experiment config: buffer and batch sizes must be >= 1");
}

namespace {

// stream tags for per-trial generators
constexpr std::uint64_t kEnvStream = 0xE501;
constexpr std::uint64_t kAgentStream = 0xA6E1;
constexpr std::uint64_t kModelStream = 0x30DE;

StudentModel trial_model(const ExperimentConfig& config, std::uint64_t seed) {
    if (config.synthetic) {
        // a fresh student per seed, shared by all policies at that seed
        SyntheticSpec spec = *config.synthetic;
        spec.seed = mix_seed(mix_seed(spec.seed, kModelStream), seed);
        return generate_synthetic(spec);
    }
    return load_model(*config.model_file);
}

}  // namespace

std::vector<TrialRecord> run_trial(const ExperimentConfig& config, const std::string& policy_name,
                                   std::uint64_t seed) {
    config.check();
    const StudentModel model = trial_model(config, seed);
    const int n = model.n_arms();
    if (config.k > n)
        throw std::invalid_argument("experiment config: k exceeds the number of arms");

    Xoshiro256StarStar env_rng(mix_seed(seed, kEnvStream));
    Xoshiro256StarStar agent_rng(mix_seed(seed, kAgentStream));
    auto policy = make_policy(policy_name, model, config.k, config.learner);

    std::vector<TrialRecord> records;
    records.reserve(config.episodes);
    for (int episode = 0; episode < config.episodes; ++episode) {
        const auto t0 = std::chrono::steady_clock::now();
        JointState state = reset_state(n);
        long reward_sum = 0;
        for (int t = 0; t < config.horizon; ++t) {
            const auto pulled = policy->select_arms(state, agent_rng);
            const JointAction action = expand_action(model.network, pulled);
            StepOutcome outcome = step(model, state, action, env_rng);
            policy->observe(
                Experience{state, action, static_cast<double>(outcome.reward), outcome.next_state},
                agent_rng);
            reward_sum += outcome.reward;
            state = std::move(outcome.next_state);
        }
        const auto t1 = std::chrono::steady_clock::now();
        records.push_back(TrialRecord{
            seed, policy_name, episode,
            static_cast<double>(reward_sum) / config.horizon,
            std::chrono::duration<double, std::milli>(t1 - t0).count()});
    }

    if (!config.checkpoint_dir.empty() && policy->qtable() != nullptr) {
        std::filesystem::create_directories(config.checkpoint_dir);
        const auto path = std::filesystem::path(config.checkpoint_dir) /
                          ("qtable_" + policy_name + "_seed" + std::to_string(seed) + ".json");
        std::ofstream out(path);
        if (!out) throw std::ios_base::failure("cannot write checkpoint: " + path.string());
        out << qtable_to_json(*policy->qtable(), policy->global_step(), *policy->learner_config())
                   .dump(2)
            << "\n";
    }
    return records;
}

namespace {

nlohmann::ordered_json config_to_json(const ExperimentConfig& config) {
    nlohmann::ordered_json j;
    if (config.synthetic) {
        j["model_source"] = {{"type", "synthetic"},
                             {"n_arms", config.synthetic->n_arms},
                             {"n_topics", config.synthetic->n_topics},
                             {"extra_membership_prob", config.synthetic->extra_membership_prob},
                             {"seed", config.synthetic->seed}};
    } else {
        j["model_source"] = {{"type", "file"}, {"path", *config.model_file}};
    }
    j["policies"] = config.policies;
    j["episodes"] = config.episodes;
    j["horizon"] = config.horizon;
    j["seeds"] = config.effective_seeds();
    j["k"] = config.k;
    j["learner"] = {{"alpha", config.learner.alpha},
                    {"gamma", config.learner.gamma},
                    {"buffer_capacity", config.learner.buffer_capacity},
                    {"batch_size", config.learner.batch_size}};
    j["jobs"] = config.jobs;
    return j;
}

// greedy-vs-enumeration comparison on the trained eduqate table, appended
// to meta when requested; only feasible at enumeration scale
nlohmann::ordered_json oracle_check_report(const ExperimentConfig& config) {
    const auto seeds = config.effective_seeds();
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (std::uint64_t seed : seeds) {
        const StudentModel model = trial_model(config, seed);
        const int n = model.n_arms();
        if (n > 8)
            throw std::invalid_argument("oracle check requires n_arms <= 8, got " +
                                        std::to_string(n));
        Xoshiro256StarStar rng(mix_seed(seed, 0x0CAC1E));
        QTable q(n);
        for (int i = 0; i < n; ++i)
            for (int s = 0; s < 2; ++s) {
                double base = rng.uniform(0.0, 2.0);
                for (int a = 0; a < kNumActions; ++a) {
                    base += rng.uniform(0.0, 1.0);
                    q.set(i, s, a, base);
                }
            }
        JointState state(n);
        for (int i = 0; i < n; ++i) state[i] = rng.uniform01() < 0.5 ? 1 : 0;

        const auto greedy = greedy_select_k(q, state, model.network, config.k);
        const double greedy_value = joint_q_decomposition_set(q, state, model.network, greedy);

        // enumerate all pull sets of size k
        std::vector<int> subset(config.k);
        double best = -1e300;
        std::vector<int> best_set;
        std::function<void(int, int)> enumerate = [&](int start, int depth) {
            if (depth == config.k) {
                const double v = joint_q_decomposition_set(q, state, model.network, subset);
                if (v > best) {
                    best = v;
                    best_set = subset;
                }
                return;
            }
            for (int i = start; i < n; ++i) {
                subset[depth] = i;
                enumerate(i + 1, depth + 1);
            }
        };
        enumerate(0, 0);

        checks.push_back({{"seed", seed},
                          {"greedy_set", greedy},
                          {"greedy_value", greedy_value},
                          {"optimal_set", best_set},
                          {"optimal_value", best},
                          {"greedy_matches_optimum", std::abs(greedy_value - best) < 1e-9}});
    }
    return checks;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.check();
    const auto seeds = config.effective_seeds();
    struct Task {
        std::size_t policy_idx;
        std::size_t seed_idx;
    };
    std::vector<Task> tasks;
    for (std::size_t p = 0; p < config.policies.size(); ++p)
        for (std::size_t s = 0; s < seeds.size(); ++s) tasks.push_back({p, s});

    std::vector<std::vector<TrialRecord>> results(tasks.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        while (true) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= tasks.size()) return;
            try {
                results[idx] = run_trial(config, config.policies[tasks[idx].policy_idx],
                                         seeds[tasks[idx].seed_idx]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const auto t0 = std::chrono::steady_clock::now();
    const int n_threads = std::min<int>(config.jobs, static_cast<int>(tasks.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    const auto t1 = std::chrono::steady_clock::now();

    ExperimentResult out;
    for (auto& trial : results)
        out.records.insert(out.records.end(), trial.begin(), trial.end());

    out.meta = config_to_json(config);
    out.meta["rng_family"] = kRngFamily;
    out.meta["code_version"] = kVersion;
    out.meta["wall_seconds"] = std::chrono::duration<double>(t1 - t0).count();
    if (config.oracle_check) {
        if (config.k < 2)
            throw std::invalid_argument("oracle check is meaningful only for k >= 2");
        out.meta["greedy_oracle_check"] = oracle_check_report(config);
    }
    return out;
}

namespace {

std::string format_reward(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

struct FinalRewards {
    // policy -> seed -> final-episode reward
    std::map<std::string, std::map<std::uint64_t, double>> by_policy;
    int n_seeds = 0;
};

FinalRewards final_episode_rewards(const std::vector<TrialRecord>& records) {
    int last_episode = 0;
    for (const auto& r : records) last_episode = std::max(last_episode, r.episode);
    FinalRewards out;
    std::set<std::uint64_t> seeds;
    for (const auto& r : records) {
        if (r.episode != last_episode) continue;
        out.by_policy[r.policy][r.seed] = r.reward;
        seeds.insert(r.seed);
    }
    out.n_seeds = static_cast<int>(seeds.size());
    for (const auto& [policy, by_seed] : out.by_policy)
        if (static_cast<int>(by_seed.size()) != out.n_seeds)
            throw std::invalid_argument("records: policy '" + policy +
                                        "' is missing seeds present for other policies");
    return out;
}

std::pair<double, double> mean_and_se(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return {mean, sd / std::sqrt(static_cast<double>(xs.size()))};
}

}  // namespace

IBReport intervention_benefit(const std::vector<TrialRecord>& records) {
    if (records.empty()) throw std::invalid_argument("intervention_benefit: no records");
    const FinalRewards finals = final_episode_rewards(records);
    for (const char* required : {"random", "eduqate"})
        if (!finals.by_policy.count(required))
            throw std::invalid_argument(std::string("intervention_benefit: records are missing "
                                                    "required policy '") + required + "'");
    const auto& random_rewards = finals.by_policy.at("random");
    const auto& eduqate_rewards = finals.by_policy.at("eduqate");

    // preserve first-appearance policy order from the records
    std::vector<std::string> policy_order;
    for (const auto& r : records)
        if (std::find(policy_order.begin(), policy_order.end(), r.policy) == policy_order.end())
            policy_order.push_back(r.policy);

    IBReport report;
    report.n_seeds = finals.n_seeds;
    for (const auto& policy : policy_order) {
        const auto& rewards = finals.by_policy.at(policy);
        IBRow row;
        row.policy = policy;
        std::vector<double> ib_values;
        std::vector<double> reward_values;
        for (const auto& [seed, reward] : rewards) {
            reward_values.push_back(reward);
            const double denom = eduqate_rewards.at(seed) - random_rewards.at(seed);
            if (std::abs(denom) < 1e-9) {
                ++row.excluded_seeds;
                continue;
            }
            ib_values.push_back(100.0 * (reward - random_rewards.at(seed)) / denom);
        }
        std::tie(row.mean_ib, row.se_ib) = mean_and_se(ib_values);
        std::tie(row.mean_reward, row.se_reward) = mean_and_se(reward_values);
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string summary_to_csv(const IBReport& report) {
    std::string out = "policy,mean_ib,se_ib,mean_r,se_r\n";
    for (const auto& row : report.rows) {
        out += row.policy;
        out += ",";
        out += format_reward(row.mean_ib);
        out += ",";
        out += format_reward(row.se_ib);
        out += ",";
        out += format_reward(row.mean_reward);
        out += ",";
        out += format_reward(row.se_reward);
        out += "\n";
    }
    return out;
}

void export_results(const std::vector<TrialRecord>& records, const IBReport& report,
                    const nlohmann::ordered_json& meta, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    {
        std::ofstream out(dir / "records.csv");
        if (!out) throw std::ios_base::failure("cannot write " + (dir / "records.csv").string());
        out << "seed,policy,episode,reward\n";
        for (const auto& r : records)
            out << r.seed << "," << r.policy << "," << r.episode << ","
                << format_reward(r.reward) << "\n";
        if (!out) throw std::ios_base::failure("write failed: records.csv");
    }
    {
        std::ofstream out(dir / "summary.csv");
        if (!out) throw std::ios_base::failure("cannot write " + (dir / "summary.csv").string());
        out << summary_to_csv(report);
    }
    {
        nlohmann::ordered_json full = meta;
        nlohmann::ordered_json excluded = nlohmann::ordered_json::object();
        for (const auto& row : report.rows) excluded[row.policy] = row.excluded_seeds;
        full["ib_excluded_seeds"] = excluded;
        std::ofstream out(dir / "meta.json");
        if (!out) throw std::ios_base::failure("cannot write " + (dir / "meta.json").string());
        out << full.dump(2) << "\n";
    }
}

std::vector<TrialRecord> read_records_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open records: " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("records file is empty: " + path.string());
    if (line != "seed,policy,episode,reward")
        throw std::invalid_argument("unexpected records header: '" + line + "'");
    std::vector<TrialRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        TrialRecord r;
        std::size_t p1 = line.find(',');
        std::size_t p2 = line.find(',', p1 + 1);
        std::size_t p3 = line.find(',', p2 + 1);
        if (p1 == std::string::npos || p2 == std::string::npos || p3 == std::string::npos)
            throw std::invalid_argument("bad records row: '" + line + "'");
        r.seed = std::stoull(line.substr(0, p1));
        r.policy = line.substr(p1 + 1, p2 - p1 - 1);
        r.episode = std::stoi(line.substr(p2 + 1, p3 - p2 - 1));
        r.reward = std::stod(line.substr(p3 + 1));
        r.wall_ms = 0.0;
        records.push_back(std::move(r));
    }
    return records;
}

void export_network(const StudentModel& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto& net = model.network;

    {
        std::ofstream out(dir / "nodes.csv");
        if (!out) throw std::ios_base::failure("cannot write " + (dir / "nodes.csv").string());
        out << "node,topics\n";
        for (int i = 0; i < net.n_arms(); ++i) {
            out << i << ",";
            const auto& topics = net.topics_of(i);
            for (std::size_t t = 0; t < topics.size(); ++t) {
                if (t) out << ";";
                out << topics[t];
            }
            out << "\n";
        }
    }
    {
        std::ofstream out(dir / "edges.csv");
        if (!out) throw std::ios_base::failure("cannot write " + (dir / "edges.csv").string());
        out << "node_a,node_b,shared_topics\n";
        for (int i = 0; i < net.n_arms(); ++i) {
            for (int j : net.neighbors(i)) {
                if (j <= i) continue;
                const auto& ti = net.topics_of(i);
                const auto& tj = net.topics_of(j);
                int shared = 0;
                std::size_t a = 0, b = 0;
                while (a < ti.size() && b < tj.size()) {
                    if (ti[a] == tj[b]) {
                        ++shared;
                        ++a;
                        ++b;
                    } else if (ti[a] < tj[b]) {
                        ++a;
                    } else {
                        ++b;
                    }
                }
                out << i << "," << j << "," << shared << "\n";
            }
        }
    }
}

}  // namespace ednet
