// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ednet/agents.hpp"
#include "ednet/env.hpp"
#include "ednet/harness.hpp"
#include "ednet/qtable.hpp"
#include "ednet/student_gen.hpp"
#include "ednet/whittle.hpp"

using namespace ednet;

namespace {

struct CriterionResult {
    bool pass;
    std::string detail;
};

GroupNetwork random_network(int n, int topics, Xoshiro256StarStar& rng) {
    std::vector<std::vector<int>> membership(n);
    for (int i = 0; i < n; ++i) {
        membership[i].push_back(rng.uniform_int(topics));
        while (rng.uniform01() < 0.3) membership[i].push_back(rng.uniform_int(topics));
    }
    return GroupNetwork(n, topics, membership);
}

QTable random_qtable(int n, Xoshiro256StarStar& rng) {
    QTable q(n);
    for (int i = 0; i < n; ++i)
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 3; ++a) q.set(i, s, a, rng.uniform(-1.0, 1.0));
    return q;
}

QTable random_monotone_qtable(int n, Xoshiro256StarStar& rng) {
    QTable q(n);
    for (int i = 0; i < n; ++i)
        for (int s = 0; s < 2; ++s) {
            double value = rng.uniform(0.0, 1.0);
            for (int a = 0; a < 3; ++a) {
                q.set(i, s, a, value);
                value += rng.uniform(0.0, 1.0);
            }
        }
    return q;
}

JointState random_state(int n, Xoshiro256StarStar& rng) {
    JointState s(n);
    for (int i = 0; i < n; ++i) s[i] = rng.uniform01() < 0.5 ? 1 : 0;
    return s;
}

TransitionTensor random_valid_tensor(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.n_arms = 1;
    spec.n_topics = 1;
    spec.seed = seed;
    return generate_synthetic(spec).tensors[0];
}

// ---------------------------------------------------------------------------
// shared synthetic suite for the statistical criteria (1, 2, 9, 10)

struct SuiteOutcome {
    std::vector<TrialRecord> records;
    IBReport report;
    std::string records_csv_first_run;
    std::string records_csv_second_run;
    std::map<std::string, double> per_policy_seconds;
};

ExperimentConfig suite_config() {
    ExperimentConfig config;
    SyntheticSpec spec;
    spec.n_arms = 50;
    spec.n_topics = 20;
    spec.seed = 0;
    config.synthetic = spec;
    config.policies = {"random", "wiql", "eduqate", "eduqate-minus"};
    config.episodes = 300;
    config.horizon = 50;
    config.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    config.k = 1;
    config.jobs = 4;
    return config;
}

SuiteOutcome run_suite() {
    const auto config = suite_config();
    const auto dir_a = std::filesystem::temp_directory_path() / "ednet_acceptance_a";
    const auto dir_b = std::filesystem::temp_directory_path() / "ednet_acceptance_b";
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);

    SuiteOutcome outcome;
    auto first = run_experiment(config);
    outcome.report = intervention_benefit(first.records);
    export_results(first.records, outcome.report, first.meta, dir_a);
    for (const auto& r : first.records) outcome.per_policy_seconds[r.policy] += r.wall_ms / 1e3;

    auto second = run_experiment(config);
    export_results(second.records, intervention_benefit(second.records), second.meta, dir_b);

    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p);
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    };
    outcome.records_csv_first_run = slurp(dir_a / "records.csv");
    outcome.records_csv_second_run = slurp(dir_b / "records.csv");
    outcome.records = std::move(first.records);
    return outcome;
}

std::map<std::uint64_t, double> final_rewards(const std::vector<TrialRecord>& records,
                                              const std::string& policy, int episodes) {
    std::map<std::uint64_t, double> out;
    for (const auto& r : records)
        if (r.policy == policy && r.episode == episodes - 1) out[r.seed] = r.reward;
    return out;
}

const IBRow& find_row(const IBReport& report, const std::string& policy) {
    for (const auto& row : report.rows)
        if (row.policy == policy) return row;
    throw std::logic_error("missing policy row: " + policy);
}

// ---------------------------------------------------------------------------

CriterionResult criterion_ordering(const SuiteOutcome& suite) {
    const auto& eduqate = find_row(suite.report, "eduqate");
    const auto& random_row = find_row(suite.report, "random");
    const auto& wiql = find_row(suite.report, "wiql");

    const double gap = eduqate.mean_reward - random_row.mean_reward;
    const double pooled_se = std::sqrt(eduqate.se_reward * eduqate.se_reward +
                                       random_row.se_reward * random_row.se_reward);
    const bool beats_random = gap > 2.0 * pooled_se;
    const bool beats_wiql = eduqate.mean_reward > wiql.mean_reward;

    double max_policy_seconds = 0.0;
    for (const auto& [policy, seconds] : suite.per_policy_seconds)
        max_policy_seconds = std::max(max_policy_seconds, seconds);
    const bool in_budget = max_policy_seconds < 600.0;

    std::ostringstream detail;
    detail.precision(3);
    detail << std::fixed << "eduqate " << eduqate.mean_reward << " vs random "
           << random_row.mean_reward << " vs wiql " << wiql.mean_reward << "; gap " << gap
           << " vs 2*pooled_se " << 2.0 * pooled_se << "; slowest policy "
           << max_policy_seconds << "s";
    return {beats_random && beats_wiql && in_budget, detail.str()};
}

CriterionResult criterion_wiql_negative_ib(const SuiteOutcome& suite) {
    const auto config = suite_config();
    const auto random_rewards = final_rewards(suite.records, "random", config.episodes);
    const auto eduqate_rewards = final_rewards(suite.records, "eduqate", config.episodes);
    const auto wiql_rewards = final_rewards(suite.records, "wiql", config.episodes);
    int negative = 0, total = 0;
    double ib_sum = 0.0;
    for (const auto& [seed, reward] : wiql_rewards) {
        const double denom = eduqate_rewards.at(seed) - random_rewards.at(seed);
        if (std::abs(denom) < 1e-9) continue;
        ++total;
        const double ib = 100.0 * (reward - random_rewards.at(seed)) / denom;
        ib_sum += ib;
        if (ib < 0.0) ++negative;
    }
    std::ostringstream detail;
    detail.precision(1);
    detail << std::fixed << "per-seed IB(wiql) < 0 in " << negative << "/" << total
           << " seeds (need >= 7/10); mean IB " << ib_sum / std::max(total, 1) << "%";
    return {negative >= 7, detail.str()};
}

CriterionResult criterion_theorem1() {
    Xoshiro256StarStar rng(1003);
    const int instances = 10000;
    int mismatches = 0;
    for (int trial = 0; trial < instances; ++trial) {
        const int n = 2 + rng.uniform_int(11);  // N <= 12
        const int topics = 1 + rng.uniform_int(4);
        const auto net = random_network(n, topics, rng);
        const auto q = random_qtable(n, rng);
        const auto state = random_state(n, rng);

        double best_lambda = -1e300, best_dec = -1e300;
        std::vector<double> lambda(n), dec(n);
        for (int i = 0; i < n; ++i) {
            lambda[i] = whittle_estimate(q, state, net, i);
            dec[i] = joint_q_decomposition(q, state, net, i);
            best_lambda = std::max(best_lambda, lambda[i]);
            best_dec = std::max(best_dec, dec[i]);
        }
        std::vector<int> lambda_ties, dec_ties;
        for (int i = 0; i < n; ++i) {
            if (lambda[i] == best_lambda) lambda_ties.push_back(i);
            if (dec[i] == best_dec) dec_ties.push_back(i);
        }
        if (lambda_ties != dec_ties) ++mismatches;
    }
    std::ostringstream detail;
    detail << mismatches << "/" << instances << " argmax tie-set mismatches";
    return {mismatches == 0, detail.str()};
}

CriterionResult criterion_greedy_oracle() {
    Xoshiro256StarStar rng(1004);
    const int instances = 1000;
    int bound_violations = 0, equality_violations = 0, disjoint_cases = 0;
    for (int trial = 0; trial < instances; ++trial) {
        const int n = 8;
        const int k = 2 + (trial % 2);
        const auto net = random_network(n, 1 + rng.uniform_int(5), rng);
        const auto q = random_monotone_qtable(n, rng);
        const auto state = random_state(n, rng);

        const auto greedy = greedy_select_k(q, state, net, k);
        const double greedy_value = joint_q_decomposition_set(q, state, net, greedy);

        double best = -1e300;
        std::vector<int> subset(k);
        std::function<void(int, int)> enumerate = [&](int start, int depth) {
            if (depth == k) {
                best = std::max(best, joint_q_decomposition_set(q, state, net, subset));
                return;
            }
            for (int i = start; i < n; ++i) {
                subset[depth] = i;
                enumerate(i + 1, depth + 1);
            }
        };
        enumerate(0, 0);

        if (greedy_value > best + 1e-9) ++bound_violations;

        // top-k arms by the independent index estimate
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        std::vector<double> lambda(n);
        for (int i = 0; i < n; ++i) lambda[i] = whittle_estimate(q, state, net, i);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return lambda[a] > lambda[b]; });
        bool disjoint = true;
        for (int a = 0; a < k && disjoint; ++a)
            for (int b = a + 1; b < k && disjoint; ++b) {
                const int ia = order[a], ib = order[b];
                std::vector<int> phi_a = net.neighbors(ia);
                phi_a.push_back(ia);
                std::vector<int> phi_b = net.neighbors(ib);
                phi_b.push_back(ib);
                for (int x : phi_a)
                    for (int y : phi_b)
                        if (x == y) disjoint = false;
            }
        if (disjoint) {
            ++disjoint_cases;
            if (std::abs(greedy_value - best) > 1e-9) ++equality_violations;
        }
    }
    std::ostringstream detail;
    detail << bound_violations << " bound violations, " << equality_violations
           << " equality violations on " << disjoint_cases << " disjoint-winner instances";
    return {bound_violations == 0 && equality_violations == 0 && disjoint_cases > 0,
            detail.str()};
}

CriterionResult criterion_q_convergence() {
    // constant-step q-learning hovers around Q* with std ~ sqrt(alpha/2) times
    // the target std, so the test arm keeps per-row Bernoulli variance small
    // while the chains and dominance stay strict
    const auto tensor = TransitionTensor::from_up_probs({0.9960, 0.9966, 0.9972},
                                                        {0.9980, 0.9986, 0.9992});
    const double gamma = 0.95;

    double v[2] = {0.0, 0.0};
    for (int iter = 0; iter < 300000; ++iter) {
        double next[2];
        double delta = 0.0;
        for (int s = 0; s < 2; ++s) {
            double best = -1e300;
            for (int a = 0; a < 3; ++a) {
                const double p = tensor.up(a, s);
                best = std::max(best, p * (1.0 + gamma * v[1]) + (1.0 - p) * (gamma * v[0]));
            }
            next[s] = best;
            delta = std::max(delta, std::abs(next[s] - v[s]));
        }
        v[0] = next[0];
        v[1] = next[1];
        if (delta < 1e-13) break;
    }

    LearnerConfig cfg;  // alpha 0.1, gamma 0.95
    QTable q(1);
    Xoshiro256StarStar rng(777);
    int s = 0;
    for (long step = 0; step < 1000000; ++step) {
        const int a = rng.uniform_int(3);
        const int s_next = rng.uniform01() < tensor.up(a, s) ? 1 : 0;
        q_update(q, 0, s, a, static_cast<double>(s_next), s_next, cfg);
        s = s_next;
    }
    double sup = 0.0;
    for (int state = 0; state < 2; ++state)
        for (int a = 0; a < 3; ++a) {
            const double p = tensor.up(a, state);
            const double qstar = p * (1.0 + gamma * v[1]) + (1.0 - p) * (gamma * v[0]);
            sup = std::max(sup, std::abs(q.get(0, state, a) - qstar));
        }
    std::ostringstream detail;
    detail << "sup-norm distance to Q* after 1e6 updates: " << sup << " (tolerance 0.05)";
    return {sup < 0.05, detail.str()};
}

CriterionResult criterion_threshold_whittle() {
    int zero_failures = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto t = random_valid_tensor(seed + 5000);
        t.p[kActive] = t.p[kPassive];
        for (int s = 0; s < 2; ++s)
            if (std::abs(threshold_whittle_index(t, s, 0.95)) >= 1e-5) ++zero_failures;
    }

    int monotonicity_violations = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto t = random_valid_tensor(seed + 6000);
        const double start = t.up(2, 0);
        const double ceiling = std::min(0.999, t.up(2, 1));
        double prev = -1e300;
        for (int step = 0; step <= 3; ++step) {
            const double p = start + (ceiling - start) * 0.99 * step / 3.0;
            t.p[2][0][1] = p;
            t.p[2][0][0] = 1.0 - p;
            const double index = threshold_whittle_index(t, 0, 0.95);
            if (index < prev - 1e-6) ++monotonicity_violations;
            prev = index;
        }
    }
    std::ostringstream detail;
    detail << zero_failures << " nonzero indices on identical rows, " << monotonicity_violations
           << " monotonicity violations";
    return {zero_failures == 0 && monotonicity_violations == 0, detail.str()};
}

CriterionResult criterion_regression_recovery() {
    Xoshiro256StarStar rng(42);
    std::vector<double> rates;
    double a = 0.1;
    rates.push_back(a);
    for (int t = 1; t < 500; ++t) {
        a = 0.3 * (1.0 - a) + 0.8 * a + rng.uniform(-0.05, 0.05);
        a = std::min(0.999, std::max(0.001, a));
        rates.push_back(a);
    }
    const auto fit = fit_active_transitions(rates);
    const bool recovered = std::abs(fit.p01 - 0.3) < 0.05 && std::abs(fit.p11 - 0.8) < 0.05;

    // clipping engages exactly when the unconstrained fit exceeds 0.99
    auto apply = [](double p01, double p11, double x) { return p01 * (1 - x) + p11 * x; };
    const std::vector<double> hot = {0.1, apply(0.2, 1.07, 0.1),
                                     apply(0.2, 1.07, apply(0.2, 1.07, 0.1))};
    const auto hot_fit = fit_active_transitions(hot);
    const std::vector<double> cool = {0.1, apply(0.3, 0.8, 0.1),
                                      apply(0.3, 0.8, apply(0.3, 0.8, 0.1))};
    const auto cool_fit = fit_active_transitions(cool);
    const bool clipping_exact = hot_fit.clipped && hot_fit.p11 == 0.99 && !cool_fit.clipped;

    std::ostringstream detail;
    detail.precision(4);
    detail << std::fixed << "recovered (" << fit.p01 << ", " << fit.p11
           << ") for planted (0.3, 0.8); clipped fit p11=" << hot_fit.p11
           << " clipped=" << hot_fit.clipped << ", clean fit clipped=" << cool_fit.clipped;
    return {recovered && clipping_exact, detail.str()};
}

CriterionResult criterion_model_validity() {
    int synthetic_failures = 0;
    SyntheticSpec spec;
    spec.n_arms = 50;
    spec.n_topics = 20;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        spec.seed = seed;
        if (!validate(generate_synthetic(spec)).ok()) ++synthetic_failures;
    }

    int log_failures = 0;
    Xoshiro256StarStar rng(31337);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n_items = 4 + rng.uniform_int(4);
        InteractionLog log;
        ItemCatalog catalog;
        const bool junyi_style = trial % 2 == 0;
        for (int item = 0; item < n_items; ++item) {
            const std::string id = "i" + std::to_string(item);
            catalog.items.push_back(
                {id, {"t" + std::to_string(item % 3), "shared"}, rng.uniform(0.0, 5.0)});
            if (junyi_style) {
                for (int s = 0; s < 10; ++s) {
                    const int mastery = 1 + rng.uniform_int(8);
                    for (int t = 0; t < mastery + 4; ++t)
                        log.rows.push_back({"s" + std::to_string(s), id, t,
                                            rng.uniform01() < 0.5 ? 1 : 0, t >= mastery ? 1 : 0});
                }
            } else {
                const double p01 = rng.uniform(0.05, 0.6);
                const double p11 = rng.uniform(p01 + 0.05, 0.99);
                double rate = rng.uniform(0.05, 0.3);
                for (int t = 0; t < 40; ++t) {
                    for (int s = 0; s < 15; ++s)
                        log.rows.push_back({"s" + std::to_string(s), id, t,
                                            rng.uniform01() < rate ? 1 : 0, -1});
                    rate = p01 * (1 - rate) + p11 * rate;
                }
            }
        }
        LogModelOptions options;
        options.seed = rng.next();
        options.constant_sigma = rng.uniform(0.3, 0.95);
        try {
            if (!validate(build_model_from_logs(log, catalog, nullptr, options)).ok())
                ++log_failures;
        } catch (const std::exception&) {
            ++log_failures;
        }
    }
    std::ostringstream detail;
    detail << synthetic_failures << "/10000 synthetic and " << log_failures
           << "/1000 log-derived validation failures";
    return {synthetic_failures == 0 && log_failures == 0, detail.str()};
}

CriterionResult criterion_replay_ablation(const SuiteOutcome& suite) {
    const auto config = suite_config();
    const auto with_replay = final_rewards(suite.records, "eduqate", config.episodes);
    const auto without_replay = final_rewards(suite.records, "eduqate-minus", config.episodes);
    int wins = 0, total = 0;
    for (const auto& [seed, reward] : with_replay) {
        ++total;
        if (reward >= without_replay.at(seed)) ++wins;
    }
    std::ostringstream detail;
    detail << "eduqate >= eduqate-minus in " << wins << "/" << total << " seeds (need >= 7/10)";
    return {wins >= 7, detail.str()};
}

CriterionResult criterion_determinism(const SuiteOutcome& suite) {
    const bool identical = !suite.records_csv_first_run.empty() &&
                           suite.records_csv_first_run == suite.records_csv_second_run;
    std::ostringstream detail;
    detail << "two runs, " << suite.records_csv_first_run.size() << " bytes each, "
           << (identical ? "byte-identical" : "DIFFER");
    return {identical, detail.str()};
}

}  // namespace

int main() {
    std::printf("running the acceptance suite (shared synthetic runs first)...\n");
    const auto t_suite = std::chrono::steady_clock::now();
    const SuiteOutcome suite = run_suite();
    std::printf("shared synthetic suite done in %.1fs\n\n",
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t_suite).count());

    struct Criterion {
        const char* name;
        std::function<CriterionResult()> run;
    };
    const std::vector<Criterion> criteria = {
        {"1. ordering reproduction (eduqate > random > wiql pattern)",
         [&] { return criterion_ordering(suite); }},
        {"2. wiql network-blindness (negative per-seed IB)",
         [&] { return criterion_wiql_negative_ib(suite); }},
        {"3. theorem-1 ranking identity (1e4 instances)", criterion_theorem1},
        {"4. greedy vs enumeration oracle (1e3 instances)", criterion_greedy_oracle},
        {"5. q-learning convergence to the value-iteration oracle", criterion_q_convergence},
        {"6. threshold-whittle zero index and monotonicity", criterion_threshold_whittle},
        {"7. regression recovery and exact clipping", criterion_regression_recovery},
        {"8. model validity (1e4 synthetic + 1e3 log-derived)", criterion_model_validity},
        {"9. replay ablation trend (eduqate vs eduqate-minus)",
         [&] { return criterion_replay_ablation(suite); }},
        {"10. determinism (byte-identical records.csv)",
         [&] { return criterion_determinism(suite); }},
    };

    int passed = 0;
    for (const auto& criterion : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        CriterionResult result;
        try {
            result = criterion.run();
        } catch (const std::exception& e) {
            result = {false, std::string("exception: ") + e.what()};
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] %s (%.1fs)\n    %s\n", result.pass ? "PASS" : "FAIL", criterion.name,
                    seconds, result.detail.c_str());
        if (result.pass) ++passed;
    }
    std::printf("\nACCEPTANCE: %d/%zu criteria passed\n", passed, criteria.size());
    return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
