#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ednet/agents.hpp"
#include "ednet/harness.hpp"
#include "ednet/model.hpp"
#include "ednet/qtable.hpp"
#include "ednet/student_gen.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitIo = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GenerateArgs {
    bool synthetic = false;
    std::string from_logs;
    std::string items;
    std::string similarity;
    int n_arms = 50;
    int n_topics = 20;
    double extra_membership_prob = 0.1;
    std::uint64_t seed = 0;
    double sigma = 0.8;
    std::string out;
};

int cmd_generate(const GenerateArgs& args) {
    ednet::StudentModel model = [&] {
        if (args.synthetic) {
            ednet::SyntheticSpec spec;
            spec.n_arms = args.n_arms;
            spec.n_topics = args.n_topics;
            spec.extra_membership_prob = args.extra_membership_prob;
            spec.seed = args.seed;
            return ednet::generate_synthetic(spec);
        }
        const auto log = ednet::load_interaction_log(args.from_logs);
        const auto catalog = ednet::load_item_catalog(args.items);
        std::vector<ednet::SimilarityEntry> similarity;
        if (!args.similarity.empty()) similarity = ednet::load_similarity(args.similarity);
        ednet::LogModelOptions options;
        options.constant_sigma = args.sigma;
        options.seed = args.seed;
        return ednet::build_model_from_logs(log, catalog,
                                            similarity.empty() ? nullptr : &similarity, options);
    }();

    const auto report = ednet::validate(model);
    if (!report.ok()) {
        std::cerr << "model validation failed:\n" << report.to_string() << "\n";
        return kExitData;
    }
    ednet::save_model(model, args.out);
    std::cout << "wrote " << args.out << ": " << model.n_arms() << " arms, "
              << model.network.n_topics() << " topics, validation ok\n";
    return kExitOk;
}

struct RunArgs {
    std::string model_file;
    bool synthetic = false;
    int n_arms = 50;
    int n_topics = 20;
    double extra_membership_prob = 0.1;
    std::uint64_t model_seed = 0;
    std::vector<std::string> policies;
    int episodes = 800;
    int horizon = 50;
    int n_seeds = 30;
    std::vector<std::uint64_t> seed_list;
    int k = 1;
    double alpha = 0.1;
    double gamma = 0.95;
    int buffer_capacity = 10000;
    int batch_size = 64;
    int jobs = 1;
    bool oracle_check = false;
    std::string checkpoint_dir;
    std::string out_dir;
    std::string config_file;
};

void apply_config_file(const CLI::App* cmd, RunArgs& args) {
    std::ifstream in(args.config_file);
    if (!in) throw std::ios_base::failure("cannot open config file: " + args.config_file);
    nlohmann::json j;
    in >> j;

    auto unset = [&](const std::string& flag) { return cmd->count(flag) == 0; };
    if (j.contains("model") && unset("--model")) args.model_file = j["model"].get<std::string>();
    if (j.contains("synthetic")) {
        const auto& s = j["synthetic"];
        if (unset("--synthetic")) args.synthetic = true;
        if (s.contains("n_arms") && unset("--n-arms")) args.n_arms = s["n_arms"].get<int>();
        if (s.contains("n_topics") && unset("--n-topics"))
            args.n_topics = s["n_topics"].get<int>();
        if (s.contains("extra_membership_prob") && unset("--extra-membership-prob"))
            args.extra_membership_prob = s["extra_membership_prob"].get<double>();
        if (s.contains("seed") && unset("--model-seed"))
            args.model_seed = s["seed"].get<std::uint64_t>();
    }
    if (j.contains("policies") && unset("--policies"))
        args.policies = j["policies"].get<std::vector<std::string>>();
    if (j.contains("episodes") && unset("--episodes")) args.episodes = j["episodes"].get<int>();
    if (j.contains("horizon") && unset("--horizon")) args.horizon = j["horizon"].get<int>();
    if (j.contains("seeds") && unset("--seed-list") && unset("--seeds"))
        args.seed_list = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("n_seeds") && unset("--seeds")) args.n_seeds = j["n_seeds"].get<int>();
    if (j.contains("k") && unset("--k")) args.k = j["k"].get<int>();
    if (j.contains("learner")) {
        const auto& l = j["learner"];
        if (l.contains("alpha") && unset("--alpha")) args.alpha = l["alpha"].get<double>();
        if (l.contains("gamma") && unset("--gamma")) args.gamma = l["gamma"].get<double>();
        if (l.contains("buffer_capacity") && unset("--buffer"))
            args.buffer_capacity = l["buffer_capacity"].get<int>();
        if (l.contains("batch_size") && unset("--batch"))
            args.batch_size = l["batch_size"].get<int>();
    }
    if (j.contains("jobs") && unset("--jobs")) args.jobs = j["jobs"].get<int>();
    if (j.contains("out_dir") && unset("--out")) args.out_dir = j["out_dir"].get<std::string>();
}

std::string default_out_dir() {
    if (const char* env = std::getenv("EDNETRMAB_OUT_DIR")) return env;
    return "results";
}

void print_summary(const ednet::IBReport& report) {
    std::printf("%-14s %14s %10s %12s %10s\n", "policy", "mean_IB(%)", "se_IB", "mean_R", "se_R");
    for (const auto& row : report.rows) {
        if (row.policy == "random") {
            std::printf("%-14s %14s %10s %12.3f %10.3f\n", row.policy.c_str(), "-", "-",
                        row.mean_reward, row.se_reward);
        } else {
            std::printf("%-14s %14.2f %10.2f %12.3f %10.3f\n", row.policy.c_str(), row.mean_ib,
                        row.se_ib, row.mean_reward, row.se_reward);
        }
    }
}

int cmd_run(const CLI::App* cmd, RunArgs& args) {
    if (!args.config_file.empty()) apply_config_file(cmd, args);

    ednet::ExperimentConfig config;
    if (args.synthetic && !args.model_file.empty())
        throw UsageError("choose either --model or --synthetic, not both");
    if (args.synthetic) {
        ednet::SyntheticSpec spec;
        spec.n_arms = args.n_arms;
        spec.n_topics = args.n_topics;
        spec.extra_membership_prob = args.extra_membership_prob;
        spec.seed = args.model_seed;
        config.synthetic = spec;
    } else if (!args.model_file.empty()) {
        config.model_file = args.model_file;
    } else {
        throw UsageError("a model source is required: --model FILE or --synthetic");
    }
    config.policies = args.policies.empty() ? ednet::known_policies() : args.policies;
    config.episodes = args.episodes;
    config.horizon = args.horizon;
    if (!args.seed_list.empty()) {
        config.seeds = args.seed_list;
    } else {
        config.seeds.resize(args.n_seeds);
        for (int i = 0; i < args.n_seeds; ++i) config.seeds[i] = static_cast<std::uint64_t>(i);
    }
    config.k = args.k;
    config.learner.alpha = args.alpha;
    config.learner.gamma = args.gamma;
    config.learner.buffer_capacity = args.buffer_capacity;
    config.learner.batch_size = args.batch_size;
    config.jobs = args.jobs;
    config.oracle_check = args.oracle_check;
    config.checkpoint_dir = args.checkpoint_dir;

    const std::string out_dir = args.out_dir.empty() ? default_out_dir() : args.out_dir;

    auto result = ednet::run_experiment(config);
    const bool ib_possible =
        std::count(config.policies.begin(), config.policies.end(), "random") &&
        std::count(config.policies.begin(), config.policies.end(), "eduqate");
    ednet::IBReport report;
    if (ib_possible) {
        report = ednet::intervention_benefit(result.records);
    } else {
        std::cerr << "note: IB columns need both 'random' and 'eduqate'; writing rewards only\n";
        report.n_seeds = static_cast<int>(config.effective_seeds().size());
        // reward-only rows keep summary.csv well-formed
        for (const auto& policy : config.policies) {
            ednet::IBRow row;
            row.policy = policy;
            std::vector<double> rewards;
            int last = 0;
            for (const auto& r : result.records) last = std::max(last, r.episode);
            for (const auto& r : result.records)
                if (r.policy == policy && r.episode == last) rewards.push_back(r.reward);
            double mean = 0;
            for (double v : rewards) mean += v;
            mean /= rewards.empty() ? 1 : rewards.size();
            double ss = 0;
            for (double v : rewards) ss += (v - mean) * (v - mean);
            row.mean_reward = mean;
            row.se_reward = rewards.size() > 1
                                ? std::sqrt(ss / (rewards.size() - 1)) / std::sqrt(rewards.size())
                                : 0.0;
            report.rows.push_back(row);
        }
    }
    ednet::export_results(result.records, report, result.meta, out_dir);
    std::cout << "wrote " << (std::filesystem::path(out_dir) / "records.csv").string() << " ("
              << result.records.size() << " rows)\n";
    print_summary(report);
    return kExitOk;
}

int cmd_analyze(const std::string& records_path, std::string out_path) {
    const auto records = ednet::read_records_csv(records_path);
    const auto report = ednet::intervention_benefit(records);
    if (out_path.empty())
        out_path = (std::filesystem::path(records_path).parent_path() / "summary.csv").string();
    std::ofstream out(out_path);
    if (!out) throw std::ios_base::failure("cannot write " + out_path);
    out << ednet::summary_to_csv(report);
    std::cout << "wrote " << out_path << "\n";
    print_summary(report);
    return kExitOk;
}

int cmd_export_network(const std::string& model_path, const std::string& out_dir) {
    const auto model = ednet::load_model(model_path);
    ednet::export_network(model, out_dir);
    std::cout << "wrote " << (std::filesystem::path(out_dir) / "nodes.csv").string() << " and "
              << (std::filesystem::path(out_dir) / "edges.csv").string() << "\n";
    return kExitOk;
}

struct GreedyDemoArgs {
    int n_arms = 8;
    int n_topics = 3;
    int k = 2;
    std::uint64_t seed = 0;
    bool oracle_check = false;
};

int cmd_greedy_demo(const GreedyDemoArgs& args) {
    ednet::SyntheticSpec spec;
    spec.n_arms = args.n_arms;
    spec.n_topics = args.n_topics;
    spec.extra_membership_prob = 0.2;
    spec.seed = args.seed;
    const auto model = ednet::generate_synthetic(spec);

    ednet::Xoshiro256StarStar rng(ednet::mix_seed(args.seed, 0xDE30));
    ednet::QTable q(args.n_arms);
    for (int i = 0; i < args.n_arms; ++i)
        for (int s = 0; s < 2; ++s) {
            double value = rng.uniform(0.0, 1.0);
            for (int a = 0; a < ednet::kNumActions; ++a) {
                q.set(i, s, a, value);
                value += rng.uniform(0.0, 1.0);
            }
        }
    ednet::JointState state(args.n_arms);
    for (int i = 0; i < args.n_arms; ++i) state[i] = rng.uniform01() < 0.5;

    const auto pulled = ednet::greedy_select_k(q, state, model.network, args.k);
    const double value = ednet::joint_q_decomposition_set(q, state, model.network, pulled);
    std::cout << "greedy pull set:";
    for (int i : pulled) std::cout << " " << i;
    std::cout << "\njoint decomposed value: " << value << "\n";

    if (args.oracle_check) {
        if (args.n_arms > 8)
            throw std::invalid_argument("--oracle-check enumerates subsets; use --n-arms <= 8");
        std::vector<int> subset(args.k);
        double best = -1e300;
        std::vector<int> best_set;
        std::function<void(int, int)> enumerate = [&](int start, int depth) {
            if (depth == args.k) {
                const double v = ednet::joint_q_decomposition_set(q, state, model.network, subset);
                if (v > best) {
                    best = v;
                    best_set = subset;
                }
                return;
            }
            for (int i = start; i < args.n_arms; ++i) {
                subset[depth] = i;
                enumerate(i + 1, depth + 1);
            }
        };
        enumerate(0, 0);
        std::cout << "brute-force optimum:";
        for (int i : best_set) std::cout << " " << i;
        std::cout << "\noptimal value: " << best << "\n";
        std::cout << (value >= best - 1e-9 ? "greedy matches the optimum\n"
                                           : "greedy is below the optimum\n");
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EdNetRMAB simulator: student models, teacher policies, and the"
                 " intervention-benefit experiment harness"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Create a student model file");
    generate->add_flag("--synthetic", gen.synthetic, "Generate a synthetic student");
    generate->add_option("--from-logs", gen.from_logs, "Interaction log CSV");
    generate->add_option("--items", gen.items, "Item metadata CSV (required with --from-logs)");
    generate->add_option("--similarity", gen.similarity, "Item-pair similarity CSV");
    generate->add_option("--n-arms", gen.n_arms, "Number of arms")->capture_default_str();
    generate->add_option("--n-topics", gen.n_topics, "Number of topics")->capture_default_str();
    generate->add_option("--extra-membership-prob", gen.extra_membership_prob,
                         "Chance of joining each extra topic")->capture_default_str();
    generate->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
    generate->add_option("--sigma", gen.sigma, "Constant similarity proportion")
        ->capture_default_str();
    generate->add_option("--out", gen.out, "Output model file")->required();

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run policies against a student model");
    run_cmd->add_option("--model", run.model_file, "Student model file");
    run_cmd->add_flag("--synthetic", run.synthetic, "Generate a fresh synthetic student per seed");
    run_cmd->add_option("--n-arms", run.n_arms, "Synthetic: number of arms")
        ->capture_default_str();
    run_cmd->add_option("--n-topics", run.n_topics, "Synthetic: number of topics")
        ->capture_default_str();
    run_cmd->add_option("--extra-membership-prob", run.extra_membership_prob,
                        "Synthetic: extra membership probability")->capture_default_str();
    run_cmd->add_option("--model-seed", run.model_seed, "Synthetic: base model seed")
        ->capture_default_str();
    run_cmd->add_option("--policies", run.policies,
                        "Comma-separated policies (eduqate,eduqate-minus,wiql,tw,myopic,random)")
        ->delimiter(',');
    run_cmd->add_option("--episodes", run.episodes, "Episodes per trial")->capture_default_str();
    run_cmd->add_option("--horizon", run.horizon, "Actions per episode")->capture_default_str();
    run_cmd->add_option("--seeds", run.n_seeds, "Number of seeds (0..N-1)")
        ->capture_default_str();
    run_cmd->add_option("--seed-list", run.seed_list, "Explicit seed list")->delimiter(',');
    run_cmd->add_option("--k", run.k, "Arms pulled per step")->capture_default_str();
    run_cmd->add_option("--alpha", run.alpha, "Q-learning rate")->capture_default_str();
    run_cmd->add_option("--gamma", run.gamma, "Discount factor")->capture_default_str();
    run_cmd->add_option("--buffer", run.buffer_capacity, "Replay buffer capacity")
        ->capture_default_str();
    run_cmd->add_option("--batch", run.batch_size, "Replay minibatch size")
        ->capture_default_str();
    run_cmd->add_option("--jobs", run.jobs, "Parallel trials")->capture_default_str();
    run_cmd->add_flag("--oracle-check", run.oracle_check,
                      "Append greedy-vs-enumeration comparison to meta (k>=2, n_arms<=8)");
    run_cmd->add_option("--checkpoint-dir", run.checkpoint_dir,
                        "Write learned Q-tables here after each trial");
    run_cmd->add_option("--out", run.out_dir,
                        "Results directory (default $EDNETRMAB_OUT_DIR or ./results)");
    run_cmd->add_option("--config", run.config_file, "JSON config file; flags win over it");

    std::string analyze_records, analyze_out;
    auto* analyze = app.add_subcommand("analyze", "Recompute the summary from records.csv");
    analyze->add_option("--records", analyze_records, "records.csv path")->required();
    analyze->add_option("--out", analyze_out, "summary.csv path (default: next to records)");

    std::string net_model, net_out;
    auto* export_net = app.add_subcommand("export-network", "Export node/edge lists");
    export_net->add_option("--model", net_model, "Student model file")->required();
    export_net->add_option("--out", net_out, "Output directory")->required();

    GreedyDemoArgs demo;
    auto* greedy = app.add_subcommand("greedy-demo", "Greedy pull-set selection demo for k>1");
    greedy->add_option("--n-arms", demo.n_arms, "Arms")->capture_default_str();
    greedy->add_option("--n-topics", demo.n_topics, "Topics")->capture_default_str();
    greedy->add_option("--k", demo.k, "Pull budget")->capture_default_str();
    greedy->add_option("--seed", demo.seed, "Seed")->capture_default_str();
    greedy->add_flag("--oracle-check", demo.oracle_check, "Compare against enumeration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (generate->parsed()) {
            if (gen.synthetic == !gen.from_logs.empty())
                throw UsageError("generate: choose exactly one of --synthetic or --from-logs");
            if (!gen.from_logs.empty() && gen.items.empty())
                throw UsageError("generate: --from-logs requires --items");
            return cmd_generate(gen);
        }
        if (run_cmd->parsed()) return cmd_run(run_cmd, run);
        if (analyze->parsed()) return cmd_analyze(analyze_records, analyze_out);
        if (export_net->parsed()) return cmd_export_network(net_model, net_out);
        if (greedy->parsed()) return cmd_greedy_demo(demo);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
