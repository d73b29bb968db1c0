#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ednet/model.hpp"
#include "ednet/qtable.hpp"
#include "ednet/student_gen.hpp"

namespace ednet {

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
    // exactly one model source: a synthetic spec (fresh model per seed)
    // or a model file (fixed across seeds)
    std::optional<SyntheticSpec> synthetic;
    std::optional<std::string> model_file;

    std::vector<std::string> policies;
    int episodes = 800;
    int horizon = 50;
    std::vector<std::uint64_t> seeds;  // empty means 0..29
    int k = 1;
    LearnerConfig learner;
    int jobs = 1;
    bool oracle_check = false;
    std::string checkpoint_dir;  // empty disables Q-table checkpoints

    std::vector<std::uint64_t> effective_seeds() const;
    void check() const;  // throws std::invalid_argument on bad values
};

struct TrialRecord {
    std::uint64_t seed;
    std::string policy;
    int episode;
    double reward;   // mean per-step reward over the episode
    double wall_ms;  // not exported to CSV
};

/// Runs every episode of one (policy, seed) trial. Synthetic sources get a
/// fresh model per seed; Q-state persists across episode resets. Fully
/// deterministic given (config, policy, seed).
std::vector<TrialRecord> run_trial(const ExperimentConfig& config, const std::string& policy,
                                   std::uint64_t seed);

struct ExperimentResult {
    std::vector<TrialRecord> records;
    nlohmann::ordered_json meta;
};

/// Runs all (policy, seed) trials, in parallel when config.jobs > 1, and
/// merges records in (policy order, seed order, episode) order so output
/// bytes never depend on scheduling.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct IBRow {
    std::string policy;
    double mean_ib = 0.0;  // percent
    double se_ib = 0.0;
    double mean_reward = 0.0;
    double se_reward = 0.0;
    int excluded_seeds = 0;  // seeds with a degenerate eduqate-random gap
};

struct IBReport {
    std::vector<IBRow> rows;
    int n_seeds = 0;
};

/// Per-seed intervention benefit from final-episode rewards,
/// (R_pi - R_random) / (R_eduqate - R_random), averaged across seeds with
/// its standard error. Requires random and eduqate among the records.
IBReport intervention_benefit(const std::vector<TrialRecord>& records);

/// Writes records.csv, summary.csv, and meta.json under `dir`.
void export_results(const std::vector<TrialRecord>& records, const IBReport& report,
                    const nlohmann::ordered_json& meta, const std::filesystem::path& dir);

std::vector<TrialRecord> read_records_csv(const std::filesystem::path& path);

std::string summary_to_csv(const IBReport& report);

/// Writes nodes.csv (node,topics) and edges.csv (node_a,node_b,shared_topics)
/// for external plotting.
void export_network(const StudentModel& model, const std::filesystem::path& dir);

}  // namespace ednet
