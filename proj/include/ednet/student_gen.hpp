#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ednet/model.hpp"
#include "ednet/rng.hpp"

namespace ednet {

struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- synthetic --------------------------------------------------------------

struct SyntheticSpec {
    int n_arms = 50;
    int n_topics = 20;
    double extra_membership_prob = 0.1;  // chance of joining each extra topic
    std::uint64_t seed = 0;
};

/// Random student: every arm gets one uniformly chosen primary topic plus
/// independent extra memberships; per-arm up-probabilities come from
/// sorted uniform triples per state row, with retention dominance enforced
/// by rejection. The result always passes validate; identical specs give
/// byte-identical models.
StudentModel generate_synthetic(const SyntheticSpec& spec);

// --- interaction logs -------------------------------------------------------

struct LogRow {
    std::string student_id;
    std::string item_id;
    int step;
    int correct;      // 0 or 1
    int proficiency;  // 0/1, or -1 when the column is blank
};

struct InteractionLog {
    std::vector<LogRow> rows;

    bool has_proficiency() const;
};

struct ItemInfo {
    std::string item_id;
    std::vector<std::string> topics;
    double difficulty;  // raw scale; min-max normalized across the catalog
};

struct ItemCatalog {
    std::vector<ItemInfo> items;
};

struct SimilarityEntry {
    std::string item_a;
    std::string item_b;
    double score;  // 9-point Likert scale; normalized to [0,1] via (score-1)/8
};

InteractionLog load_interaction_log(const std::filesystem::path& path);
ItemCatalog load_item_catalog(const std::filesystem::path& path);
std::vector<SimilarityEntry> load_similarity(const std::filesystem::path& path);

// --- per-item fits ----------------------------------------------------------

/// Mean correctness of an item at each observed step, ascending step order.
std::vector<double> correctness_by_step(const InteractionLog& log, const std::string& item_id);

struct ActiveFit {
    double p01 = 0.0;  // unlearned -> learned under the active action
    double p11 = 0.0;  // learned -> learned under the active action
    bool clipped = false;
    bool underdetermined = false;
};

/// Least-squares fit of a(t+1) = p01 (1 - a(t)) + p11 a(t) over consecutive
/// correctness rates, coefficients clipped into (0, 0.99]. A rank-deficient
/// design (constant rates) is flagged and falls back to mean-correctness
/// defaults. Fewer than two observations is an error.
ActiveFit fit_active_transitions(const std::vector<double>& rates);

struct ProficiencyFit {
    double p01;  // reciprocal of mean attempts to proficiency
    double p10;  // post-proficiency error rate
};

/// Active-row estimate from mastery flags: attempts-to-proficiency set the
/// learning rate, errors after mastery the forgetting rate. Both are
/// clipped into (0.005, 0.99). Errors if no student reached proficiency.
ProficiencyFit fit_active_from_proficiency(const InteractionLog& log,
                                           const std::string& item_id);

struct PassiveRow {
    double p01;
    double p10;
};

/// Difficulty-driven passive row: the forgetting probability grows with
/// normalized difficulty (0.05 base, 0.4 slope, small uniform noise,
/// capped at 0.6), and the passive learning probability is drawn low
/// enough that the effort chain survives the semi-active derivation.
PassiveRow derive_passive_transitions(double difficulty_norm, double sigma, double active_p01,
                                      Xoshiro256StarStar& rng);

struct SemiActiveRow {
    double p01;
    double p11;
};

/// Semi-active row as a similarity proportion of the active row:
/// p01 scales by sigma, retention interpolates between the passive and
/// active retention with the same sigma. Lowers passive_p01 to 0.9x the
/// semi-active learning probability when the two would collide.
SemiActiveRow derive_semiactive(double active_p01, double active_p11, double& passive_p01,
                                double passive_p11, double sigma);

// --- full pipeline ----------------------------------------------------------

struct LogModelOptions {
    double constant_sigma = 0.8;  // used when no similarity data applies
    std::uint64_t seed = 0;
};

/// Builds a StudentModel from an interaction log and item catalog,
/// following the active/passive/semi-active recipes above. Arms index
/// items in catalog order; topics index tags by first appearance.
/// The emitted model always passes validate.
StudentModel build_model_from_logs(const InteractionLog& log, const ItemCatalog& items,
                                   const std::vector<SimilarityEntry>* similarity,
                                   const LogModelOptions& options);

}  // namespace ednet
