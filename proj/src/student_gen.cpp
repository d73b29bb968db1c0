#include "ednet/student_gen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace ednet {

namespace {

double clamp(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

}  // namespace

StudentModel generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_arms < 1) throw std::invalid_argument("generate_synthetic: n_arms must be >= 1");
    if (spec.n_topics < 1)
        throw std::invalid_argument("generate_synthetic: n_topics must be >= 1");
    if (spec.extra_membership_prob < 0.0 || spec.extra_membership_prob >= 1.0)
        throw std::invalid_argument("generate_synthetic: extra_membership_prob must be in [0,1)");

    Xoshiro256StarStar rng(spec.seed);

    std::vector<std::vector<int>> membership(spec.n_arms);
    for (int i = 0; i < spec.n_arms; ++i) {
        const int primary = rng.uniform_int(spec.n_topics);
        membership[i].push_back(primary);
        for (int t = 0; t < spec.n_topics; ++t) {
            if (t == primary) continue;
            if (rng.uniform01() < spec.extra_membership_prob) membership[i].push_back(t);
        }
    }
    GroupNetwork network(spec.n_arms, spec.n_topics, std::move(membership));

    std::vector<TransitionTensor> tensors;
    tensors.reserve(spec.n_arms);
    for (int i = 0; i < spec.n_arms; ++i) {
        constexpr int kMaxAttempts = 10000;
        bool accepted = false;
        for (int attempt = 0; attempt < kMaxAttempts && !accepted; ++attempt) {
            std::array<double, 3> from0 = {rng.uniform01(), rng.uniform01(), rng.uniform01()};
            std::array<double, 3> from1 = {rng.uniform01(), rng.uniform01(), rng.uniform01()};
            std::sort(from0.begin(), from0.end());
            std::sort(from1.begin(), from1.end());
            bool ok = true;
            for (int a = 0; a < 3 && ok; ++a) {
                if (!(from0[a] < from1[a])) ok = false;                    // retention dominance
                if (!(from0[a] > 0.0 && from1[a] < 1.0)) ok = false;       // strict interior
                if (a > 0 && !(from0[a - 1] < from0[a])) ok = false;       // strict chains
                if (a > 0 && !(from1[a - 1] < from1[a])) ok = false;
            }
            if (!ok) continue;
            tensors.push_back(TransitionTensor::from_up_probs(from0, from1));
            accepted = true;
        }
        if (!accepted)
            throw std::runtime_error("generate_synthetic: rejection sampling exhausted for arm " +
                                     std::to_string(i));
    }
    return StudentModel{std::move(network), std::move(tensors)};
}

bool InteractionLog::has_proficiency() const {
    for (const auto& row : rows)
        if (row.proficiency >= 0) return true;
    return false;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == sep) {
            fields.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(current);
    return fields;
}

std::string strip(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

void expect_header(const std::string& line, const std::string& expected,
                   const std::filesystem::path& path) {
    if (strip(line) != expected)
        throw std::invalid_argument("unexpected header in " + path.string() + ": got '" +
                                    strip(line) + "', want '" + expected + "'");
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open: " + path.string());
    return in;
}

int parse_int(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string("bad ") + what + " value: '" + s + "'");
    }
}

double parse_double(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string("bad ") + what + " value: '" + s + "'");
    }
}

}  // namespace

InteractionLog load_interaction_log(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty log file: " + path.string());
    expect_header(line, "student_id,item_id,step,correct,proficiency", path);
    InteractionLog log;
    while (std::getline(in, line)) {
        if (strip(line).empty()) continue;
        auto fields = split(strip(line), ',');
        if (fields.size() != 5)
            throw std::invalid_argument("log row needs 5 fields: '" + line + "'");
        LogRow row;
        row.student_id = fields[0];
        row.item_id = fields[1];
        row.step = parse_int(fields[2], "step");
        row.correct = parse_int(fields[3], "correct");
        if (row.correct != 0 && row.correct != 1)
            throw std::invalid_argument("correct must be 0 or 1: '" + line + "'");
        row.proficiency = fields[4].empty() ? -1 : parse_int(fields[4], "proficiency");
        if (row.proficiency > 1)
            throw std::invalid_argument("proficiency must be blank, 0 or 1: '" + line + "'");
        log.rows.push_back(std::move(row));
    }
    return log;
}

ItemCatalog load_item_catalog(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("empty items file: " + path.string());
    expect_header(line, "item_id,topics,difficulty", path);
    ItemCatalog catalog;
    while (std::getline(in, line)) {
        if (strip(line).empty()) continue;
        auto fields = split(strip(line), ',');
        if (fields.size() != 3)
            throw std::invalid_argument("item row needs 3 fields: '" + line + "'");
        ItemInfo info;
        info.item_id = fields[0];
        for (const auto& tag : split(fields[1], ';')) {
            if (!tag.empty()) info.topics.push_back(tag);
        }
        if (info.topics.empty())
            throw std::invalid_argument("item '" + info.item_id + "' has no topics");
        info.difficulty = parse_double(fields[2], "difficulty");
        catalog.items.push_back(std::move(info));
    }
    if (catalog.items.empty()) throw std::invalid_argument("items file has no rows");
    return catalog;
}

std::vector<SimilarityEntry> load_similarity(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("empty similarity file: " + path.string());
    expect_header(line, "item_a,item_b,score", path);
    std::vector<SimilarityEntry> entries;
    while (std::getline(in, line)) {
        if (strip(line).empty()) continue;
        auto fields = split(strip(line), ',');
        if (fields.size() != 3)
            throw std::invalid_argument("similarity row needs 3 fields: '" + line + "'");
        entries.push_back({fields[0], fields[1], parse_double(fields[2], "score")});
    }
    return entries;
}

std::vector<double> correctness_by_step(const InteractionLog& log, const std::string& item_id) {
    std::map<int, std::pair<int, int>> by_step;  // step -> (correct, total)
    for (const auto& row : log.rows) {
        if (row.item_id != item_id) continue;
        auto& [correct, total] = by_step[row.step];
        correct += row.correct;
        total += 1;
    }
    std::vector<double> rates;
    rates.reserve(by_step.size());
    for (const auto& [step, counts] : by_step)
        rates.push_back(static_cast<double>(counts.first) / counts.second);
    return rates;
}

ActiveFit fit_active_transitions(const std::vector<double>& rates) {
    if (rates.size() < 2)
        throw InsufficientDataError("fit_active_transitions: need at least 2 observations, got " +
                                    std::to_string(rates.size()));
    double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
    double mean = 0;
    for (std::size_t t = 0; t + 1 < rates.size(); ++t) {
        const double x1 = 1.0 - rates[t];
        const double x2 = rates[t];
        const double y = rates[t + 1];
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        b1 += x1 * y;
        b2 += x2 * y;
    }
    for (double r : rates) mean += r;
    mean /= static_cast<double>(rates.size());

    ActiveFit fit;
    const double det = s11 * s22 - s12 * s12;
    if (std::abs(det) <= 1e-9 * (s11 * s22 + 1e-30)) {
        // constant rates: any coefficients on the fixed-point line fit equally well
        fit.underdetermined = true;
        fit.p01 = clamp(mean, 0.005, 0.99);
        fit.p11 = clamp(mean + 0.2, 0.005, 0.99);
        return fit;
    }
    double p01 = (b1 * s22 - b2 * s12) / det;
    double p11 = (s11 * b2 - s12 * b1) / det;
    if (p01 > 0.99 || p11 > 0.99) fit.clipped = true;
    fit.p01 = clamp(p01, 0.005, 0.99);
    fit.p11 = clamp(p11, 0.005, 0.99);
    return fit;
}

ProficiencyFit fit_active_from_proficiency(const InteractionLog& log,
                                           const std::string& item_id) {
    // per student: rows for this item in step order
    std::map<std::string, std::vector<const LogRow*>> by_student;
    for (const auto& row : log.rows)
        if (row.item_id == item_id) by_student[row.student_id].push_back(&row);

    long total_attempts = 0;
    int n_reached = 0;
    long post_errors = 0, post_total = 0;
    for (auto& [student, rows] : by_student) {
        std::stable_sort(rows.begin(), rows.end(),
                         [](const LogRow* a, const LogRow* b) { return a->step < b->step; });
        int mastery_at = -1;
        for (std::size_t idx = 0; idx < rows.size(); ++idx) {
            if (rows[idx]->proficiency == 1) {
                mastery_at = static_cast<int>(idx);
                break;
            }
        }
        if (mastery_at < 0) continue;
        ++n_reached;
        total_attempts += mastery_at + 1;
        for (std::size_t idx = mastery_at + 1; idx < rows.size(); ++idx) {
            post_total += 1;
            post_errors += rows[idx]->correct == 0 ? 1 : 0;
        }
    }
    if (n_reached == 0)
        throw InsufficientDataError("fit_active_from_proficiency: no student reached proficiency"
                                    " for item '" + item_id + "'");
    const double mean_attempts = static_cast<double>(total_attempts) / n_reached;
    const double p01 = 1.0 / mean_attempts;
    const double p10 = post_total > 0 ? static_cast<double>(post_errors) / post_total : 0.0;
    return {clamp(p01, 0.005, 0.99), clamp(p10, 0.005, 0.99)};
}

PassiveRow derive_passive_transitions(double difficulty_norm, double sigma, double active_p01,
                                      Xoshiro256StarStar& rng) {
    if (!(difficulty_norm >= 0.0 && difficulty_norm <= 1.0))
        throw std::invalid_argument("derive_passive_transitions: difficulty must be in [0,1]");
    const double noise = rng.uniform(-0.02, 0.02);
    const double p10 = clamp(0.05 + 0.4 * difficulty_norm + noise, 0.01, 0.6);
    const double hi = 0.9 * sigma * active_p01;
    const double lo = std::min(0.01, 0.5 * hi);
    const double p01 = rng.uniform(lo, hi);
    return {p01, p10};
}

SemiActiveRow derive_semiactive(double active_p01, double active_p11, double& passive_p01,
                                double passive_p11, double sigma) {
    if (!(sigma > 0.0 && sigma < 1.0))
        throw std::invalid_argument("derive_semiactive: sigma must be in (0,1)");
    SemiActiveRow semi;
    semi.p01 = sigma * active_p01;
    semi.p11 = passive_p11 + sigma * (active_p11 - passive_p11);
    if (passive_p01 >= semi.p01) passive_p01 = 0.9 * semi.p01;
    return semi;
}

namespace {

// per-arm similarity proportion: mean of the group means of the arm's groups
std::vector<double> arm_sigmas(const GroupNetwork& network,
                               const std::vector<std::string>& item_ids,
                               const std::vector<SimilarityEntry>* similarity,
                               double constant_sigma) {
    const int n = network.n_arms();
    std::vector<double> sigmas(n, constant_sigma);
    if (similarity == nullptr || similarity->empty()) return sigmas;

    std::map<std::pair<std::string, std::string>, double> normalized;
    for (const auto& entry : *similarity) {
        const double value = clamp((entry.score - 1.0) / 8.0, 0.0, 1.0);
        auto key = entry.item_a < entry.item_b ? std::make_pair(entry.item_a, entry.item_b)
                                               : std::make_pair(entry.item_b, entry.item_a);
        normalized[key] = value;
    }
    auto pair_score = [&](int a, int b) -> std::optional<double> {
        auto key = item_ids[a] < item_ids[b] ? std::make_pair(item_ids[a], item_ids[b])
                                             : std::make_pair(item_ids[b], item_ids[a]);
        auto it = normalized.find(key);
        if (it == normalized.end()) return std::nullopt;
        return it->second;
    };

    std::vector<double> group_sigma(network.n_topics(), constant_sigma);
    for (int t = 0; t < network.n_topics(); ++t) {
        const auto& members = network.members_of(t);
        double sum = 0.0;
        int count = 0;
        for (std::size_t a = 0; a < members.size(); ++a)
            for (std::size_t b = a + 1; b < members.size(); ++b)
                if (auto score = pair_score(members[a], members[b])) {
                    sum += *score;
                    ++count;
                }
        if (count > 0) group_sigma[t] = sum / count;
    }
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int t : network.topics_of(i)) sum += group_sigma[t];
        sigmas[i] = sum / static_cast<double>(network.topics_of(i).size());
    }
    for (double& s : sigmas) s = clamp(s, 0.05, 0.995);
    return sigmas;
}

}  // namespace

StudentModel build_model_from_logs(const InteractionLog& log, const ItemCatalog& items,
                                   const std::vector<SimilarityEntry>* similarity,
                                   const LogModelOptions& options) {
    const int n = static_cast<int>(items.items.size());

    // topics by first appearance in the catalog
    std::map<std::string, int> topic_index;
    std::vector<std::vector<int>> membership(n);
    std::vector<std::string> item_ids(n);
    int next_topic = 0;
    for (int i = 0; i < n; ++i) {
        item_ids[i] = items.items[i].item_id;
        for (const auto& tag : items.items[i].topics) {
            auto [it, inserted] = topic_index.try_emplace(tag, next_topic);
            if (inserted) ++next_topic;
            membership[i].push_back(it->second);
        }
    }
    GroupNetwork network(n, next_topic, std::move(membership));

    // active rows
    const bool use_proficiency = log.has_proficiency();
    std::vector<double> active_p01(n), active_p11(n);
    for (int i = 0; i < n; ++i) {
        if (use_proficiency) {
            const auto fit = fit_active_from_proficiency(log, item_ids[i]);
            active_p01[i] = fit.p01;
            active_p11[i] = 1.0 - fit.p10;
        } else {
            const auto rates = correctness_by_step(log, item_ids[i]);
            const auto fit = fit_active_transitions(rates);
            active_p01[i] = fit.p01;
            active_p11[i] = fit.p11;
        }
        if (active_p01[i] >= active_p11[i]) active_p01[i] = 0.9 * active_p11[i];
    }

    // difficulty normalization
    double d_min = items.items[0].difficulty, d_max = d_min;
    for (const auto& item : items.items) {
        d_min = std::min(d_min, item.difficulty);
        d_max = std::max(d_max, item.difficulty);
    }
    auto difficulty_norm = [&](double d) {
        return d_max > d_min ? (d - d_min) / (d_max - d_min) : 0.5;
    };

    const auto sigmas = arm_sigmas(network, item_ids, similarity, options.constant_sigma);

    Xoshiro256StarStar rng(mix_seed(options.seed, 0x10C5));
    std::vector<TransitionTensor> tensors;
    tensors.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double sigma = sigmas[i];
        auto passive = derive_passive_transitions(difficulty_norm(items.items[i].difficulty),
                                                  sigma, active_p01[i], rng);
        double passive_p11 = 1.0 - passive.p10;
        // passive retention must sit strictly below active retention for the
        // interpolation to preserve the ordering chains
        if (passive_p11 >= active_p11[i]) passive_p11 = 0.9 * active_p11[i];
        const auto semi =
            derive_semiactive(active_p01[i], active_p11[i], passive.p01, passive_p11, sigma);
        if (passive.p01 >= passive_p11) passive.p01 = 0.9 * std::min(passive_p11, semi.p01);
        tensors.push_back(TransitionTensor::from_up_probs(
            {passive.p01, semi.p01, active_p01[i]}, {passive_p11, semi.p11, active_p11[i]}));
    }

    StudentModel model{std::move(network), std::move(tensors)};
    const auto report = validate(model);
    if (!report.ok())
        throw std::logic_error("build_model_from_logs produced an invalid model:\n" +
                               report.to_string());
    return model;
}

}  // namespace ednet
