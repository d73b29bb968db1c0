#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ednet/model.hpp"
#include "ednet/student_gen.hpp"

using namespace ednet;

namespace {

const std::filesystem::path kTmp = std::filesystem::temp_directory_path() / "ednet_gen_test";

std::filesystem::path write_file(const std::string& name, const std::string& content) {
    std::filesystem::create_directories(kTmp);
    const auto path = kTmp / name;
    std::ofstream out(path);
    out << content;
    return path;
}

// simulate the correctness-rate recursion with observation noise
std::vector<double> planted_rates(double p01, double p11, int steps, double noise,
                                  Xoshiro256StarStar& rng) {
    std::vector<double> rates;
    double a = 0.1;
    rates.push_back(a);
    for (int t = 1; t < steps; ++t) {
        a = p01 * (1.0 - a) + p11 * a + rng.uniform(-noise, noise);
        a = std::min(0.999, std::max(0.001, a));
        rates.push_back(a);
    }
    return rates;
}

}  // namespace

TEST_CASE("synthetic models are valid, connected, and deterministic") {
    SyntheticSpec spec;
    spec.n_arms = 50;
    spec.n_topics = 20;
    spec.seed = 7;
    const auto model = generate_synthetic(spec);
    CHECK(model.n_arms() == 50);
    CHECK(validate(model).ok());
    for (int i = 0; i < 50; ++i) CHECK(!model.network.topics_of(i).empty());

    const auto again = generate_synthetic(spec);
    CHECK(model_to_json(again).dump() == model_to_json(model).dump());

    spec.seed = 8;
    const auto other = generate_synthetic(spec);
    CHECK(model_to_json(other).dump() != model_to_json(model).dump());
}

TEST_CASE("many random synthetic models all validate") {
    SyntheticSpec spec;
    spec.n_arms = 20;
    spec.n_topics = 6;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        spec.seed = seed;
        CHECK(validate(generate_synthetic(spec)).ok());
    }
}

TEST_CASE("zero extra membership gives one topic per arm with balanced groups") {
    SyntheticSpec spec;
    spec.n_arms = 60;
    spec.n_topics = 6;
    spec.extra_membership_prob = 0.0;

    double total_size = 0.0;
    const int generations = 100;
    for (std::uint64_t seed = 0; seed < generations; ++seed) {
        spec.seed = seed;
        const auto model = generate_synthetic(spec);
        for (int i = 0; i < spec.n_arms; ++i)
            CHECK(model.network.topics_of(i).size() == 1);
        total_size += static_cast<double>(model.network.members_of(0).size());
    }
    // group 0's size is Binomial(n_arms, 1/topics) per generation
    const double expected = static_cast<double>(spec.n_arms) / spec.n_topics;
    const double se = std::sqrt(expected * (1.0 - 1.0 / spec.n_topics) / generations);
    CHECK(std::abs(total_size / generations - expected) < 3 * se);
}

TEST_CASE("synthetic spec validation") {
    SyntheticSpec spec;
    spec.n_arms = 0;
    CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
    spec.n_arms = 5;
    spec.n_topics = 0;
    CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
    spec.n_topics = 2;
    spec.extra_membership_prob = 1.0;
    CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
}

TEST_CASE("regression recovers planted coefficients") {
    Xoshiro256StarStar rng(11);
    const auto rates = planted_rates(0.3, 0.8, 500, 0.05, rng);
    const auto fit = fit_active_transitions(rates);
    CHECK(!fit.underdetermined);
    CHECK(std::abs(fit.p01 - 0.3) < 0.05);
    CHECK(std::abs(fit.p11 - 0.8) < 0.05);
}

TEST_CASE("regression error shrinks with more observations") {
    const int counts[3] = {100, 500, 5000};
    double mean_err[3] = {0, 0, 0};
    const int reps = 30;
    for (int rep = 0; rep < reps; ++rep) {
        for (int c = 0; c < 3; ++c) {
            Xoshiro256StarStar rng(1000 + rep * 7 + c);
            const auto rates = planted_rates(0.3, 0.8, counts[c], 0.05, rng);
            const auto fit = fit_active_transitions(rates);
            mean_err[c] += std::abs(fit.p01 - 0.3) + std::abs(fit.p11 - 0.8);
        }
    }
    for (double& e : mean_err) e /= reps;
    CHECK(mean_err[0] > mean_err[1]);
    CHECK(mean_err[1] > mean_err[2]);
}

TEST_CASE("constant rates are flagged underdetermined with the fallback values") {
    const std::vector<double> rates(40, 0.5);
    const auto fit = fit_active_transitions(rates);
    CHECK(fit.underdetermined);
    CHECK(fit.p01 == doctest::Approx(0.5));
    CHECK(fit.p11 == doctest::Approx(0.7));
}

TEST_CASE("clipping engages exactly when the unconstrained fit exceeds the cap") {
    // a noiseless 3-step trajectory pins the fit to its generating
    // coefficients exactly
    auto apply = [](double p01, double p11, double a) { return p01 * (1 - a) + p11 * a; };
    std::vector<double> rates = {0.1, apply(0.2, 1.07, 0.1),
                                 apply(0.2, 1.07, apply(0.2, 1.07, 0.1))};
    const auto clipped_fit = fit_active_transitions(rates);
    CHECK(clipped_fit.clipped);
    CHECK(clipped_fit.p11 == doctest::Approx(0.99));
    CHECK(clipped_fit.p01 == doctest::Approx(0.2).epsilon(1e-6));

    rates = {0.1, apply(0.3, 0.8, 0.1), apply(0.3, 0.8, apply(0.3, 0.8, 0.1))};
    const auto clean_fit = fit_active_transitions(rates);
    CHECK(!clean_fit.clipped);
    CHECK(clean_fit.p11 == doctest::Approx(0.8).epsilon(1e-6));
}

TEST_CASE("too few observations is an error") {
    CHECK_THROWS_AS(fit_active_transitions({0.5}), InsufficientDataError);
    CHECK_THROWS_AS(fit_active_transitions({}), InsufficientDataError);
}

TEST_CASE("proficiency fit on a hand-built log") {
    InteractionLog log;
    // two students, mean attempts (3 + 5)/2 = 4; post-mastery: 10 rows, 1 error
    for (int s = 0; s < 2; ++s) {
        const std::string student = "s" + std::to_string(s);
        const int mastery_step = s == 0 ? 2 : 4;
        for (int t = 0; t <= mastery_step; ++t)
            log.rows.push_back({student, "item", t, t == mastery_step ? 1 : 0,
                                t == mastery_step ? 1 : 0});
        for (int t = mastery_step + 1; t <= mastery_step + 5; ++t)
            log.rows.push_back({student, "item", t, (s == 0 && t == mastery_step + 1) ? 0 : 1, 1});
    }
    const auto fit = fit_active_from_proficiency(log, "item");
    CHECK(fit.p01 == doctest::Approx(0.25));
    CHECK(fit.p10 == doctest::Approx(0.1));
}

TEST_CASE("proficiency fit boundary: instant mastery, no errors") {
    InteractionLog log;
    log.rows.push_back({"s0", "item", 0, 1, 1});
    log.rows.push_back({"s0", "item", 1, 1, 1});
    const auto fit = fit_active_from_proficiency(log, "item");
    CHECK(fit.p01 == doctest::Approx(0.99));
    CHECK(fit.p10 == doctest::Approx(0.005));
}

TEST_CASE("proficiency fit without any mastery is an error") {
    InteractionLog empty;
    CHECK_THROWS_AS(fit_active_from_proficiency(empty, "item"), InsufficientDataError);
    InteractionLog no_mastery;
    no_mastery.rows.push_back({"s0", "item", 0, 0, 0});
    CHECK_THROWS_AS(fit_active_from_proficiency(no_mastery, "item"), InsufficientDataError);
}

TEST_CASE("passive row bounds follow the difficulty formula") {
    Xoshiro256StarStar rng(21);
    for (int rep = 0; rep < 1000; ++rep) {
        const auto easy = derive_passive_transitions(0.0, 0.8, 0.5, rng);
        CHECK(easy.p10 >= 0.03);
        CHECK(easy.p10 <= 0.07);
        const auto hard = derive_passive_transitions(1.0, 0.8, 0.5, rng);
        CHECK(hard.p10 >= 0.43);
        CHECK(hard.p10 <= 0.47);
        CHECK(easy.p01 < 0.9 * 0.8 * 0.5);
    }
    CHECK_THROWS_AS(derive_passive_transitions(1.5, 0.8, 0.5, rng), std::invalid_argument);
}

TEST_CASE("mean forgetting rises with difficulty") {
    Xoshiro256StarStar rng(22);
    double low = 0.0, high = 0.0;
    const int n = 1000;
    for (int rep = 0; rep < n; ++rep) {
        low += derive_passive_transitions(0.1, 0.8, 0.5, rng).p10;
        high += derive_passive_transitions(0.9, 0.8, 0.5, rng).p10;
    }
    CHECK(high / n > low / n);
}

TEST_CASE("semi-active derivation follows the similarity proportion") {
    double passive_p01 = 0.01;
    const auto semi = derive_semiactive(0.5, 0.9, passive_p01, 0.6, 0.8);
    CHECK(semi.p01 == doctest::Approx(0.4));
    CHECK(semi.p11 == doctest::Approx(0.6 + 0.8 * 0.3));

    // near-unit similarity approaches the active row
    double p = 0.01;
    const auto close = derive_semiactive(0.5, 0.9, p, 0.6, 0.999);
    CHECK(close.p01 == doctest::Approx(0.5).epsilon(0.01));
    CHECK(close.p11 == doctest::Approx(0.9).epsilon(0.01));

    // collision clamps the passive learning probability down
    double colliding = 0.45;
    const auto clamped = derive_semiactive(0.5, 0.9, colliding, 0.6, 0.8);
    CHECK(colliding == doctest::Approx(0.9 * clamped.p01));

    double ok = 0.1;
    CHECK_THROWS_AS(derive_semiactive(0.5, 0.9, ok, 0.6, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(derive_semiactive(0.5, 0.9, ok, 0.6, 0.0), std::invalid_argument);
}

TEST_CASE("random fit inputs always assemble into a valid tensor") {
    Xoshiro256StarStar rng(31);
    for (int rep = 0; rep < 10000; ++rep) {
        const double active_p11 = rng.uniform(0.02, 0.99);
        const double active_p01 = rng.uniform(0.005, 0.995) * active_p11 * 0.999;
        const double sigma = rng.uniform(0.05, 0.995);
        auto passive = derive_passive_transitions(rng.uniform01(), sigma, active_p01, rng);
        double passive_p11 = 1.0 - passive.p10;
        if (passive_p11 >= active_p11) passive_p11 = 0.9 * active_p11;
        const auto semi = derive_semiactive(active_p01, active_p11, passive.p01, passive_p11, sigma);
        if (passive.p01 >= passive_p11) passive.p01 = 0.9 * std::min(passive_p11, semi.p01);
        const auto tensor = TransitionTensor::from_up_probs(
            {passive.p01, semi.p01, active_p01}, {passive_p11, semi.p11, active_p11});
        GroupNetwork net(1, 1, {{0}});
        StudentModel model{net, {tensor}};
        const auto report = validate(model);
        if (!report.ok()) {
            CAPTURE(rep);
            CAPTURE(report.to_string());
            REQUIRE(report.ok());
        }
    }
}

TEST_CASE("csv loaders parse the documented schemas") {
    const auto log_path = write_file("log.csv",
                                     "student_id,item_id,step,correct,proficiency\n"
                                     "s1,i1,0,1,\n"
                                     "s1,i1,1,0,0\n"
                                     "s2,i2,0,1,1\n");
    const auto log = load_interaction_log(log_path);
    REQUIRE(log.rows.size() == 3);
    CHECK(log.rows[0].proficiency == -1);
    CHECK(log.rows[1].proficiency == 0);
    CHECK(log.rows[2].proficiency == 1);
    CHECK(log.has_proficiency());

    const auto items_path = write_file("items.csv",
                                       "item_id,topics,difficulty\n"
                                       "i1,algebra;geometry,0.4\n"
                                       "i2,algebra,0.9\n");
    const auto catalog = load_item_catalog(items_path);
    REQUIRE(catalog.items.size() == 2);
    CHECK(catalog.items[0].topics == std::vector<std::string>{"algebra", "geometry"});
    CHECK(catalog.items[1].difficulty == doctest::Approx(0.9));

    const auto sim_path = write_file("sim.csv",
                                     "item_a,item_b,score\n"
                                     "i1,i2,7\n");
    const auto sim = load_similarity(sim_path);
    REQUIRE(sim.size() == 1);
    CHECK(sim[0].score == doctest::Approx(7.0));

    CHECK_THROWS(load_interaction_log(write_file("bad.csv", "nope\n")));
    CHECK_THROWS_AS(load_interaction_log(kTmp / "missing.csv"), std::ios_base::failure);
    CHECK_THROWS(load_interaction_log(
        write_file("bad2.csv", "student_id,item_id,step,correct,proficiency\ns1,i1,0,2,\n")));
}

TEST_CASE("correctness_by_step averages within steps in step order") {
    InteractionLog log;
    log.rows.push_back({"s1", "i1", 1, 1, -1});
    log.rows.push_back({"s2", "i1", 1, 0, -1});
    log.rows.push_back({"s1", "i1", 0, 0, -1});
    log.rows.push_back({"s1", "i2", 0, 1, -1});
    const auto rates = correctness_by_step(log, "i1");
    REQUIRE(rates.size() == 2);
    CHECK(rates[0] == doctest::Approx(0.0));
    CHECK(rates[1] == doctest::Approx(0.5));
}

TEST_CASE("log-derived models validate and are deterministic") {
    // synthetic log with planted dynamics, OLI-style (no proficiency)
    Xoshiro256StarStar rng(77);
    std::string log_text = "student_id,item_id,step,correct,proficiency\n";
    const int n_items = 6, n_steps = 60, n_students = 30;
    for (int item = 0; item < n_items; ++item) {
        const double p01 = 0.15 + 0.1 * item / n_items;
        const double p11 = 0.7 + 0.04 * item;
        double a = 0.1;
        for (int t = 0; t < n_steps; ++t) {
            for (int s = 0; s < n_students; ++s) {
                const int correct = rng.uniform01() < a ? 1 : 0;
                log_text += "s" + std::to_string(s) + ",i" + std::to_string(item) + "," +
                            std::to_string(t) + "," + std::to_string(correct) + ",\n";
            }
            a = p01 * (1 - a) + p11 * a;
        }
    }
    std::string items_text = "item_id,topics,difficulty\n";
    for (int item = 0; item < n_items; ++item)
        items_text += "i" + std::to_string(item) + ",t" + std::to_string(item % 2) + ";shared," +
                      std::to_string(0.2 + 0.1 * item) + "\n";

    const auto log = load_interaction_log(write_file("gen_log.csv", log_text));
    const auto items = load_item_catalog(write_file("gen_items.csv", items_text));

    LogModelOptions options;
    options.seed = 5;
    const auto model = build_model_from_logs(log, items, nullptr, options);
    CHECK(validate(model).ok());
    CHECK(model.n_arms() == n_items);
    CHECK(model.network.n_topics() == 3);

    const auto again = build_model_from_logs(log, items, nullptr, options);
    CHECK(model_to_json(again).dump() == model_to_json(model).dump());

    // similarity-driven sigmas change the semi-active rows
    std::string sim_text = "item_a,item_b,score\n";
    for (int a = 0; a < n_items; ++a)
        for (int b = a + 1; b < n_items; ++b)
            sim_text += "i" + std::to_string(a) + ",i" + std::to_string(b) + ",3\n";
    const auto sim = load_similarity(write_file("gen_sim.csv", sim_text));
    const auto model_sim = build_model_from_logs(log, items, &sim, options);
    CHECK(validate(model_sim).ok());
    CHECK(model_to_json(model_sim).dump() != model_to_json(model).dump());
}

TEST_CASE("junyi-style proficiency logs also produce valid models") {
    Xoshiro256StarStar rng(88);
    std::string log_text = "student_id,item_id,step,correct,proficiency\n";
    const int n_items = 5;
    for (int item = 0; item < n_items; ++item) {
        for (int s = 0; s < 20; ++s) {
            const int mastery = 1 + rng.uniform_int(6);
            for (int t = 0; t < mastery + 5; ++t) {
                const int prof = t >= mastery ? 1 : 0;
                const int correct = t >= mastery ? (rng.uniform01() < 0.9 ? 1 : 0)
                                                 : (rng.uniform01() < 0.4 ? 1 : 0);
                log_text += "s" + std::to_string(s) + ",i" + std::to_string(item) + "," +
                            std::to_string(t) + "," + std::to_string(correct) + "," +
                            std::to_string(prof) + "\n";
            }
        }
    }
    std::string items_text = "item_id,topics,difficulty\n";
    for (int item = 0; item < n_items; ++item)
        items_text += "i" + std::to_string(item) + ",k" + std::to_string(item % 2) + "," +
                      std::to_string(1.0 + item) + "\n";

    const auto log = load_interaction_log(write_file("junyi_log.csv", log_text));
    const auto items = load_item_catalog(write_file("junyi_items.csv", items_text));
    LogModelOptions options;
    const auto model = build_model_from_logs(log, items, nullptr, options);
    CHECK(validate(model).ok());
}
