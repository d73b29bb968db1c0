#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <unistd.h>

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ednet/agents.hpp"
#include "ednet/env.hpp"
#include "ednet/harness.hpp"
#include "ednet/model.hpp"
#include "ednet/qtable.hpp"
#include "ednet/student_gen.hpp"
#include "ednet/whittle.hpp"

namespace py = pybind11;
using namespace ednet;

namespace {

using PyTensor = std::array<std::array<std::array<double, 2>, 2>, 3>;

QTable qtable_from_nested(const std::vector<std::vector<std::vector<double>>>& values) {
    const int n = static_cast<int>(values.size());
    if (n == 0) throw std::invalid_argument("q must have one entry per arm");
    const int n_actions = static_cast<int>(values[0][0].size());
    QTable q(n, n_actions);
    for (int i = 0; i < n; ++i)
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < n_actions; ++a) q.set(i, s, a, values.at(i).at(s).at(a));
    return q;
}

JointState state_from_list(const std::vector<int>& values) {
    JointState s(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] != 0 && values[i] != 1)
            throw std::invalid_argument("state entries must be 0 or 1");
        s[i] = static_cast<std::uint8_t>(values[i]);
    }
    return s;
}

py::dict summary_to_dict(const IBReport& report) {
    py::dict out;
    py::list rows;
    for (const auto& row : report.rows) {
        py::dict r;
        r["policy"] = row.policy;
        r["mean_ib"] = row.mean_ib;
        r["se_ib"] = row.se_ib;
        r["mean_r"] = row.mean_reward;
        r["se_r"] = row.se_reward;
        r["excluded_seeds"] = row.excluded_seeds;
        rows.append(r);
    }
    out["rows"] = rows;
    out["n_seeds"] = report.n_seeds;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Networked restless-bandit student simulator and teacher policies";

    py::class_<StudentModel>(m, "StudentModel")
        .def_property_readonly("n_arms", [](const StudentModel& model) { return model.n_arms(); })
        .def_property_readonly(
            "n_topics", [](const StudentModel& model) { return model.network.n_topics(); })
        .def_property_readonly(
            "membership", [](const StudentModel& model) { return model.network.membership(); })
        .def("tensor",
             [](const StudentModel& model, int arm) -> PyTensor {
                 if (arm < 0 || arm >= model.n_arms())
                     throw std::out_of_range("arm index out of range");
                 return model.tensors[arm].p;
             },
             py::arg("arm"), "Transition probabilities indexed [action][state][next_state]")
        .def("neighbors",
             [](const StudentModel& model, int arm) { return neighborhood(model.network, arm); },
             py::arg("arm"))
        .def("to_json",
             [](const StudentModel& model) { return model_to_json(model).dump(2); })
        .def("save", [](const StudentModel& model, const std::string& path) {
            save_model(model, path);
        });

    m.def(
        "generate_synthetic",
        [](int n_arms, int n_topics, double extra_membership_prob, std::uint64_t seed) {
            SyntheticSpec spec;
            spec.n_arms = n_arms;
            spec.n_topics = n_topics;
            spec.extra_membership_prob = extra_membership_prob;
            spec.seed = seed;
            return generate_synthetic(spec);
        },
        py::arg("n_arms") = 50, py::arg("n_topics") = 20,
        py::arg("extra_membership_prob") = 0.1, py::arg("seed") = 0,
        "Random student model satisfying the transition constraints");

    m.def("load_model", [](const std::string& path) { return load_model(path); },
          py::arg("path"));

    m.def(
        "validate",
        [](const StudentModel& model) {
            std::vector<std::string> out;
            for (const auto& violation : validate(model).violations)
                out.push_back(violation.to_string());
            return out;
        },
        py::arg("model"), "List of violated constraints; empty means valid");

    m.def(
        "expand_action",
        [](const StudentModel& model, const std::vector<int>& pulled) {
            const auto action = expand_action(model.network, pulled);
            return std::vector<int>(action.begin(), action.end());
        },
        py::arg("model"), py::arg("pulled"),
        "Joint action for a pull set: 2=pulled, 1=group neighbor, 0=passive");

    m.def(
        "step",
        [](const StudentModel& model, const std::vector<int>& state,
           const std::vector<int>& action, std::uint64_t seed) {
            JointAction a(action.size());
            for (std::size_t i = 0; i < action.size(); ++i)
                a[i] = static_cast<std::uint8_t>(action[i]);
            Xoshiro256StarStar rng(seed);
            const auto out = step(model, state_from_list(state), a, rng);
            return py::make_tuple(std::vector<int>(out.next_state.begin(), out.next_state.end()),
                                  out.reward);
        },
        py::arg("model"), py::arg("state"), py::arg("action"), py::arg("seed"),
        "One sampled transition; returns (next_state, reward)");

    m.def("epsilon", &epsilon_schedule, py::arg("n_arms"), py::arg("global_step"),
          "Exploration probability N/(N+t)");

    m.def(
        "whittle_estimate",
        [](const std::vector<std::vector<std::vector<double>>>& q, const std::vector<int>& state,
           const StudentModel& model, int arm) {
            return whittle_estimate(qtable_from_nested(q), state_from_list(state), model.network,
                                    arm);
        },
        py::arg("q"), py::arg("state"), py::arg("model"), py::arg("arm"),
        "Index estimate for pulling `arm`, q indexed [arm][state][action]");

    m.def(
        "greedy_select_k",
        [](const std::vector<std::vector<std::vector<double>>>& q, const std::vector<int>& state,
           const StudentModel& model, int k) {
            return greedy_select_k(qtable_from_nested(q), state_from_list(state), model.network,
                                   k);
        },
        py::arg("q"), py::arg("state"), py::arg("model"), py::arg("k"));

    m.def(
        "threshold_whittle_index",
        [](const PyTensor& p, int state, double gamma) {
            TransitionTensor t;
            t.p = p;
            return threshold_whittle_index(t, state, gamma);
        },
        py::arg("tensor"), py::arg("state"), py::arg("gamma") = 0.95,
        "Whittle index from known passive/active rows");

    m.def(
        "run_experiment",
        [](const StudentModel* model, py::object synthetic, std::vector<std::string> policies,
           std::vector<std::uint64_t> seeds, int episodes, int horizon, int k, double alpha,
           double gamma, int buffer_capacity, int batch_size, int jobs) {
            ExperimentConfig config;
            std::filesystem::path scratch_model;
            if (model != nullptr) {
                static std::atomic<std::uint64_t> counter{0};
                const auto tmp_dir =
                    std::filesystem::temp_directory_path() / "ednetrmab_py_models";
                std::filesystem::create_directories(tmp_dir);
                scratch_model = tmp_dir / ("model_" + std::to_string(counter.fetch_add(1)) +
                                           "_" + std::to_string(::getpid()) + ".json");
                save_model(*model, scratch_model);
                config.model_file = scratch_model.string();
            } else if (!synthetic.is_none()) {
                const auto d = synthetic.cast<py::dict>();
                SyntheticSpec spec;
                if (d.contains("n_arms")) spec.n_arms = d["n_arms"].cast<int>();
                if (d.contains("n_topics")) spec.n_topics = d["n_topics"].cast<int>();
                if (d.contains("extra_membership_prob"))
                    spec.extra_membership_prob = d["extra_membership_prob"].cast<double>();
                if (d.contains("seed")) spec.seed = d["seed"].cast<std::uint64_t>();
                config.synthetic = spec;
            } else {
                throw std::invalid_argument("pass a model or a synthetic spec");
            }
            config.policies = std::move(policies);
            config.seeds = std::move(seeds);
            config.episodes = episodes;
            config.horizon = horizon;
            config.k = k;
            config.learner.alpha = alpha;
            config.learner.gamma = gamma;
            config.learner.buffer_capacity = buffer_capacity;
            config.learner.batch_size = batch_size;
            config.jobs = jobs;

            ExperimentResult result;
            try {
                result = run_experiment(config);
            } catch (...) {
                if (!scratch_model.empty()) std::filesystem::remove(scratch_model);
                throw;
            }
            if (!scratch_model.empty()) std::filesystem::remove(scratch_model);
            py::list records;
            for (const auto& r : result.records)
                records.append(py::make_tuple(r.seed, r.policy, r.episode, r.reward));
            py::dict out;
            out["records"] = records;
            const bool ib_possible =
                std::count(config.policies.begin(), config.policies.end(), "random") &&
                std::count(config.policies.begin(), config.policies.end(), "eduqate");
            if (ib_possible) out["summary"] = summary_to_dict(intervention_benefit(result.records));
            return out;
        },
        py::arg("model") = nullptr, py::arg("synthetic") = py::none(),
        py::arg("policies") = std::vector<std::string>{"random", "eduqate"},
        py::arg("seeds") = std::vector<std::uint64_t>{0, 1, 2}, py::arg("episodes") = 100,
        py::arg("horizon") = 50, py::arg("k") = 1, py::arg("alpha") = 0.1,
        py::arg("gamma") = 0.95, py::arg("buffer_capacity") = 10000, py::arg("batch_size") = 64,
        py::arg("jobs") = 1,
        "Run (policy, seed) trials; returns records and, when possible, the IB summary");

    m.def(
        "intervention_benefit",
        [](const std::vector<std::tuple<std::uint64_t, std::string, int, double>>& records) {
            std::vector<TrialRecord> parsed;
            parsed.reserve(records.size());
            for (const auto& [seed, policy, episode, reward] : records)
                parsed.push_back({seed, policy, episode, reward, 0.0});
            return summary_to_dict(intervention_benefit(parsed));
        },
        py::arg("records"),
        "Summary from (seed, policy, episode, reward) tuples; needs random and eduqate");

    m.attr("__version__") = kVersion;
    m.attr("RNG_FAMILY") = kRngFamily;
}
