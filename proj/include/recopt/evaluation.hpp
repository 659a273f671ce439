#pragma once

// Monte-Carlo estimation of expected discounted returns over shared sampled
// scenarios, plus action-timing benchmarks.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "recopt/policies.hpp"

namespace recopt {

struct ExperimentPlan {
    std::string config;  // id or path, informational once the config is loaded
    std::vector<PolicySpec> policies;
    int scenarios = 16;  // per seed
    std::vector<std::uint64_t> seeds{0};
    int horizon = 0;  // 0: the config's horizon
    int threads = 0;  // 0: hardware concurrency
    std::filesystem::path output;
    bool timing = false;

    void validate() const;
};

struct ReturnEstimate {
    std::string policy;
    double mean = 0.0;
    double standard_error = 0.0;
    std::vector<double> per_seed;      // mean return over the scenarios of each seed
    std::vector<double> per_scenario;  // seed-major
    std::string error;                 // non-empty when the policy failed
};

// Noise seed of scenario j under run seed s.
std::uint64_t scenario_seed(std::uint64_t seed, int scenario);

// Discounted return -sum gamma^t cost_t of one policy on one scenario.
double episode_return(const RecConfig& cfg, Policy& policy, const ExogenousSequence& truth,
                      const ExogenousSequence& base);

std::vector<ReturnEstimate> evaluate(const RecConfig& cfg, const ExperimentPlan& plan);

struct PolicyTiming {
    std::string policy;
    double mean_seconds = 0.0;
    int calls = 0;
};

// Mean wall-clock time of act() on `calls` states along one scenario,
// caches dropped before every call.
std::vector<PolicyTiming> time_policies(const RecConfig& cfg, const std::vector<PolicySpec>& policies, int calls = 32,
                                        std::uint64_t seed = 0);

// One row per (policy, seed).
std::string results_csv(const ExperimentPlan& plan, const std::vector<ReturnEstimate>& results);
// Summary with return-vs-K curves per foresight efficiency.
nlohmann::json results_json(const RecConfig& cfg, const ExperimentPlan& plan,
                            const std::vector<ReturnEstimate>& results);
nlohmann::json timings_json(const std::vector<PolicyTiming>& timings);

// Shortest round-trip text form of a double.
std::string format_number(double v);

}  // namespace recopt
