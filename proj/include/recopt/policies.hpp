#pragma once

// Battery control policies: self-consumption rules and receding-horizon MPC.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "recopt/exogenous.hpp"
#include "recopt/lp.hpp"
#include "recopt/simulator.hpp"

namespace recopt {

enum class PolicyKind { RecRule, SelfRule, Mpc, RlExternal };

struct PolicySpec {
    PolicyKind kind = PolicyKind::RecRule;
    int horizon = 1;            // K, actions planned per solve
    bool full_horizon = false;  // K = T - t (OPT variants)
    double foresight_alpha = 1.0;
    bool include_peaks = true;

    void validate() const;
    // Canonical text form, e.g. "mpc:K=10:alpha=0.85", "opt-retail", "self".
    std::string label() const;
};

// Accepts rec, self, rl, opt, opt-retail, mpc[:K=..][:alpha=..],
// mpc-retail[:K=..][:alpha=..]. Throws ConfigError on bad input.
PolicySpec parse_policy_spec(const std::string& text);

enum class RuleMode { Rec, Self };

// Rule baselines: minimise the absolute net flow of the community (Rec) or of
// the battery owners (Self) over the admissible battery powers.
Action rule_action(const RecConfig& cfg, const SimState& state, const Exogenous& exo, RuleMode mode);

// Receding-horizon program over `forecast` (one entry per planned step,
// forecast[0] being the current step).
struct MpcProgram {
    lp::LinearProgram program;
    // per battery: signed power variable, or charge/discharge pair
    std::vector<int> power;
    std::vector<int> charge;
    std::vector<int> discharge;
    int horizon = 0;
    int batteries = 0;

    // First-step battery powers of a solution.
    Action action_at(const std::vector<double>& values, int k) const;
};

struct MpcOptions {
    bool include_peaks = true;
    // Bill the incomplete trailing billing period, prorated by elapsed time.
    bool prorate_tail = true;
};

MpcProgram build_mpc_program(const RecConfig& cfg, const SimState& state, const ExogenousSequence& forecast,
                             const MpcOptions& opts);

// Stateless single decision; forecast already blended.
Action mpc_action(const RecConfig& cfg, const SimState& state, const ExogenousSequence& forecast,
                  const MpcOptions& opts, lp::Solution* solution = nullptr);

class Policy {
public:
    virtual ~Policy() = default;
    // `truth` is the realised scenario, `base` the historical profiles the
    // forecasts revert to. Returns an admissible action.
    virtual Action act(const SimState& state, const ExogenousSequence& truth, const ExogenousSequence& base) = 0;
    // Drops caches kept between calls (new episode).
    virtual void reset() {}
    const PolicySpec& spec() const { return spec_; }

protected:
    explicit Policy(PolicySpec spec) : spec_(std::move(spec)) {}
    PolicySpec spec_;
};

class RulePolicy final : public Policy {
public:
    RulePolicy(const RecConfig& cfg, PolicySpec spec);
    Action act(const SimState& state, const ExogenousSequence& truth, const ExogenousSequence& base) override;

private:
    const RecConfig& cfg_;
};

class MpcPolicy final : public Policy {
public:
    MpcPolicy(const RecConfig& cfg, PolicySpec spec);
    Action act(const SimState& state, const ExogenousSequence& truth, const ExogenousSequence& base) override;
    void reset() override;

    long solves() const { return solves_; }

private:
    struct Plan {
        int start = 0;
        int end = 0;  // exclusive
        ExogenousSequence forecast;
        std::vector<Action> actions;
        std::vector<SimState> predicted;  // state before each planned step
    };
    bool plan_matches(const SimState& state, const ExogenousSequence& forecast) const;

    const RecConfig& cfg_;
    std::optional<Plan> plan_;
    lp::NamedBasis warm_;
    long solves_ = 0;
};

std::unique_ptr<Policy> make_policy(const RecConfig& cfg, const PolicySpec& spec);

}  // namespace recopt
