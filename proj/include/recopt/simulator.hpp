#pragma once

// Decision process of an REC: counters, battery dynamics, meter readings and
// the global-REC-bill cost signal.

#include <vector>

#include "recopt/domain.hpp"

namespace recopt {

struct SimState {
    int step_in_market = 0;     // steps elapsed in the current market period
    int market_in_billing = 0;  // market periods elapsed in the billing period
    std::vector<double> soc;    // kWh, one entry per battery
    MeterMatrix meters;         // members x market periods of the billing period
    int t = 0;
};

// Non-controllable net flows of one step, kW per member.
struct Exogenous {
    std::vector<double> consumption;
    std::vector<double> production;
};

// Signed battery powers in kW, one per battery; positive charges.
struct Action {
    std::vector<double> battery_power;
};

struct CostMode {
    bool dense = false;
    bool retail = false;
};

struct Counters {
    int m = 0;
    int b = 0;
    bool operator==(const Counters&) const = default;
};

// Counter automaton of the time discretisation.
Counters next_counters(const TimeGrid& g, Counters c);
// Steps elapsed in the billing period for counters c.
int elapsed_steps(const TimeGrid& g, Counters c);
bool is_market_end(const TimeGrid& g, Counters c);
bool is_billing_end(const TimeGrid& g, Counters c);
// 0-based market period receiving the flows of a transition leaving c; the
// flag tells whether the meters are reset first.
int flow_period(const TimeGrid& g, Counters c, bool& resets);

inline Counters counters_of(const SimState& s) { return {s.step_in_market, s.market_in_billing}; }

struct StepResult {
    SimState next;
    double cost = 0.0;
    std::vector<double> net_consumption;  // l-, kWh per member
    std::vector<double> net_production;   // l+, kWh per member
};

SimState initial_state(const RecConfig& cfg);

// Projects battery powers onto the feasible set of the current state.
Action admissible(const RecConfig& cfg, const SimState& state, const Action& action);

// State update only (no cost); the action is used as given.
StepResult transition(const RecConfig& cfg, const SimState& state, const Exogenous& exo, const Action& action);

// Throws PreconditionError if the action is not admissible.
StepResult step(const RecConfig& cfg, const SimState& state, const Exogenous& exo, const Action& action,
                CostMode mode = {});

// Intermediate global REC bill of a state sitting at a market-period end.
double dense_increment(const RecConfig& cfg, const SimState& state, bool retail = false);

// Energy of every member for one step (kWh), battery included.
void member_flows(const RecConfig& cfg, const Exogenous& exo, const Action& action, std::vector<double>& l_minus,
                  std::vector<double>& l_plus);

Action zero_action(const RecConfig& cfg);

}  // namespace recopt
