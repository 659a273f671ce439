#include "recopt/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "recopt/billing.hpp"
#include "recopt/errors.hpp"

namespace recopt {

Counters next_counters(const TimeGrid& g, Counters c) {
    Counters n;
    n.m = c.m == g.steps_per_market_period ? 1 : c.m + 1;
    // a billing end restarts at period 0; the step may close it at once when
    // market periods last a single step
    n.b = (c.b == g.market_periods_per_billing ? 0 : c.b) + (n.m == g.steps_per_market_period ? 1 : 0);
    return n;
}

int elapsed_steps(const TimeGrid& g, Counters c) {
    if (c.b == g.market_periods_per_billing) return g.steps_per_billing();
    if (c.m == g.steps_per_market_period) return c.b * g.steps_per_market_period;
    return c.b * g.steps_per_market_period + c.m;
}

bool is_market_end(const TimeGrid& g, Counters c) { return c.m == g.steps_per_market_period && c.b >= 1; }

bool is_billing_end(const TimeGrid& g, Counters c) {
    return c.m == g.steps_per_market_period && c.b == g.market_periods_per_billing;
}

int flow_period(const TimeGrid& g, Counters c, bool& resets) {
    resets = is_billing_end(g, c);
    return resets ? 0 : c.b;
}

SimState initial_state(const RecConfig& cfg) {
    SimState s;
    for (const auto& b : cfg.batteries) s.soc.push_back(b.capacity / 2.0);
    s.meters = MeterMatrix::zeros(cfg.member_count(), static_cast<std::size_t>(cfg.time_grid.market_periods_per_billing));
    return s;
}

Action zero_action(const RecConfig& cfg) { return Action{std::vector<double>(cfg.batteries.size(), 0.0)}; }

Action admissible(const RecConfig& cfg, const SimState& state, const Action& action) {
    Action out = zero_action(cfg);
    const double dt = cfg.time_grid.step_hours;
    for (std::size_t k = 0; k < cfg.batteries.size(); ++k) {
        const auto& b = cfg.batteries[k];
        double u = k < action.battery_power.size() ? action.battery_power[k] : 0.0;
        if (!std::isfinite(u)) u = 0.0;
        const double soc = k < state.soc.size() ? state.soc[k] : 0.0;
        if (u > 0.0) {
            const double room = std::max(b.capacity - soc, 0.0) / (dt * b.charge_efficiency);
            u = std::min({u, b.max_charge_power, room});
        } else if (u < 0.0) {
            const double stock = std::max(soc, 0.0) * b.discharge_efficiency / dt;
            u = -std::min({-u, b.max_discharge_power, stock});
        }
        out.battery_power[k] = u == 0.0 ? 0.0 : u;
    }
    return out;
}

void member_flows(const RecConfig& cfg, const Exogenous& exo, const Action& action, std::vector<double>& l_minus,
                  std::vector<double>& l_plus) {
    const std::size_t members = cfg.member_count();
    const double dt = cfg.time_grid.step_hours;
    std::vector<double> net(members, 0.0);
    for (std::size_t m = 0; m < members; ++m) net[m] = exo.consumption.at(m) - exo.production.at(m);
    for (std::size_t k = 0; k < cfg.batteries.size(); ++k) net[cfg.batteries[k].owner] += action.battery_power.at(k);
    l_minus.assign(members, 0.0);
    l_plus.assign(members, 0.0);
    for (std::size_t m = 0; m < members; ++m) {
        const double e = dt * net[m];
        if (e > 0.0) l_minus[m] = e;
        else if (e < 0.0) l_plus[m] = -e;
    }
}

namespace {

double rec_bill(const RecConfig& cfg, const MeterMatrix& meters, double tau, bool retail) {
    const Tariffs t = retail ? cfg.tariffs.without_peaks() : cfg.tariffs;
    return optimal_reallocation(meters, t, tau).global_bill;
}

void check_exogenous(const RecConfig& cfg, const Exogenous& exo) {
    if (exo.consumption.size() != cfg.member_count() || exo.production.size() != cfg.member_count())
        throw PreconditionError("step: exogenous flows must have one entry per member");
    for (std::size_t m = 0; m < cfg.member_count(); ++m)
        if (!(exo.consumption[m] >= 0.0) || !(exo.production[m] >= 0.0))
            throw PreconditionError("step: exogenous flows must be nonnegative");
}

}  // namespace

StepResult transition(const RecConfig& cfg, const SimState& state, const Exogenous& exo, const Action& action) {
    const auto& g = cfg.time_grid;
    StepResult res;
    member_flows(cfg, exo, action, res.net_consumption, res.net_production);

    SimState& next = res.next;
    const Counters c = counters_of(state);
    bool resets = false;
    const int period = flow_period(g, c, resets);
    const Counters nc = next_counters(g, c);
    next.step_in_market = nc.m;
    next.market_in_billing = nc.b;
    next.t = state.t + 1;
    next.meters = resets ? MeterMatrix::zeros(cfg.member_count(), static_cast<std::size_t>(g.market_periods_per_billing))
                         : state.meters;
    for (std::size_t m = 0; m < cfg.member_count(); ++m) {
        next.meters.consumption(static_cast<Eigen::Index>(m), period) += res.net_consumption[m];
        next.meters.production(static_cast<Eigen::Index>(m), period) += res.net_production[m];
    }
    next.meters.periods_elapsed = period + 1;
    next.meters.steps_elapsed_in_billing = elapsed_steps(g, nc);

    next.soc = state.soc;
    for (std::size_t k = 0; k < cfg.batteries.size(); ++k) {
        const auto& b = cfg.batteries[k];
        const double u = action.battery_power[k];
        const double delta = u >= 0.0 ? b.charge_efficiency * u : u / b.discharge_efficiency;
        next.soc[k] = std::clamp(state.soc[k] + g.step_hours * delta, 0.0, b.capacity);
    }
    return res;
}

StepResult step(const RecConfig& cfg, const SimState& state, const Exogenous& exo, const Action& action,
                CostMode mode) {
    check_exogenous(cfg, exo);
    if (action.battery_power.size() != cfg.batteries.size())
        throw PreconditionError("step: action must have one entry per battery");
    const Action proj = admissible(cfg, state, action);
    for (std::size_t k = 0; k < proj.battery_power.size(); ++k) {
        const double u = action.battery_power[k];
        if (std::abs(proj.battery_power[k] - u) > 1e-9 * std::max(1.0, std::abs(u)))
            throw PreconditionError("step: inadmissible battery action; project it first");
    }
    StepResult res = transition(cfg, state, exo, action);
    const auto& g = cfg.time_grid;
    const Counters nc = counters_of(res.next);
    if (is_billing_end(g, nc)) res.cost = rec_bill(cfg, res.next.meters, 1.0, mode.retail);
    else if (mode.dense && is_market_end(g, nc)) res.cost = dense_increment(cfg, res.next, mode.retail);
    return res;
}

double dense_increment(const RecConfig& cfg, const SimState& state, bool retail) {
    const auto& g = cfg.time_grid;
    const Counters c = counters_of(state);
    if (!is_market_end(g, c)) throw PreconditionError("dense_increment: state is not at a market-period end");
    const double tau = static_cast<double>(elapsed_steps(g, c)) / g.steps_per_billing();
    return rec_bill(cfg, state.meters, tau, retail);
}

}  // namespace recopt
