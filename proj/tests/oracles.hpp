#pragma once

// Independent reference computations shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "recopt/billing.hpp"
#include "recopt/exogenous.hpp"
#include "recopt/simulator.hpp"

namespace oracles {

// Bill of the billing period reached after one step with battery power u,
// prorated by the steps elapsed in it.
inline double one_step_cost(const recopt::RecConfig& cfg, const recopt::SimState& s, const recopt::Exogenous& exo,
                            double u) {
    const auto next = recopt::transition(cfg, s, exo, recopt::Action{{u}}).next;
    const auto& g = cfg.time_grid;
    const double tau = static_cast<double>(recopt::elapsed_steps(g, recopt::counters_of(next))) / g.steps_per_billing();
    return recopt::optimal_reallocation(next.meters, cfg.tariffs, tau).global_bill;
}

struct GridResult {
    double best_u = 0.0;
    double best_cost = std::numeric_limits<double>::infinity();
};

// Exhaustive search over admissible powers of the single battery.
inline GridResult grid_search(const recopt::RecConfig& cfg, const recopt::SimState& s, const recopt::Exogenous& exo,
                              double resolution) {
    const auto& b = cfg.batteries.at(0);
    const double lo = recopt::admissible(cfg, s, recopt::Action{{-b.max_discharge_power}}).battery_power[0];
    const double hi = recopt::admissible(cfg, s, recopt::Action{{b.max_charge_power}}).battery_power[0];
    GridResult r;
    const auto steps = static_cast<long>(std::floor((hi - lo) / resolution + 1e-9));
    for (long i = 0; i <= steps + 1; ++i) {
        const double u = i <= steps ? lo + static_cast<double>(i) * resolution : hi;
        const double c = one_step_cost(cfg, s, exo, u);
        if (c < r.best_cost) {
            r.best_cost = c;
            r.best_u = u;
        }
    }
    return r;
}

// Cost change per kW of battery power over one step: energy price, fee and
// prorated peak price, all per kWh.
inline double one_step_lipschitz(const recopt::RecConfig& cfg) {
    const auto& tf = cfg.tariffs;
    double price = 0.0;
    for (std::size_t m = 0; m < cfg.member_count(); ++m) price = std::max({price, tf.buy_price[m], tf.sell_price[m]});
    price += std::max(tf.rec_fee_consume, tf.rec_fee_produce) +
             std::max(tf.offtake_peak_price, tf.injection_peak_price);
    return 2.0 * price * cfg.time_grid.step_hours;
}

// A reachable state: random admissible actions from the start of a sampled
// scenario up to step t.
inline recopt::SimState random_reachable_state(const recopt::RecConfig& cfg, const recopt::ExogenousSequence& exo,
                                               int t, std::mt19937_64& rng) {
    recopt::SimState s = recopt::initial_state(cfg);
    const auto& b = cfg.batteries.at(0);
    std::uniform_real_distribution<double> u(-b.max_discharge_power, b.max_charge_power);
    for (int k = 0; k < t; ++k) {
        const auto a = recopt::admissible(cfg, s, recopt::Action{{u(rng)}});
        s = recopt::transition(cfg, s, exo[static_cast<std::size_t>(k)], a).next;
    }
    return s;
}

// Counters after t steps from (0, 0), without running the automaton.
inline recopt::Counters counters_closed_form(const recopt::TimeGrid& g, int t) {
    if (t == 0) return {0, 0};
    const int k = (t - 1) % g.steps_per_billing() + 1;
    return {(k - 1) % g.steps_per_market_period + 1, k / g.steps_per_market_period};
}

// Random tariffs with strictly positive energy prices.
inline recopt::Tariffs random_tariffs(std::mt19937_64& rng, int members, bool with_peaks) {
    std::uniform_real_distribution<double> buy(0.15, 0.30), sell(0.01, 0.08), fee(0.0, 0.03), peak(0.2, 2.0);
    recopt::Tariffs t;
    for (int m = 0; m < members; ++m) {
        t.buy_price.push_back(buy(rng));
        t.sell_price.push_back(sell(rng));
    }
    t.rec_fee_consume = fee(rng);
    t.rec_fee_produce = fee(rng);
    t.offtake_peak_price = with_peaks ? peak(rng) : 0.0;
    t.injection_peak_price = with_peaks ? peak(rng) : 0.0;
    return t;
}

inline recopt::MeterMatrix random_meters(std::mt19937_64& rng, int members, int periods) {
    std::uniform_real_distribution<double> u(-800.0, 800.0);
    std::vector<std::vector<double>> net(static_cast<std::size_t>(periods), std::vector<double>(static_cast<std::size_t>(members)));
    for (auto& row : net)
        for (auto& v : row) v = u(rng);
    return recopt::MeterMatrix::from_net(net);
}

}  // namespace oracles
