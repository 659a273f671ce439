#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "recopt/billing.hpp"
#include "recopt/errors.hpp"
#include "recopt/exogenous.hpp"
#include "recopt/simulator.hpp"

using namespace recopt;

namespace {

Exogenous constant_exo(std::vector<double> c, std::vector<double> p) { return {std::move(c), std::move(p)}; }

}  // namespace

TEST_CASE("counter automaton matches the closed form") {
    for (auto [dm, db] : {std::pair{4, 5}, std::pair{5, 45}, std::pair{1, 3}, std::pair{3, 1}, std::pair{1, 1}}) {
        TimeGrid g;
        g.steps_per_market_period = dm;
        g.market_periods_per_billing = db;
        Counters c{0, 0};
        int billing_ends = 0, market_ends = 0;
        for (int t = 0; t <= 5 * dm * db; ++t) {
            CHECK(c == oracles::counters_closed_form(g, t));
            if (t > 0) {
                const int k = (t - 1) % g.steps_per_billing() + 1;
                CHECK(elapsed_steps(g, c) == k);
            }
            billing_ends += is_billing_end(g, c);
            market_ends += is_market_end(g, c);
            c = next_counters(g, c);
        }
        CHECK(billing_ends == 5);
        CHECK(market_ends == 5 * db);
    }
}

TEST_CASE("initial state of the shipped configs") {
    CHECK(initial_state(fixtures::load_rec("rec2")).soc == std::vector<double>{0.5});
    CHECK(initial_state(fixtures::load_rec("rec7")).soc == std::vector<double>{2628.0});
}

TEST_CASE("admissible projection") {
    const auto cfg = fixtures::load_rec("rec2");
    SimState s = initial_state(cfg);
    s.soc = {0.98};
    CHECK(admissible(cfg, s, Action{{0.05}}).battery_power[0] == doctest::Approx(0.02).epsilon(1e-12));
    s.soc = {0.0};
    CHECK(admissible(cfg, s, Action{{-0.1}}).battery_power[0] == 0.0);
    s.soc = {0.5};
    CHECK(admissible(cfg, s, Action{{3.0}}).battery_power[0] == 0.05);
    CHECK(admissible(cfg, s, Action{{-3.0}}).battery_power[0] == -0.10);
    CHECK(admissible(cfg, s, Action{{std::nan("")}}).battery_power[0] == 0.0);

    const auto rec7 = fixtures::load_rec("rec7");
    SimState s7 = initial_state(rec7);
    s7.soc = {5256.0 - 10.0};
    // 10 kWh of room at efficiency 0.88 over 0.05 h
    CHECK(admissible(rec7, s7, Action{{525.0}}).battery_power[0] == doctest::Approx(10.0 / (0.05 * 0.88)));
    s7.soc = {5.0};
    CHECK(admissible(rec7, s7, Action{{-1051.0}}).battery_power[0] == doctest::Approx(-5.0 * 0.71 / 0.05));
}

TEST_CASE("battery dynamics and flows of a single step") {
    const auto cfg = fixtures::load_rec("rec2");
    const SimState s = initial_state(cfg);
    const auto r = step(cfg, s, constant_exo({0.4, 0.0}, {0.0, 0.3}), Action{{0.05}});
    CHECK(r.next.soc[0] == doctest::Approx(0.55));
    CHECK(r.net_consumption == std::vector<double>{0.4, 0.0});
    CHECK(r.net_production[1] == doctest::Approx(0.25));
    CHECK(r.next.meters.consumption(0, 0) == doctest::Approx(0.4));
    CHECK(r.next.meters.production(1, 0) == doctest::Approx(0.25));
    CHECK(r.cost == 0.0);
    CHECK_THROWS_AS(step(cfg, s, constant_exo({0.4, 0.0}, {0.0, 0.3}), Action{{0.2}}), PreconditionError);
    CHECK_THROWS_AS(step(cfg, s, constant_exo({0.4}, {0.0}), Action{{0.0}}), PreconditionError);
    CHECK_THROWS_AS(step(cfg, s, constant_exo({-0.4, 0.0}, {0.0, 0.0}), Action{{0.0}}), PreconditionError);
}

TEST_CASE("full billing period with constant profiles bills the accumulated meters") {
    const auto cfg = fixtures::load_rec("rec2");
    const auto& g = cfg.time_grid;
    SimState s = initial_state(cfg);
    const Exogenous exo = constant_exo({0.4, 0.0}, {0.0, 0.3});
    double total = 0.0;
    for (int t = 0; t < g.steps_per_billing(); ++t) {
        const auto r = step(cfg, s, exo, zero_action(cfg));
        if (t + 1 < g.steps_per_billing()) CHECK(r.cost == 0.0);
        total += r.cost;
        s = r.next;
    }
    CHECK(is_billing_end(g, counters_of(s)));
    // every market period holds 4 steps of each flow
    MeterMatrix mm = MeterMatrix::zeros(2, 5);
    mm.consumption.row(0).setConstant(1.6);
    mm.production.row(1).setConstant(1.2);
    mm.periods_elapsed = 5;
    mm.steps_elapsed_in_billing = 20;
    CHECK(total == doctest::Approx(optimal_reallocation(mm, cfg.tariffs).global_bill).epsilon(1e-12));
    CHECK(total > 0.0);

    // the next step starts a fresh billing period
    const auto r = step(cfg, s, exo, zero_action(cfg));
    CHECK(r.next.meters.consumption(0, 0) == doctest::Approx(0.4));
    CHECK(r.next.meters.consumption.row(0).tail(4).sum() == 0.0);
}

TEST_CASE("intermediate bill at the first market period end scales peaks by 0.2") {
    const auto cfg = fixtures::load_rec("rec2");
    SimState s = initial_state(cfg);
    const Exogenous exo = constant_exo({0.5, 0.0}, {0.0, 0.0});
    double dense = 0.0;
    for (int t = 0; t < 4; ++t) {
        const auto r = step(cfg, s, exo, zero_action(cfg), CostMode{true, false});
        dense += r.cost;
        s = r.next;
    }
    // M1 alone draws 2 kWh; nothing to share
    const double hand = 0.10 * 2.0 + 0.2 * 1.0 * 2.0;
    CHECK(dense == doctest::Approx(hand).epsilon(1e-12));
    CHECK(dense_increment(cfg, s, true) == doctest::Approx(0.2).epsilon(1e-12));
    SimState off = s;
    off.step_in_market = 2;
    CHECK_THROWS_AS(dense_increment(cfg, off), PreconditionError);
}

TEST_CASE("random rollouts keep the simulator invariants") {
    std::mt19937_64 rng(7);
    std::size_t steps = 0;
    for (const char* id : {"rec2", "rec7"}) {
        const auto cfg = fixtures::load_rec(id);
        const auto& g = cfg.time_grid;
        const int episodes = std::string(id) == "rec2" ? 100 : 1;
        for (int ep = 0; ep < episodes; ++ep) {
            const auto exo = sample_sequence(cfg, noise_from_config(cfg, static_cast<std::uint64_t>(ep)));
            SimState sparse = initial_state(cfg), dense = sparse;
            double flows_since_billing = 0.0;
            for (int t = 0; t < g.horizon_steps; ++t) {
                const auto& b = cfg.batteries[0];
                std::uniform_real_distribution<double> u(-1.5 * b.max_discharge_power, 1.5 * b.max_charge_power);
                const Action a = admissible(cfg, sparse, Action{{u(rng)}});
                const auto rs = step(cfg, sparse, exo[t], a);
                const auto rd = step(cfg, dense, exo[t], a, CostMode{true, false});
                ++steps;

                // exact battery update, no clamping needed for admissible actions
                const double uu = a.battery_power[0];
                const double expect =
                    sparse.soc[0] + g.step_hours * (uu >= 0 ? b.charge_efficiency * uu : uu / b.discharge_efficiency);
                CHECK(rs.next.soc[0] >= 0.0);
                CHECK(rs.next.soc[0] <= b.capacity);
                CHECK(std::abs(rs.next.soc[0] - expect) <= 1e-9 * std::max(1.0, b.capacity));

                double lhs = 0.0, rhs = 0.0;
                for (std::size_t m = 0; m < cfg.member_count(); ++m) {
                    CHECK(rs.net_consumption[m] * rs.net_production[m] == 0.0);
                    lhs += rs.net_consumption[m] - rs.net_production[m];
                    rhs += g.step_hours * (exo[t].consumption[m] - exo[t].production[m]);
                }
                rhs += g.step_hours * uu;
                CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(rhs)));

                if (is_billing_end(g, counters_of(sparse))) flows_since_billing = 0.0;
                flows_since_billing += lhs;
                const auto& mm = rs.next.meters;
                const double metered = mm.consumption.sum() - mm.production.sum();
                CHECK(std::abs(metered - flows_since_billing) <= 1e-7 * std::max(1.0, std::abs(metered)));

                const Counters nc = counters_of(rs.next);
                if (!is_billing_end(g, nc)) CHECK(rs.cost == 0.0);
                else CHECK(rd.cost == doctest::Approx(rs.cost).epsilon(1e-12));
                if (!is_market_end(g, nc)) CHECK(rd.cost == 0.0);

                sparse = rs.next;
                dense = rd.next;
            }
        }
    }
    CHECK(steps >= 10000);
}
