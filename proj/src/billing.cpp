#include "recopt/billing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "recopt/errors.hpp"
#include "recopt/lp.hpp"

namespace recopt {

namespace {

void check_inputs(const MeterMatrix& meters, const Tariffs& tariffs) {
    meters.validate();
    if (meters.period_count() == 0) throw PreconditionError("billing: at least one market period required");
    if (tariffs.member_count() != meters.member_count() || tariffs.sell_price.size() != meters.member_count())
        throw PreconditionError("billing: tariffs and meters disagree on the number of members");
}

void check_tau(double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) throw PreconditionError("billing: tau must lie in (0, 1]");
}

double net_consumption(const MeterMatrix& mm, Eigen::Index m, Eigen::Index r) {
    return std::max(mm.consumption(m, r) - mm.production(m, r), 0.0);
}

double net_production(const MeterMatrix& mm, Eigen::Index m, Eigen::Index r) {
    return std::max(mm.production(m, r) - mm.consumption(m, r), 0.0);
}

ReallocationResult finish(const MeterMatrix& meters, const Tariffs& tariffs, Matrix e_minus, Matrix e_plus,
                          double tau) {
    const int billed = billed_periods(static_cast<int>(meters.period_count()), tau);
    const auto members = static_cast<Eigen::Index>(meters.member_count());
    ReallocationResult res;
    res.tau = tau;
    res.offtake_peak = Vector::Zero(members);
    res.injection_peak = Vector::Zero(members);
    for (Eigen::Index m = 0; m < members; ++m)
        for (Eigen::Index r = 0; r < billed; ++r) {
            res.offtake_peak(m) = std::max(res.offtake_peak(m), meters.consumption(m, r) - e_minus(m, r));
            res.injection_peak(m) = std::max(res.injection_peak(m), meters.production(m, r) - e_plus(m, r));
        }
    res.member_bills = intermediate_bill(meters, tariffs, e_minus, e_plus, tau);
    res.global_bill = std::accumulate(res.member_bills.begin(), res.member_bills.end(), 0.0);
    res.objective = res.global_bill;
    res.alloc_to_member = std::move(e_minus);
    res.alloc_from_member = std::move(e_plus);
    return res;
}

}  // namespace

int billed_periods(int periods, double tau) {
    check_tau(tau);
    // tolerate tau values like k/R computed in floating point
    const int k = static_cast<int>(std::ceil(tau * periods - 1e-9));
    return std::clamp(k, 1, periods);
}

BillBreakdown bill_no_rec(const MeterMatrix& meters, const Tariffs& tariffs) {
    check_inputs(meters, tariffs);
    BillBreakdown out;
    const auto members = static_cast<Eigen::Index>(meters.member_count());
    for (Eigen::Index m = 0; m < members; ++m) {
        const auto u = static_cast<std::size_t>(m);
        const double energy = tariffs.buy_price[u] * meters.consumption.row(m).sum() -
                              tariffs.sell_price[u] * meters.production.row(m).sum();
        const double peaks = tariffs.offtake_peak_price * meters.consumption.row(m).maxCoeff() +
                             tariffs.injection_peak_price * meters.production.row(m).maxCoeff();
        out.member.push_back(energy + peaks);
        out.total += energy + peaks;
    }
    return out;
}

std::vector<double> intermediate_bill(const MeterMatrix& meters, const Tariffs& tariffs, const Matrix& e_minus,
                                      const Matrix& e_plus, double tau) {
    check_inputs(meters, tariffs);
    const int billed = billed_periods(static_cast<int>(meters.period_count()), tau);
    const auto members = static_cast<Eigen::Index>(meters.member_count());
    for (const Matrix* e : {&e_minus, &e_plus}) {
        if (e->rows() != members || e->cols() < billed)
            throw PreconditionError("intermediate_bill: allocation does not cover the billed periods");
        for (Eigen::Index r = billed; r < e->cols(); ++r)
            if (e->col(r).cwiseAbs().maxCoeff() != 0.0)
                throw PreconditionError("intermediate_bill: allocation references period " + std::to_string(r + 1) +
                                        " beyond the elapsed part of the billing period");
    }
    std::vector<double> bills;
    for (Eigen::Index m = 0; m < members; ++m) {
        const auto u = static_cast<std::size_t>(m);
        double energy = 0.0, peak_in = 0.0, peak_out = 0.0;
        for (Eigen::Index r = 0; r < billed; ++r) {
            const double cons = meters.consumption(m, r) - e_minus(m, r);
            const double prod = meters.production(m, r) - e_plus(m, r);
            energy += tariffs.buy_price[u] * cons - tariffs.sell_price[u] * prod +
                      tariffs.rec_fee_consume * e_minus(m, r) + tariffs.rec_fee_produce * e_plus(m, r);
            peak_in = std::max(peak_in, cons);
            peak_out = std::max(peak_out, prod);
        }
        bills.push_back(energy + tau * (tariffs.offtake_peak_price * peak_in + tariffs.injection_peak_price * peak_out));
    }
    return bills;
}

ReallocationResult optimal_reallocation(const MeterMatrix& meters, const Tariffs& tariffs, double tau,
                                        bool include_peaks) {
    check_inputs(meters, tariffs);
    const int billed = billed_periods(static_cast<int>(meters.period_count()), tau);
    const auto members = static_cast<Eigen::Index>(meters.member_count());
    const double p_in = include_peaks ? tariffs.offtake_peak_price : 0.0;
    const double p_out = include_peaks ? tariffs.injection_peak_price : 0.0;

    lp::LinearProgram prog;
    std::vector<int> em(static_cast<std::size_t>(members * billed), -1), ep = em;
    auto idx = [billed](Eigen::Index m, Eigen::Index r) { return static_cast<std::size_t>(m * billed + r); };

    for (Eigen::Index m = 0; m < members; ++m) {
        const auto u = static_cast<std::size_t>(m);
        for (Eigen::Index r = 0; r < billed; ++r) {
            prog.objective_offset +=
                tariffs.buy_price[u] * meters.consumption(m, r) - tariffs.sell_price[u] * meters.production(m, r);
            const std::string tag = "[" + std::to_string(m) + "," + std::to_string(r) + "]";
            if (const double cap = net_consumption(meters, m, r); cap > 0.0)
                em[idx(m, r)] = prog.add_variable("em" + tag, 0.0, cap, tariffs.rec_fee_consume - tariffs.buy_price[u]);
            if (const double cap = net_production(meters, m, r); cap > 0.0)
                ep[idx(m, r)] = prog.add_variable("ep" + tag, 0.0, cap, tariffs.rec_fee_produce + tariffs.sell_price[u]);
        }
    }
    for (Eigen::Index r = 0; r < billed; ++r) {
        std::vector<lp::Term> row;
        for (Eigen::Index m = 0; m < members; ++m) {
            if (em[idx(m, r)] >= 0) row.push_back({em[idx(m, r)], 1.0});
            if (ep[idx(m, r)] >= 0) row.push_back({ep[idx(m, r)], -1.0});
        }
        if (!row.empty()) prog.add_constraint("balance[" + std::to_string(r) + "]", row, lp::Relation::Equal, 0.0);
    }
    // Peak variables: p >= C - e in every billed period.
    for (Eigen::Index m = 0; m < members; ++m) {
        for (int side = 0; side < 2; ++side) {
            const double price = side == 0 ? p_in : p_out;
            if (price == 0.0) continue;
            const Matrix& reading = side == 0 ? meters.consumption : meters.production;
            const auto& evars = side == 0 ? em : ep;
            // readings that cannot be reduced only bound the peak from below
            double floor = 0.0;
            for (Eigen::Index r = 0; r < billed; ++r)
                if (evars[idx(m, r)] < 0) floor = std::max(floor, reading(m, r));
            const int p = prog.add_variable((side == 0 ? "pin[" : "pout[") + std::to_string(m) + "]", floor, lp::kInf,
                                            tau * price);
            for (Eigen::Index r = 0; r < billed; ++r) {
                const double c = reading(m, r);
                if (evars[idx(m, r)] < 0 || c <= floor) continue;
                std::vector<lp::Term> row{{p, 1.0}, {evars[idx(m, r)], 1.0}};
                prog.add_constraint((side == 0 ? "peakin[" : "peakout[") + std::to_string(m) + "," +
                                        std::to_string(r) + "]",
                                    row, lp::Relation::GreaterEqual, c);
            }
        }
    }

    const auto sol = lp::solve_lp(prog);
    if (sol.status != lp::Status::Optimal)
        throw SolverError("optimal_reallocation: solver returned " + lp::to_string(sol.status));

    Matrix e_minus = Matrix::Zero(members, static_cast<Eigen::Index>(meters.period_count()));
    Matrix e_plus = e_minus;
    for (Eigen::Index m = 0; m < members; ++m)
        for (Eigen::Index r = 0; r < billed; ++r) {
            if (em[idx(m, r)] >= 0) e_minus(m, r) = sol.values[static_cast<std::size_t>(em[idx(m, r)])];
            if (ep[idx(m, r)] >= 0) e_plus(m, r) = sol.values[static_cast<std::size_t>(ep[idx(m, r)])];
        }
    auto res = finish(meters, tariffs, std::move(e_minus), std::move(e_plus), tau);
    res.objective = sol.objective_value;
    return res;
}

ReallocationResult greedy_no_peak(const MeterMatrix& meters, const Tariffs& tariffs) {
    check_inputs(meters, tariffs);
    for (std::size_t m = 0; m < tariffs.member_count(); ++m)
        if (!(tariffs.buy_price[m] > 0.0) || !(tariffs.sell_price[m] > 0.0))
            throw PreconditionError("greedy_no_peak: all buying and selling prices must be strictly positive");

    const auto members = static_cast<Eigen::Index>(meters.member_count());
    const auto periods = static_cast<Eigen::Index>(meters.period_count());
    Matrix e_minus = Matrix::Zero(members, periods), e_plus = e_minus;

    // Value of receiving 1 kWh from the REC / cost of sharing 1 kWh with it.
    std::vector<Eigen::Index> consumers_order(static_cast<std::size_t>(members)), producers_order;
    std::iota(consumers_order.begin(), consumers_order.end(), 0);
    producers_order = consumers_order;
    std::stable_sort(consumers_order.begin(), consumers_order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return tariffs.buy_price[static_cast<std::size_t>(a)] > tariffs.buy_price[static_cast<std::size_t>(b)];
    });
    std::stable_sort(producers_order.begin(), producers_order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return tariffs.sell_price[static_cast<std::size_t>(a)] < tariffs.sell_price[static_cast<std::size_t>(b)];
    });

    for (Eigen::Index r = 0; r < periods; ++r) {
        std::vector<double> need(static_cast<std::size_t>(members)), surplus(static_cast<std::size_t>(members));
        for (Eigen::Index m = 0; m < members; ++m) {
            need[static_cast<std::size_t>(m)] = net_consumption(meters, m, r);
            surplus[static_cast<std::size_t>(m)] = net_production(meters, m, r);
        }
        std::size_t ci = 0, pi = 0;
        while (ci < consumers_order.size() && pi < producers_order.size()) {
            const auto c = static_cast<std::size_t>(consumers_order[ci]);
            const auto p = static_cast<std::size_t>(producers_order[pi]);
            if (need[c] <= 0.0) {
                ++ci;
                continue;
            }
            if (surplus[p] <= 0.0) {
                ++pi;
                continue;
            }
            const double gain = (tariffs.buy_price[c] - tariffs.rec_fee_consume) -
                                (tariffs.sell_price[p] + tariffs.rec_fee_produce);
            if (gain <= 0.0) break;  // later pairs are no better
            const double q = std::min(need[c], surplus[p]);
            e_minus(static_cast<Eigen::Index>(c), r) += q;
            e_plus(static_cast<Eigen::Index>(p), r) += q;
            need[c] -= q;
            surplus[p] -= q;
        }
    }
    auto res = finish(meters, tariffs, std::move(e_minus), std::move(e_plus), 1.0);
    // criterion value without peaks, comparable with the LP ignoring peaks
    const auto no_peaks = intermediate_bill(meters, tariffs.without_peaks(), res.alloc_to_member,
                                            res.alloc_from_member, 1.0);
    res.objective = std::accumulate(no_peaks.begin(), no_peaks.end(), 0.0);
    return res;
}

ReallocationResult two_member_reallocation(const MeterMatrix& meters, const Tariffs& tariffs) {
    check_inputs(meters, tariffs);
    if (meters.member_count() != 2) throw PreconditionError("two_member_reallocation: exactly two members required");
    for (std::size_t c = 0; c < 2; ++c) {
        const std::size_t p = 1 - c;
        if (tariffs.buy_price[c] - tariffs.rec_fee_consume < tariffs.sell_price[p] + tariffs.rec_fee_produce)
            throw PreconditionError("two_member_reallocation: REC fees exceed the retail price spread");
    }
    const auto periods = static_cast<Eigen::Index>(meters.period_count());
    Matrix e_minus = Matrix::Zero(2, periods), e_plus = e_minus;
    for (Eigen::Index r = 0; r < periods; ++r) {
        for (Eigen::Index c = 0; c < 2; ++c) {
            const Eigen::Index p = 1 - c;
            const double q = std::min(net_consumption(meters, c, r), net_production(meters, p, r));
            if (q > 0.0) {
                e_minus(c, r) = q;
                e_plus(p, r) = q;
            }
        }
    }
    return finish(meters, tariffs, std::move(e_minus), std::move(e_plus), 1.0);
}

nlohmann::json reallocation_to_json(const ReallocationResult& r) {
    auto matrix = [](const Matrix& m) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
            rows.push_back(row);
        }
        return rows;
    };
    auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    return nlohmann::json{{"tau", r.tau},
                          {"global_bill", r.global_bill},
                          {"objective", r.objective},
                          {"member_bills", r.member_bills},
                          {"offtake_peak", vec(r.offtake_peak)},
                          {"injection_peak", vec(r.injection_peak)},
                          {"alloc_to_member", matrix(r.alloc_to_member)},
                          {"alloc_from_member", matrix(r.alloc_from_member)}};
}

}  // namespace recopt
