#pragma once

// Electricity bills of REC members and the optimal reallocation of the REC
// production among them (global REC bill).

#include <vector>

#include <nlohmann/json.hpp>

#include "recopt/domain.hpp"

namespace recopt {

struct BillBreakdown {
    std::vector<double> member;
    double total = 0.0;
};

struct ReallocationResult {
    Matrix alloc_to_member;    // e-, members x billed periods
    Matrix alloc_from_member;  // e+
    Vector offtake_peak;
    Vector injection_peak;
    std::vector<double> member_bills;  // evaluated with the true peak prices
    double global_bill = 0.0;          // sum of member_bills
    double objective = 0.0;            // value of the minimised criterion
    double tau = 1.0;
};

// Number of market periods covered by an elapsed fraction tau of R periods.
int billed_periods(int periods, double tau);

// Bills without any REC exchange over all periods of `meters`.
BillBreakdown bill_no_rec(const MeterMatrix& meters, const Tariffs& tariffs);

// Per-member (possibly intermediate) ex-post bills for given exchanges.
// `e_minus`/`e_plus` must not carry energy beyond the billed periods.
std::vector<double> intermediate_bill(const MeterMatrix& meters, const Tariffs& tariffs, const Matrix& e_minus,
                                      const Matrix& e_plus, double tau);

// Minimises the sum of (intermediate) ex-post bills over the exchanges.
// With include_peaks=false the peak prices are dropped from the criterion
// only; reported bills always use the true tariffs.
ReallocationResult optimal_reallocation(const MeterMatrix& meters, const Tariffs& tariffs, double tau = 1.0,
                                        bool include_peaks = true);

// Per-period matching of the most valuable consumers with the cheapest
// producers. Optimal when peaks are ignored; requires positive prices.
ReallocationResult greedy_no_peak(const MeterMatrix& meters, const Tariffs& tariffs);

// Closed form for two members: the net producer shares everything the other
// member can absorb.
ReallocationResult two_member_reallocation(const MeterMatrix& meters, const Tariffs& tariffs);

nlohmann::json reallocation_to_json(const ReallocationResult& r);

}  // namespace recopt
