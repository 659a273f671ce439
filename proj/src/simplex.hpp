#pragma once

#include <vector>

#include <Eigen/Dense>

#include "recopt/lp.hpp"

namespace recopt::lp::detail {

// Bounded revised simplex on  A x - s = 0,  lo <= (x, s) <= hi.
// Keeps an explicit dense basis inverse, refreshed by LU refactorisation.
class Simplex {
public:
    Simplex(const LinearProgram& p, const SolverOptions& opts);

    // Bounds of structural variables for the next solve (B&B tightening).
    void set_structural_bounds(const std::vector<double>& lo, const std::vector<double>& hi);

    // Runs from `warm` if given (repaired when unusable), else from the
    // all-slack basis.
    Solution solve(const Basis* warm);

private:
    struct Column {
        std::vector<int> rows;
        std::vector<double> vals;
    };

    void load_basis(const Basis* warm);
    void crash(const std::vector<int>& preferred);
    bool refactor();
    void compute_basics();
    void set_nonbasic_value(int j);
    double infeasibility(int j) const;
    double dot_column(const Eigen::VectorXd& y, int j) const;
    Status iterate(long& iterations);
    Solution finish(Status status, long iterations);

    const LinearProgram& prog_;
    SolverOptions opts_;
    int n_ = 0;  // structurals
    int m_ = 0;  // rows
    std::vector<Column> cols_;
    std::vector<double> cost_;
    std::vector<double> lo_, hi_;

    std::vector<VarStatus> status_;
    std::vector<int> head_;      // basic variable per basis position
    std::vector<int> position_;  // basis position per variable or -1
    std::vector<double> x_;
    Eigen::MatrixXd binv_;
};

}  // namespace recopt::lp::detail
