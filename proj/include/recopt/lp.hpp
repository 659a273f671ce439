#pragma once

// Linear / mixed-integer program representation and the embedded solver:
// a bounded revised simplex plus best-first branch-and-bound over binaries
// and SOS1 pairs.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace recopt::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, Equal, GreaterEqual };

struct Variable {
    std::string name;
    double lower = 0.0;
    double upper = kInf;
    double objective = 0.0;
    bool is_binary = false;
};

struct Term {
    int var;
    double coef;
};

struct Constraint {
    std::string name;
    std::vector<Term> terms;
    Relation relation = Relation::LessEqual;
    double rhs = 0.0;
};

// Minimisation problem  min c'x + offset  s.t. rows, bounds, binaries and
// SOS1 pairs (at most one of the two variables nonzero).
class LinearProgram {
public:
    int add_variable(std::string name, double lower, double upper, double objective = 0.0,
                     bool is_binary = false);
    int add_binary(std::string name, double objective = 0.0) {
        return add_variable(std::move(name), 0.0, 1.0, objective, true);
    }
    int add_constraint(std::string name, std::vector<Term> terms, Relation relation, double rhs);
    void add_sos1(int a, int b) { sos1_.emplace_back(a, b); }
    void add_objective(int var, double coef) { variables_.at(static_cast<std::size_t>(var)).objective += coef; }
    void set_bounds(int var, double lower, double upper);

    double objective_offset = 0.0;

    const std::vector<Variable>& variables() const { return variables_; }
    const std::vector<Constraint>& constraints() const { return constraints_; }
    const std::vector<std::pair<int, int>>& sos1() const { return sos1_; }
    int variable_count() const { return static_cast<int>(variables_.size()); }
    int constraint_count() const { return static_cast<int>(constraints_.size()); }
    bool is_mixed_integer() const;

    // Throws PreconditionError describing the first malformed element.
    void validate() const;

    double objective_at(const std::vector<double>& x) const;
    // Largest absolute violation of rows and bounds at x.
    double max_violation(const std::vector<double>& x) const;

private:
    std::vector<Variable> variables_;
    std::vector<Constraint> constraints_;
    std::vector<std::pair<int, int>> sos1_;
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };
std::string to_string(Status s);

enum class VarStatus : std::uint8_t { Basic, AtLower, AtUpper, FreeZero };

// Basis statuses for structural variables followed by row slacks.
struct Basis {
    std::vector<VarStatus> variables;
    std::vector<VarStatus> rows;
    bool empty() const { return variables.empty() && rows.empty(); }
};

struct Solution {
    Status status = Status::IterationLimit;
    std::vector<double> values;
    double objective_value = 0.0;
    // Lagrangian bound from the final basis (LP only; equals the objective at
    // an optimum up to round-off).
    double dual_bound = -kInf;
    Basis basis;
    long iterations = 0;
    long nodes = 0;
    bool has_incumbent() const { return !values.empty(); }
};

struct SolverOptions {
    long max_iterations = 200000;
    long max_nodes = 100000;
    double feasibility_tol = 1e-7;
    double optimality_tol = 1e-9;
    double absolute_gap = 1e-6;
    int refactor_every = 100;
    int bland_after = 50;
};

Solution solve_lp(const LinearProgram& p, const SolverOptions& opts = {}, const Basis* warm = nullptr);
Solution solve_milp(const LinearProgram& p, const SolverOptions& opts = {}, const Basis* warm = nullptr);

// Warm starts across structurally different programs, keyed by names.
using NamedBasis = std::unordered_map<std::string, VarStatus>;
NamedBasis name_basis(const LinearProgram& p, const Basis& b);
Basis map_basis(const LinearProgram& p, const NamedBasis& named);

// CPLEX-LP text rendering of the program, for cross-checking with external
// solvers.
void write_lp_text(const LinearProgram& p, std::ostream& out);

// Seam for plugging in a different solver implementation.
class Backend {
public:
    virtual ~Backend() = default;
    virtual Solution solve(const LinearProgram& p, const Basis* warm) = 0;
};

class EmbeddedBackend final : public Backend {
public:
    explicit EmbeddedBackend(SolverOptions opts = {}) : opts_(opts) {}
    Solution solve(const LinearProgram& p, const Basis* warm) override {
        return p.is_mixed_integer() ? solve_milp(p, opts_, warm) : solve_lp(p, opts_, warm);
    }

private:
    SolverOptions opts_;
};

}  // namespace recopt::lp
