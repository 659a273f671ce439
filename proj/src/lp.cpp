#include "recopt/lp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <queue>
#include <tuple>

#include "recopt/errors.hpp"
#include "simplex.hpp"

namespace recopt::lp {

int LinearProgram::add_variable(std::string name, double lower, double upper, double objective, bool is_binary) {
    variables_.push_back(Variable{std::move(name), lower, upper, objective, is_binary});
    return static_cast<int>(variables_.size()) - 1;
}

int LinearProgram::add_constraint(std::string name, std::vector<Term> terms, Relation relation, double rhs) {
    constraints_.push_back(Constraint{std::move(name), std::move(terms), relation, rhs});
    return static_cast<int>(constraints_.size()) - 1;
}

void LinearProgram::set_bounds(int var, double lower, double upper) {
    auto& v = variables_.at(static_cast<std::size_t>(var));
    v.lower = lower;
    v.upper = upper;
}

bool LinearProgram::is_mixed_integer() const {
    if (!sos1_.empty()) return true;
    return std::any_of(variables_.begin(), variables_.end(), [](const Variable& v) { return v.is_binary; });
}

void LinearProgram::validate() const {
    for (const auto& v : variables_) {
        if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower == kInf || v.upper == -kInf || v.lower > v.upper)
            throw PreconditionError("lp: bad bounds on variable '" + v.name + "'");
        if (!std::isfinite(v.objective)) throw PreconditionError("lp: non-finite cost on '" + v.name + "'");
        if (v.is_binary && (v.lower < 0.0 || v.upper > 1.0))
            throw PreconditionError("lp: binary '" + v.name + "' must have bounds within [0, 1]");
    }
    for (const auto& c : constraints_) {
        if (!std::isfinite(c.rhs)) throw PreconditionError("lp: non-finite rhs in row '" + c.name + "'");
        for (const auto& t : c.terms) {
            if (t.var < 0 || t.var >= variable_count())
                throw PreconditionError("lp: row '" + c.name + "' references unknown variable");
            if (!std::isfinite(t.coef)) throw PreconditionError("lp: non-finite coefficient in row '" + c.name + "'");
        }
    }
    for (const auto& [a, b] : sos1_) {
        for (int v : {a, b}) {
            if (v < 0 || v >= variable_count()) throw PreconditionError("lp: SOS1 pair references unknown variable");
            const auto& var = variables_[static_cast<std::size_t>(v)];
            if (var.is_binary || var.lower < 0.0)
                throw PreconditionError("lp: SOS1 member '" + var.name + "' must be continuous and nonnegative");
        }
    }
    if (!std::isfinite(objective_offset)) throw PreconditionError("lp: non-finite objective offset");
}

double LinearProgram::objective_at(const std::vector<double>& x) const {
    double s = objective_offset;
    for (std::size_t j = 0; j < variables_.size(); ++j) s += variables_[j].objective * x.at(j);
    return s;
}

double LinearProgram::max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < variables_.size(); ++j) {
        worst = std::max(worst, variables_[j].lower - x.at(j));
        worst = std::max(worst, x.at(j) - variables_[j].upper);
    }
    for (const auto& c : constraints_) {
        double act = 0.0;
        for (const auto& t : c.terms) act += t.coef * x.at(static_cast<std::size_t>(t.var));
        switch (c.relation) {
            case Relation::LessEqual: worst = std::max(worst, act - c.rhs); break;
            case Relation::GreaterEqual: worst = std::max(worst, c.rhs - act); break;
            case Relation::Equal: worst = std::max(worst, std::abs(act - c.rhs)); break;
        }
    }
    for (const auto& [a, b] : sos1_)
        worst = std::max(worst, std::min(std::abs(x.at(static_cast<std::size_t>(a))),
                                         std::abs(x.at(static_cast<std::size_t>(b)))));
    return worst;
}

std::string to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
        case Status::IterationLimit: return "iteration-limit";
    }
    return "unknown";
}

Solution solve_lp(const LinearProgram& p, const SolverOptions& opts, const Basis* warm) {
    p.validate();
    if (p.is_mixed_integer()) throw PreconditionError("solve_lp: program has binaries or SOS1 pairs");
    detail::Simplex spx(p, opts);
    return spx.solve(warm);
}

namespace {

struct BoundChange {
    int var;
    double lower;
    double upper;
};

struct Node {
    double bound;
    int depth;
    long id;
    std::vector<BoundChange> changes;
    Basis basis;
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        // priority_queue pops the "largest": invert for best-first.
        if (a.bound != b.bound) return a.bound > b.bound;
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.id > b.id;
    }
};

constexpr double kIntegralityTol = 1e-7;

}  // namespace

Solution solve_milp(const LinearProgram& p, const SolverOptions& opts, const Basis* warm) {
    p.validate();
    detail::Simplex spx(p, opts);
    const int n = p.variable_count();
    std::vector<double> base_lo(static_cast<std::size_t>(n)), base_hi(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const auto& v = p.variables()[static_cast<std::size_t>(j)];
        base_lo[static_cast<std::size_t>(j)] = v.is_binary ? std::max(0.0, v.lower) : v.lower;
        base_hi[static_cast<std::size_t>(j)] = v.is_binary ? std::min(1.0, v.upper) : v.upper;
    }

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    long next_id = 0;
    open.push(Node{-kInf, 0, next_id++, {}, warm ? *warm : Basis{}});

    Solution best;
    best.status = Status::Infeasible;
    double incumbent = kInf;
    long iterations = 0, nodes = 0;
    bool limited = false;
    std::vector<double> lo, hi;

    while (!open.empty()) {
        if (nodes >= opts.max_nodes) {
            limited = true;
            break;
        }
        Node node = open.top();
        open.pop();
        if (node.bound >= incumbent - opts.absolute_gap) continue;

        lo = base_lo;
        hi = base_hi;
        bool empty_box = false;
        for (const auto& c : node.changes) {
            auto j = static_cast<std::size_t>(c.var);
            lo[j] = std::max(lo[j], c.lower);
            hi[j] = std::min(hi[j], c.upper);
            empty_box |= lo[j] > hi[j];
        }
        if (empty_box) continue;
        spx.set_structural_bounds(lo, hi);
        Solution sol = spx.solve(node.basis.empty() ? nullptr : &node.basis);
        ++nodes;
        iterations += sol.iterations;

        if (sol.status == Status::Infeasible) continue;
        if (sol.status == Status::Unbounded) {
            sol.nodes = nodes;
            sol.iterations = iterations;
            sol.values.clear();
            return sol;
        }
        if (sol.status == Status::IterationLimit) {
            limited = true;
            continue;
        }
        if (sol.objective_value >= incumbent - opts.absolute_gap) continue;

        // Branching candidate: most violated SOS1 pair, else most fractional binary.
        int sos_pick = -1;
        double sos_violation = kIntegralityTol;
        for (std::size_t k = 0; k < p.sos1().size(); ++k) {
            const auto [a, b] = p.sos1()[k];
            const double v = std::min(sol.values[static_cast<std::size_t>(a)], sol.values[static_cast<std::size_t>(b)]);
            if (v > sos_violation) {
                sos_violation = v;
                sos_pick = static_cast<int>(k);
            }
        }
        int bin_pick = -1;
        double frac_best = kIntegralityTol;
        if (sos_pick < 0) {
            for (int j = 0; j < n; ++j) {
                if (!p.variables()[static_cast<std::size_t>(j)].is_binary) continue;
                const double v = sol.values[static_cast<std::size_t>(j)];
                const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
                if (frac > frac_best) {
                    frac_best = frac;
                    bin_pick = j;
                }
            }
        }

        if (sos_pick < 0 && bin_pick < 0) {
            for (int j = 0; j < n; ++j)
                if (p.variables()[static_cast<std::size_t>(j)].is_binary)
                    sol.values[static_cast<std::size_t>(j)] = std::round(sol.values[static_cast<std::size_t>(j)]);
            for (const auto& [a, b] : p.sos1()) {
                auto& va = sol.values[static_cast<std::size_t>(a)];
                auto& vb = sol.values[static_cast<std::size_t>(b)];
                (va < vb ? va : vb) = 0.0;
            }
            sol.objective_value = p.objective_at(sol.values);
            if (sol.objective_value < incumbent) {
                incumbent = sol.objective_value;
                best = sol;
            }
            continue;
        }

        auto child = [&](BoundChange change) {
            Node c{sol.objective_value, node.depth + 1, next_id++, node.changes, sol.basis};
            c.changes.push_back(change);
            open.push(std::move(c));
        };
        if (sos_pick >= 0) {
            const auto [a, b] = p.sos1()[static_cast<std::size_t>(sos_pick)];
            // Zero the smaller member first; it is usually the cheaper branch.
            const bool a_small = sol.values[static_cast<std::size_t>(a)] <= sol.values[static_cast<std::size_t>(b)];
            child(BoundChange{a_small ? a : b, -kInf, 0.0});
            child(BoundChange{a_small ? b : a, -kInf, 0.0});
        } else {
            const double v = sol.values[static_cast<std::size_t>(bin_pick)];
            child(BoundChange{bin_pick, -kInf, std::floor(v)});
            child(BoundChange{bin_pick, std::ceil(v), kInf});
        }
    }

    best.iterations = iterations;
    best.nodes = nodes;
    if (limited) {
        best.status = Status::IterationLimit;
    } else if (best.has_incumbent()) {
        best.status = Status::Optimal;
        best.dual_bound = best.objective_value;
    } else {
        best.status = Status::Infeasible;
    }
    return best;
}

namespace {
const std::string kRowPrefix = "#row:";
}

NamedBasis name_basis(const LinearProgram& p, const Basis& b) {
    NamedBasis named;
    named.reserve(b.variables.size() + b.rows.size());
    for (std::size_t j = 0; j < b.variables.size() && j < p.variables().size(); ++j)
        named[p.variables()[j].name] = b.variables[j];
    for (std::size_t i = 0; i < b.rows.size() && i < p.constraints().size(); ++i)
        named[kRowPrefix + p.constraints()[i].name] = b.rows[i];
    return named;
}

Basis map_basis(const LinearProgram& p, const NamedBasis& named) {
    Basis b;
    b.variables.reserve(p.variables().size());
    for (const auto& v : p.variables()) {
        auto it = named.find(v.name);
        b.variables.push_back(it == named.end() ? VarStatus::AtLower : it->second);
    }
    for (const auto& c : p.constraints()) {
        auto it = named.find(kRowPrefix + c.name);
        b.rows.push_back(it == named.end() ? VarStatus::Basic : it->second);
    }
    return b;
}

namespace {
std::string lp_name(const std::string& raw, const char* fallback, std::size_t index) {
    std::string s;
    for (char ch : raw) {
        const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.' || ch == '[' ||
                        ch == ']' || ch == '(' || ch == ')';
        s.push_back(ok ? ch : '_');
    }
    if (s.empty() || std::isdigit(static_cast<unsigned char>(s.front())) || s.front() == '.')
        s = std::string(fallback) + std::to_string(index) + (s.empty() ? "" : "_" + s);
    return s;
}

void write_terms(std::ostream& out, const std::vector<std::pair<double, std::string>>& terms) {
    bool first = true;
    for (const auto& [c, name] : terms) {
        if (c == 0.0) continue;
        out << (c < 0 ? (first ? "-" : " - ") : (first ? "" : " + "));
        const double a = std::abs(c);
        if (a != 1.0) out << a << ' ';
        out << name;
        first = false;
    }
    if (first) out << "0";
}
}  // namespace

void write_lp_text(const LinearProgram& p, std::ostream& out) {
    const auto old_precision = out.precision(17);
    std::vector<std::string> names;
    for (std::size_t j = 0; j < p.variables().size(); ++j) names.push_back(lp_name(p.variables()[j].name, "x", j));

    out << "\\ objective offset " << p.objective_offset << "\nMinimize\n obj: ";
    std::vector<std::pair<double, std::string>> obj;
    for (std::size_t j = 0; j < names.size(); ++j) obj.emplace_back(p.variables()[j].objective, names[j]);
    write_terms(out, obj);
    out << "\nSubject To\n";
    for (std::size_t i = 0; i < p.constraints().size(); ++i) {
        const auto& c = p.constraints()[i];
        out << ' ' << lp_name(c.name, "c", i) << ": ";
        std::vector<std::pair<double, std::string>> terms;
        for (const auto& t : c.terms) terms.emplace_back(t.coef, names[static_cast<std::size_t>(t.var)]);
        write_terms(out, terms);
        out << (c.relation == Relation::LessEqual ? " <= " : c.relation == Relation::Equal ? " = " : " >= ") << c.rhs
            << '\n';
    }
    out << "Bounds\n";
    for (std::size_t j = 0; j < names.size(); ++j) {
        const auto& v = p.variables()[j];
        if (v.is_binary) continue;
        if (v.lower == -kInf && v.upper == kInf) {
            out << ' ' << names[j] << " free\n";
        } else {
            out << ' ';
            if (v.lower == -kInf) out << "-inf";
            else out << v.lower;
            out << " <= " << names[j] << " <= ";
            if (v.upper == kInf) out << "+inf";
            else out << v.upper;
            out << '\n';
        }
    }
    bool any_binary = false;
    for (std::size_t j = 0; j < names.size(); ++j)
        if (p.variables()[j].is_binary) {
            if (!any_binary) out << "Binaries\n";
            any_binary = true;
            out << ' ' << names[j] << '\n';
        }
    if (!p.sos1().empty()) {
        out << "SOS\n";
        for (std::size_t k = 0; k < p.sos1().size(); ++k) {
            const auto [a, b] = p.sos1()[k];
            out << " s" << k << ": S1:: " << names[static_cast<std::size_t>(a)] << ":1 "
                << names[static_cast<std::size_t>(b)] << ":2\n";
        }
    }
    out << "End\n";
    out.precision(old_precision);
}

}  // namespace recopt::lp
