#include "simplex.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/SparseLU>

#include "recopt/errors.hpp"

namespace recopt::lp::detail {

namespace {
constexpr double kPivotTol = 1e-9;
constexpr double kDegenerateStep = 1e-12;
}  // namespace

Simplex::Simplex(const LinearProgram& p, const SolverOptions& opts) : prog_(p), opts_(opts) {
    n_ = p.variable_count();
    m_ = p.constraint_count();
    const int total = n_ + m_;
    cols_.resize(static_cast<std::size_t>(total));
    cost_.assign(static_cast<std::size_t>(total), 0.0);
    lo_.assign(static_cast<std::size_t>(total), 0.0);
    hi_.assign(static_cast<std::size_t>(total), 0.0);

    for (int i = 0; i < m_; ++i) {
        const auto& row = p.constraints()[static_cast<std::size_t>(i)];
        std::map<int, double> merged;
        for (const auto& t : row.terms) merged[t.var] += t.coef;
        for (const auto& [j, a] : merged) {
            if (a == 0.0) continue;
            cols_[static_cast<std::size_t>(j)].rows.push_back(i);
            cols_[static_cast<std::size_t>(j)].vals.push_back(a);
        }
        auto& slack = cols_[static_cast<std::size_t>(n_ + i)];
        slack.rows.push_back(i);
        slack.vals.push_back(-1.0);
        const auto s = static_cast<std::size_t>(n_ + i);
        switch (row.relation) {
            case Relation::LessEqual: lo_[s] = -kInf; hi_[s] = row.rhs; break;
            case Relation::GreaterEqual: lo_[s] = row.rhs; hi_[s] = kInf; break;
            case Relation::Equal: lo_[s] = row.rhs; hi_[s] = row.rhs; break;
        }
    }
    for (int j = 0; j < n_; ++j) {
        const auto& v = p.variables()[static_cast<std::size_t>(j)];
        cost_[static_cast<std::size_t>(j)] = v.objective;
        lo_[static_cast<std::size_t>(j)] = v.is_binary ? std::max(v.lower, 0.0) : v.lower;
        hi_[static_cast<std::size_t>(j)] = v.is_binary ? std::min(v.upper, 1.0) : v.upper;
    }
}

void Simplex::set_structural_bounds(const std::vector<double>& lo, const std::vector<double>& hi) {
    std::copy(lo.begin(), lo.end(), lo_.begin());
    std::copy(hi.begin(), hi.end(), hi_.begin());
}

double Simplex::dot_column(const Eigen::VectorXd& y, int j) const {
    const auto& c = cols_[static_cast<std::size_t>(j)];
    double s = 0.0;
    for (std::size_t k = 0; k < c.rows.size(); ++k) s += y(c.rows[k]) * c.vals[k];
    return s;
}

void Simplex::set_nonbasic_value(int j) {
    const auto u = static_cast<std::size_t>(j);
    switch (status_[u]) {
        case VarStatus::AtLower: x_[u] = lo_[u]; break;
        case VarStatus::AtUpper: x_[u] = hi_[u]; break;
        case VarStatus::FreeZero: x_[u] = 0.0; break;
        case VarStatus::Basic: break;
    }
}

namespace {
VarStatus default_status(double lo, double hi) {
    if (std::isfinite(lo)) return VarStatus::AtLower;
    if (std::isfinite(hi)) return VarStatus::AtUpper;
    return VarStatus::FreeZero;
}

VarStatus fix_status(VarStatus s, double lo, double hi) {
    switch (s) {
        case VarStatus::AtLower: return std::isfinite(lo) ? s : default_status(lo, hi);
        case VarStatus::AtUpper: return std::isfinite(hi) ? s : default_status(lo, hi);
        case VarStatus::FreeZero: return default_status(lo, hi);
        case VarStatus::Basic: return s;
    }
    return s;
}
}  // namespace

void Simplex::load_basis(const Basis* warm) {
    const int total = n_ + m_;
    status_.assign(static_cast<std::size_t>(total), VarStatus::AtLower);
    x_.assign(static_cast<std::size_t>(total), 0.0);
    const bool usable = warm && warm->variables.size() == static_cast<std::size_t>(n_) &&
                        warm->rows.size() == static_cast<std::size_t>(m_);
    std::vector<int> basic;
    for (int j = 0; j < total; ++j) {
        const auto u = static_cast<std::size_t>(j);
        VarStatus s;
        if (usable)
            s = j < n_ ? warm->variables[u] : warm->rows[static_cast<std::size_t>(j - n_)];
        else
            s = j < n_ ? default_status(lo_[u], hi_[u]) : VarStatus::Basic;
        status_[u] = fix_status(s, lo_[u], hi_[u]);
        if (status_[u] == VarStatus::Basic) basic.push_back(j);
    }
    if (static_cast<int>(basic.size()) == m_) {
        head_ = basic;
        position_.assign(static_cast<std::size_t>(total), -1);
        for (int i = 0; i < m_; ++i) position_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] = i;
        for (int j = 0; j < total; ++j)
            if (status_[static_cast<std::size_t>(j)] != VarStatus::Basic) set_nonbasic_value(j);
        if (refactor()) {
            compute_basics();
            return;
        }
    }
    crash(basic);
}

// Picks a nonsingular basis: as many of `preferred` as are independent,
// completed with slacks of the remaining rows.
void Simplex::crash(const std::vector<int>& preferred) {
    const int total = n_ + m_;
    std::vector<int> structural;
    for (int j : preferred)
        if (j < n_) structural.push_back(j);
    std::vector<int> chosen;
    std::vector<bool> row_covered(static_cast<std::size_t>(m_), false);
    if (!structural.empty() && m_ > 0) {
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m_, static_cast<Eigen::Index>(structural.size()));
        for (std::size_t k = 0; k < structural.size(); ++k) {
            const auto& col = cols_[static_cast<std::size_t>(structural[k])];
            for (std::size_t e = 0; e < col.rows.size(); ++e) c(col.rows[e], static_cast<Eigen::Index>(k)) = col.vals[e];
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(c);
        lu.setThreshold(1e-9);
        const auto rank = lu.rank();
        for (Eigen::Index k = 0; k < rank; ++k)
            chosen.push_back(structural[static_cast<std::size_t>(lu.permutationQ().indices()(k))]);
        for (int i = 0; i < m_; ++i)
            if (lu.permutationP().indices()(i) < rank) row_covered[static_cast<std::size_t>(i)] = true;
    }
    for (int i = 0; i < m_; ++i)
        if (!row_covered[static_cast<std::size_t>(i)]) chosen.push_back(n_ + i);
    std::sort(chosen.begin(), chosen.end());

    for (int j = 0; j < total; ++j) {
        const auto u = static_cast<std::size_t>(j);
        if (status_[u] == VarStatus::Basic) status_[u] = default_status(lo_[u], hi_[u]);
    }
    for (int j : chosen) status_[static_cast<std::size_t>(j)] = VarStatus::Basic;
    head_ = chosen;
    position_.assign(static_cast<std::size_t>(total), -1);
    for (int i = 0; i < m_; ++i) position_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] = i;
    for (int j = 0; j < total; ++j)
        if (status_[static_cast<std::size_t>(j)] != VarStatus::Basic) set_nonbasic_value(j);
    if (!refactor()) throw SolverError("simplex: crash basis is singular");
    compute_basics();
}

bool Simplex::refactor() {
    if (m_ == 0) {
        binv_.resize(0, 0);
        return true;
    }
    std::vector<Eigen::Triplet<double>> entries;
    double scale = 1.0;
    for (int i = 0; i < m_; ++i) {
        const auto& col = cols_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])];
        for (std::size_t e = 0; e < col.rows.size(); ++e) {
            entries.emplace_back(col.rows[e], i, col.vals[e]);
            scale = std::max(scale, std::abs(col.vals[e]));
        }
    }
    Eigen::SparseMatrix<double> b(m_, m_);
    b.setFromTriplets(entries.begin(), entries.end());
    b.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(b);
    lu.factorize(b);
    if (lu.info() != Eigen::Success) return false;
    binv_ = lu.solve(Eigen::MatrixXd::Identity(m_, m_));
    if (lu.info() != Eigen::Success || !binv_.allFinite()) return false;
    // tiny pivots pass the factorisation; the residual exposes them
    const Eigen::MatrixXd residual = b * binv_ - Eigen::MatrixXd::Identity(m_, m_);
    return residual.cwiseAbs().maxCoeff() <= 1e-9 * scale;
}

void Simplex::compute_basics() {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < n_ + m_; ++j) {
        if (status_[static_cast<std::size_t>(j)] == VarStatus::Basic) continue;
        const double v = x_[static_cast<std::size_t>(j)];
        if (v == 0.0) continue;
        const auto& c = cols_[static_cast<std::size_t>(j)];
        for (std::size_t k = 0; k < c.rows.size(); ++k) rhs(c.rows[k]) -= c.vals[k] * v;
    }
    const Eigen::VectorXd xb = binv_ * rhs;
    for (int i = 0; i < m_; ++i) x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] = xb(i);
}

double Simplex::infeasibility(int j) const {
    const auto u = static_cast<std::size_t>(j);
    if (x_[u] < lo_[u]) return lo_[u] - x_[u];
    if (x_[u] > hi_[u]) return x_[u] - hi_[u];
    return 0.0;
}

Status Simplex::iterate(long& iterations) {
    const int total = n_ + m_;
    const double ftol = opts_.feasibility_tol * 0.1;
    const double dtol = opts_.optimality_tol;
    int since_refactor = 0;
    int degenerate_run = 0;
    bool fresh = true;
    bool y_valid = false;  // phase-2 duals, updated in place across pivots
    Eigen::VectorXd cb(m_), y(m_), alpha(m_);

    while (true) {
        if (iterations >= opts_.max_iterations) return Status::IterationLimit;
        if (since_refactor >= opts_.refactor_every) {
            if (!refactor()) crash(head_);
            compute_basics();
            since_refactor = 0;
            fresh = true;
            y_valid = false;
        }

        bool phase1 = false;
        for (int i = 0; i < m_; ++i) {
            const int b = head_[static_cast<std::size_t>(i)];
            const auto u = static_cast<std::size_t>(b);
            if (x_[u] < lo_[u] - ftol) {
                cb(i) = -1.0;
                phase1 = true;
            } else if (x_[u] > hi_[u] + ftol) {
                cb(i) = 1.0;
                phase1 = true;
            } else {
                cb(i) = 0.0;
            }
        }
        if (phase1) {
            y.noalias() = binv_.transpose() * cb;
            y_valid = false;
        } else if (!y_valid) {
            for (int i = 0; i < m_; ++i) cb(i) = cost_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])];
            y.noalias() = binv_.transpose() * cb;
            y_valid = true;
        }

        const bool bland = degenerate_run >= opts_.bland_after;
        int q = -1;
        double best = 0.0;
        double dq = 0.0;
        for (int j = 0; j < total; ++j) {
            const auto u = static_cast<std::size_t>(j);
            const VarStatus s = status_[u];
            if (s == VarStatus::Basic) continue;
            if (lo_[u] == hi_[u]) continue;
            const double d = (phase1 ? 0.0 : cost_[u]) - dot_column(y, j);
            bool eligible = false;
            if (s == VarStatus::AtLower) eligible = d < -dtol;
            else if (s == VarStatus::AtUpper) eligible = d > dtol;
            else eligible = std::abs(d) > dtol;
            if (!eligible) continue;
            if (bland) {
                q = j;
                dq = d;
                break;
            }
            if (std::abs(d) > best) {
                best = std::abs(d);
                q = j;
                dq = d;
            }
        }

        if (q < 0) {
            if (!fresh) {
                if (!refactor()) crash(head_);
                compute_basics();
                since_refactor = 0;
                fresh = true;
                y_valid = false;
                continue;
            }
            return phase1 ? Status::Infeasible : Status::Optimal;
        }

        const double dir = dq < 0.0 ? 1.0 : -1.0;
        alpha.setZero();
        {
            const auto& col = cols_[static_cast<std::size_t>(q)];
            for (std::size_t k = 0; k < col.rows.size(); ++k) alpha.noalias() += col.vals[k] * binv_.col(col.rows[k]);
        }

        // Ratio test: x_B moves with rate -dir*alpha per unit step.
        auto block = [&](int i, double& bound) -> bool {
            const int b = head_[static_cast<std::size_t>(i)];
            const auto u = static_cast<std::size_t>(b);
            const double rate = -dir * alpha(i);
            if (rate < 0.0) {
                if (phase1 && x_[u] < lo_[u] - ftol) return false;
                if (phase1 && x_[u] > hi_[u] + ftol) bound = hi_[u];
                else bound = lo_[u];
            } else {
                if (phase1 && x_[u] > hi_[u] + ftol) return false;
                if (phase1 && x_[u] < lo_[u] - ftol) bound = lo_[u];
                else bound = hi_[u];
            }
            return std::isfinite(bound);
        };

        int r = -1;
        double theta = kInf;
        double leave_bound = 0.0;
        if (bland) {
            int r_var = total;
            for (int i = 0; i < m_; ++i) {
                if (std::abs(alpha(i)) <= kPivotTol) continue;
                double bound;
                if (!block(i, bound)) continue;
                const double rate = -dir * alpha(i);
                const double ratio =
                    std::max(0.0, (bound - x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])]) / rate);
                const int var = head_[static_cast<std::size_t>(i)];
                if (ratio < theta - kDegenerateStep || (std::abs(ratio - theta) <= kDegenerateStep && var < r_var)) {
                    theta = std::min(theta, ratio);
                    r = i;
                    r_var = var;
                    leave_bound = bound;
                }
            }
        } else {
            double theta_max = kInf;
            for (int i = 0; i < m_; ++i) {
                if (std::abs(alpha(i)) <= kPivotTol) continue;
                double bound;
                if (!block(i, bound)) continue;
                const double rate = -dir * alpha(i);
                const double xv = x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])];
                const double relaxed = (bound - xv + (rate > 0 ? ftol : -ftol)) / rate;
                theta_max = std::min(theta_max, relaxed);
            }
            double best_pivot = 0.0;
            if (std::isfinite(theta_max)) {
                for (int i = 0; i < m_; ++i) {
                    if (std::abs(alpha(i)) <= kPivotTol) continue;
                    double bound;
                    if (!block(i, bound)) continue;
                    const double rate = -dir * alpha(i);
                    const double xv = x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])];
                    const double ratio = (bound - xv) / rate;
                    if (ratio <= theta_max && std::abs(alpha(i)) > best_pivot) {
                        best_pivot = std::abs(alpha(i));
                        r = i;
                        theta = std::max(0.0, ratio);
                        leave_bound = bound;
                    }
                }
            }
        }

        const auto uq = static_cast<std::size_t>(q);
        const double range = hi_[uq] - lo_[uq];  // inf for free or half-bounded
        ++iterations;
        ++since_refactor;
        fresh = false;

        if (r < 0 && !std::isfinite(range)) {
            if (!phase1) return Status::Unbounded;
            throw SolverError("simplex: unbounded phase-1 direction");
        }

        if (r < 0 || range <= theta) {
            // Bound flip of the entering variable, no basis change.
            const double step = range;
            x_[uq] += dir * step;
            status_[uq] = dir > 0 ? VarStatus::AtUpper : VarStatus::AtLower;
            x_[uq] = dir > 0 ? hi_[uq] : lo_[uq];
            for (int i = 0; i < m_; ++i)
                x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] -= dir * alpha(i) * step;
            degenerate_run = 0;
            continue;
        }

        for (int i = 0; i < m_; ++i)
            x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] -= dir * alpha(i) * theta;
        x_[uq] += dir * theta;

        const int leaving = head_[static_cast<std::size_t>(r)];
        const auto ul = static_cast<std::size_t>(leaving);
        x_[ul] = leave_bound;
        if (lo_[ul] == hi_[ul] || leave_bound == lo_[ul]) status_[ul] = VarStatus::AtLower;
        else status_[ul] = VarStatus::AtUpper;
        position_[ul] = -1;
        status_[uq] = VarStatus::Basic;
        head_[static_cast<std::size_t>(r)] = q;
        position_[uq] = r;

        const double pivot = alpha(r);
        binv_.row(r) /= pivot;
        alpha(r) = 0.0;
        binv_.noalias() -= alpha * binv_.row(r);
        if (y_valid) y.noalias() += dq * binv_.row(r).transpose();

        degenerate_run = theta <= kDegenerateStep ? degenerate_run + 1 : 0;
    }
}

Solution Simplex::finish(Status status, long iterations) {
    Solution sol;
    sol.status = status;
    sol.iterations = iterations;
    sol.basis.variables.assign(status_.begin(), status_.begin() + n_);
    sol.basis.rows.assign(status_.begin() + n_, status_.end());
    if (status != Status::Optimal) return sol;

    sol.values.assign(x_.begin(), x_.begin() + n_);
    for (int j = 0; j < n_; ++j) {
        auto& v = sol.values[static_cast<std::size_t>(j)];
        v = std::clamp(v, lo_[static_cast<std::size_t>(j)], hi_[static_cast<std::size_t>(j)]);
        if (v == 0.0) v = 0.0;  // drop negative zero
    }
    double obj = prog_.objective_offset;
    for (int j = 0; j < n_; ++j) obj += cost_[static_cast<std::size_t>(j)] * sol.values[static_cast<std::size_t>(j)];
    sol.objective_value = obj;

    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb(i) = cost_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])];
    const Eigen::VectorXd y = binv_.transpose() * cb;
    double bound = prog_.objective_offset;
    for (int j = 0; j < n_ + m_; ++j) {
        const auto u = static_cast<std::size_t>(j);
        if (status_[u] == VarStatus::Basic) continue;
        const double d = cost_[u] - dot_column(y, j);
        if (std::abs(d) <= 1e-12) continue;
        const double b = d > 0.0 ? lo_[u] : hi_[u];
        if (!std::isfinite(b)) {
            if (std::abs(d) > 1e-7) {
                bound = -kInf;
                break;
            }
            continue;
        }
        bound += d * b;
    }
    sol.dual_bound = bound;
    return sol;
}

Solution Simplex::solve(const Basis* warm) {
    load_basis(warm);
    long iterations = 0;
    for (int attempt = 0; attempt < 3; ++attempt) {
        const Status st = iterate(iterations);
        Solution sol = finish(st, iterations);
        if (st != Status::Optimal) return sol;

        bool ok = true;
        for (int j = 0; j < n_ && ok; ++j) {
            const double v = x_[static_cast<std::size_t>(j)];
            const double tol = opts_.feasibility_tol * std::max(1.0, std::abs(v));
            ok = v >= lo_[static_cast<std::size_t>(j)] - tol && v <= hi_[static_cast<std::size_t>(j)] + tol;
        }
        for (int i = 0; i < m_ && ok; ++i) {
            const auto& row = prog_.constraints()[static_cast<std::size_t>(i)];
            double act = 0.0, scale = 1.0;
            for (const auto& t : row.terms) {
                const double v = t.coef * sol.values[static_cast<std::size_t>(t.var)];
                act += v;
                scale = std::max(scale, std::abs(v));
            }
            const double tol = opts_.feasibility_tol * scale;
            const auto s = static_cast<std::size_t>(n_ + i);
            ok = act >= lo_[s] - tol && act <= hi_[s] + tol;
        }
        if (ok) return sol;
        if (!refactor()) crash(head_);
        compute_basics();
    }
    throw SolverError("simplex: solution failed re-verification");
}

}  // namespace recopt::lp::detail
