#include "recopt/policies.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "recopt/billing.hpp"
#include "recopt/errors.hpp"

namespace recopt {

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

}  // namespace

void PolicySpec::validate() const {
    if (kind != PolicyKind::Mpc) return;
    if (!full_horizon && horizon < 1) throw PreconditionError("policy: K must be >= 1");
    if (!(foresight_alpha > 0.0 && foresight_alpha <= 1.0)) throw PreconditionError("policy: alpha must lie in (0, 1]");
}

std::string PolicySpec::label() const {
    switch (kind) {
        case PolicyKind::RecRule: return "rec";
        case PolicyKind::SelfRule: return "self";
        case PolicyKind::RlExternal: return "rl";
        case PolicyKind::Mpc: break;
    }
    if (full_horizon) return include_peaks ? "opt" : "opt-retail";
    return std::string(include_peaks ? "mpc" : "mpc-retail") + ":K=" + std::to_string(horizon) +
           ":alpha=" + format_double(foresight_alpha);
}

PolicySpec parse_policy_spec(const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.empty() || parts[0].empty()) throw ConfigError("policy: empty policy spec");
    PolicySpec spec;
    const std::string& head = parts[0];
    if (head == "rec") spec.kind = PolicyKind::RecRule;
    else if (head == "self") spec.kind = PolicyKind::SelfRule;
    else if (head == "rl") spec.kind = PolicyKind::RlExternal;
    else if (head == "opt" || head == "opt-retail" || head == "mpc" || head == "mpc-retail") {
        spec.kind = PolicyKind::Mpc;
        spec.full_horizon = head.starts_with("opt");
        spec.include_peaks = !head.ends_with("-retail");
    } else {
        throw ConfigError("policy: unknown policy '" + head + "' (rec, self, rl, opt, opt-retail, mpc, mpc-retail)");
    }
    for (std::size_t i = 1; i < parts.size(); ++i) {
        if (spec.kind != PolicyKind::Mpc || spec.full_horizon)
            throw ConfigError("policy: '" + head + "' takes no parameters");
        const auto eq = parts[i].find('=');
        if (eq == std::string::npos) throw ConfigError("policy: expected key=value, got '" + parts[i] + "'");
        const std::string key = parts[i].substr(0, eq), value = parts[i].substr(eq + 1);
        const char* first = value.data();
        const char* last = first + value.size();
        if (key == "K" || key == "k") {
            auto [ptr, ec] = std::from_chars(first, last, spec.horizon);
            if (ec != std::errc{} || ptr != last) throw ConfigError("policy: bad K '" + value + "'");
        } else if (key == "alpha") {
            auto [ptr, ec] = std::from_chars(first, last, spec.foresight_alpha);
            if (ec != std::errc{} || ptr != last) throw ConfigError("policy: bad alpha '" + value + "'");
        } else {
            throw ConfigError("policy: unknown parameter '" + key + "' (K, alpha)");
        }
    }
    try {
        spec.validate();
    } catch (const PreconditionError& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

// ---------------------------------------------------------------- rules

Action rule_action(const RecConfig& cfg, const SimState& state, const Exogenous& exo, RuleMode mode) {
    const std::size_t nb = cfg.batteries.size();
    if (nb == 0) return zero_action(cfg);
    const double dt = cfg.time_grid.step_hours;
    const double c1 = mode == RuleMode::Rec ? 1.0 : 0.0;
    const double c2 = mode == RuleMode::Self ? 1.0 : 0.0;

    std::vector<double> lo(nb), hi(nb);
    {
        Action down = zero_action(cfg), up = zero_action(cfg);
        for (std::size_t b = 0; b < nb; ++b) {
            down.battery_power[b] = -cfg.batteries[b].max_discharge_power;
            up.battery_power[b] = cfg.batteries[b].max_charge_power;
        }
        down = admissible(cfg, state, down);
        up = admissible(cfg, state, up);
        lo = down.battery_power;
        hi = up.battery_power;
    }

    lp::LinearProgram prog;
    std::vector<int> u(nb);
    for (std::size_t b = 0; b < nb; ++b) u[b] = prog.add_variable("u[" + std::to_string(b) + "]", lo[b], hi[b]);

    double rec_net = 0.0;
    std::vector<lp::Term> rec_terms;
    for (std::size_t m = 0; m < cfg.member_count(); ++m) {
        const double net = dt * (exo.consumption.at(m) - exo.production.at(m));
        rec_net += net;
        std::vector<lp::Term> own;
        for (std::size_t b = 0; b < nb; ++b)
            if (cfg.batteries[b].owner == m) own.push_back({u[b], dt});
        rec_terms.insert(rec_terms.end(), own.begin(), own.end());
        if (own.empty() || c2 == 0.0) continue;
        const int l = prog.add_variable("l[" + std::to_string(m) + "]", 0.0, lp::kInf, c2);
        std::vector<lp::Term> pos{{l, 1.0}}, neg{{l, 1.0}};
        for (const auto& t : own) {
            pos.push_back({t.var, -t.coef});
            neg.push_back({t.var, t.coef});
        }
        prog.add_constraint("lpos[" + std::to_string(m) + "]", pos, lp::Relation::GreaterEqual, net);
        prog.add_constraint("lneg[" + std::to_string(m) + "]", neg, lp::Relation::GreaterEqual, -net);
    }
    if (c1 != 0.0) {
        const int l = prog.add_variable("lrec", 0.0, lp::kInf, c1);
        std::vector<lp::Term> pos{{l, 1.0}}, neg{{l, 1.0}};
        for (const auto& t : rec_terms) {
            pos.push_back({t.var, -t.coef});
            neg.push_back({t.var, t.coef});
        }
        prog.add_constraint("lrec_pos", pos, lp::Relation::GreaterEqual, rec_net);
        prog.add_constraint("lrec_neg", neg, lp::Relation::GreaterEqual, -rec_net);
    }

    const auto sol = lp::solve_lp(prog);
    if (sol.status != lp::Status::Optimal)
        throw SolverError("rule_action: solver returned " + lp::to_string(sol.status));
    Action a = zero_action(cfg);
    for (std::size_t b = 0; b < nb; ++b) {
        double v = sol.values[static_cast<std::size_t>(u[b])];
        if (std::abs(v) <= 1e-12) v = 0.0;
        a.battery_power[b] = v;
    }
    return admissible(cfg, state, a);
}

// ---------------------------------------------------------------- MPC program

Action MpcProgram::action_at(const std::vector<double>& values, int k) const {
    Action a;
    a.battery_power.assign(static_cast<std::size_t>(batteries), 0.0);
    for (int b = 0; b < batteries; ++b) {
        const auto i = static_cast<std::size_t>(k * batteries + b);
        double v = power[i] >= 0 ? values.at(static_cast<std::size_t>(power[i]))
                                 : values.at(static_cast<std::size_t>(charge[i])) -
                                       values.at(static_cast<std::size_t>(discharge[i]));
        if (std::abs(v) <= 1e-12) v = 0.0;
        a.battery_power[static_cast<std::size_t>(b)] = v;
    }
    return a;
}

namespace {

struct BlockInfo {
    bool billed = false;
    int periods = 0;
    double tau = 1.0;
    double discount = 1.0;
    long absolute = 0;  // billing-period index used in names
};

std::string idx(long a, long b) { return "[" + std::to_string(a) + "," + std::to_string(b) + "]"; }

// One billed reading C = constant + sum(vars) of a member in a market period.
struct Reading {
    double constant = 0.0;
    std::vector<int> vars;
};

}  // namespace

MpcProgram build_mpc_program(const RecConfig& cfg, const SimState& state, const ExogenousSequence& forecast,
                             const MpcOptions& opts) {
    const auto& g = cfg.time_grid;
    const int H = static_cast<int>(forecast.size());
    if (H < 1) throw PreconditionError("mpc: forecast must cover at least one step");
    if (state.soc.size() != cfg.batteries.size()) throw PreconditionError("mpc: state has the wrong battery count");
    const std::size_t members = cfg.member_count();
    const int R = g.market_periods_per_billing;
    const int N = g.steps_per_billing();
    const double dt = g.step_hours;
    const Tariffs& tf = cfg.tariffs;
    const double peak_in = opts.include_peaks ? tf.offtake_peak_price : 0.0;
    const double peak_out = opts.include_peaks ? tf.injection_peak_price : 0.0;

    // Time structure from the counter automaton.
    std::vector<Counters> c(static_cast<std::size_t>(H) + 1);
    c[0] = counters_of(state);
    for (int k = 0; k < H; ++k) c[static_cast<std::size_t>(k) + 1] = next_counters(g, c[static_cast<std::size_t>(k)]);
    std::vector<int> block(static_cast<std::size_t>(H)), period(static_cast<std::size_t>(H));
    int current = 0;
    for (int k = 0; k < H; ++k) {
        bool resets = false;
        period[static_cast<std::size_t>(k)] = flow_period(g, c[static_cast<std::size_t>(k)], resets);
        if (resets) ++current;
        block[static_cast<std::size_t>(k)] = current;
    }
    std::vector<BlockInfo> blocks(static_cast<std::size_t>(current) + 1);
    long last_abs = -1;
    for (int beta = 0; beta <= current; ++beta) {
        auto& info = blocks[static_cast<std::size_t>(beta)];
        int first = -1, end = -1, last = -1;
        for (int k = 0; k < H; ++k) {
            if (block[static_cast<std::size_t>(k)] != beta) continue;
            if (first < 0) first = k;
            last = k;
            if (is_billing_end(g, c[static_cast<std::size_t>(k) + 1])) end = k;
        }
        if (first < 0) continue;  // block 0 when the state sits on a billing end
        info.absolute = std::max<long>((state.t + first) / N, last_abs + 1);
        last_abs = info.absolute;
        if (end >= 0) {
            info.billed = true;
            info.periods = R;
            info.tau = 1.0;
            info.discount = std::pow(g.discount, end);
        } else if (opts.prorate_tail) {
            info.billed = true;
            info.tau = static_cast<double>(elapsed_steps(g, c[static_cast<std::size_t>(H)])) / N;
            info.periods = billed_periods(R, info.tau);
            info.discount = std::pow(g.discount, last);
        }
    }

    MpcProgram out;
    out.horizon = H;
    out.batteries = static_cast<int>(cfg.batteries.size());
    lp::LinearProgram& prog = out.program;
    const long t0 = state.t;

    // Battery powers and state-of-charge chain.
    const std::size_t nb = cfg.batteries.size();
    out.power.assign(static_cast<std::size_t>(H) * nb, -1);
    out.charge = out.power;
    out.discharge = out.power;
    std::vector<int> soc_prev(nb, -1);
    for (int k = 0; k < H; ++k) {
        for (std::size_t b = 0; b < nb; ++b) {
            const auto& bat = cfg.batteries[b];
            const auto slot = static_cast<std::size_t>(k) * nb + b;
            const std::string tag = idx(static_cast<long>(b), t0 + k);
            std::vector<lp::Term> dyn;
            if (bat.charge_efficiency == 1.0 && bat.discharge_efficiency == 1.0) {
                out.power[slot] = prog.add_variable("u" + tag, -bat.max_discharge_power, bat.max_charge_power);
                dyn.push_back({out.power[slot], -dt});
            } else {
                out.charge[slot] = prog.add_variable("uc" + tag, 0.0, bat.max_charge_power);
                out.discharge[slot] = prog.add_variable("ud" + tag, 0.0, bat.max_discharge_power);
                prog.add_sos1(out.charge[slot], out.discharge[slot]);
                dyn.push_back({out.charge[slot], -dt * bat.charge_efficiency});
                dyn.push_back({out.discharge[slot], dt / bat.discharge_efficiency});
            }
            const int soc = prog.add_variable("soc" + idx(static_cast<long>(b), t0 + k + 1), 0.0, bat.capacity);
            dyn.push_back({soc, 1.0});
            double rhs = 0.0;
            if (soc_prev[b] >= 0) dyn.push_back({soc_prev[b], -1.0});
            else rhs = state.soc[b];
            prog.add_constraint("dyn" + tag, dyn, lp::Relation::Equal, rhs);
            soc_prev[b] = soc;
        }
    }

    // Billed readings, one per (block, period, member).
    std::map<std::tuple<int, int, std::size_t>, Reading> offtake, injection;
    auto billed_slot = [&](int beta, int n) {
        const auto& info = blocks[static_cast<std::size_t>(beta)];
        return info.billed && n < info.periods;
    };
    for (int beta = 0; beta <= current; ++beta) {
        if (!billed_slot(beta, 0)) continue;
        const bool past = beta == 0 && !is_billing_end(g, c[0]);
        for (int n = 0; n < blocks[static_cast<std::size_t>(beta)].periods; ++n)
            for (std::size_t m = 0; m < members; ++m) {
                const auto key = std::make_tuple(beta, n, m);
                offtake[key].constant =
                    past ? state.meters.consumption(static_cast<Eigen::Index>(m), n) : 0.0;
                injection[key].constant = past ? state.meters.production(static_cast<Eigen::Index>(m), n) : 0.0;
            }
    }
    for (int k = 0; k < H; ++k) {
        const int beta = block[static_cast<std::size_t>(k)], n = period[static_cast<std::size_t>(k)];
        if (!billed_slot(beta, n)) continue;  // flows that are never billed do not matter
        const auto& f = forecast[static_cast<std::size_t>(k)];
        for (std::size_t m = 0; m < members; ++m) {
            const double net = dt * (f.consumption.at(m) - f.production.at(m));
            const auto key = std::make_tuple(beta, n, m);
            std::vector<lp::Term> own;
            for (std::size_t b = 0; b < nb; ++b) {
                if (cfg.batteries[b].owner != m) continue;
                const auto slot = static_cast<std::size_t>(k) * nb + b;
                if (out.power[slot] >= 0) own.push_back({out.power[slot], -dt});
                else {
                    own.push_back({out.charge[slot], -dt});
                    own.push_back({out.discharge[slot], dt});
                }
            }
            if (own.empty()) {
                offtake[key].constant += std::max(net, 0.0);
                injection[key].constant += std::max(-net, 0.0);
                continue;
            }
            const std::string tag = idx(static_cast<long>(m), t0 + k);
            const int lm = prog.add_variable("lm" + tag, 0.0, lp::kInf);
            const int lp_ = prog.add_variable("lp" + tag, 0.0, lp::kInf);
            prog.add_sos1(lm, lp_);
            std::vector<lp::Term> row{{lm, 1.0}, {lp_, -1.0}};
            row.insert(row.end(), own.begin(), own.end());
            prog.add_constraint("flow" + tag, row, lp::Relation::Equal, net);
            offtake[key].vars.push_back(lm);
            injection[key].vars.push_back(lp_);
        }
    }

    // Bills of every billed block.
    for (int beta = 0; beta <= current; ++beta) {
        const auto& info = blocks[static_cast<std::size_t>(beta)];
        if (!info.billed) continue;
        const double w = info.discount;
        struct PeakEntry {
            double constant;
            int share;
            std::vector<int> vars;
        };
        std::vector<std::vector<PeakEntry>> peaks_in(members), peaks_out(members);
        for (int n = 0; n < info.periods; ++n) {
            const long pabs = info.absolute * R + n;
            std::vector<lp::Term> balance;
            for (std::size_t m = 0; m < members; ++m) {
                const auto key = std::make_tuple(beta, n, m);
                const Reading& in = offtake[key];
                const Reading& out_r = injection[key];
                const double buy = tf.buy_price[m], sell = tf.sell_price[m];
                const std::string tag = idx(static_cast<long>(m), pabs);
                prog.objective_offset += w * (buy * in.constant - sell * out_r.constant);
                int em = -1, ep = -1;
                if (in.vars.empty() && out_r.vars.empty()) {
                    const double cap_in = std::max(in.constant - out_r.constant, 0.0);
                    const double cap_out = std::max(out_r.constant - in.constant, 0.0);
                    if (cap_in > 0.0) em = prog.add_variable("em" + tag, 0.0, cap_in, w * (tf.rec_fee_consume - buy));
                    if (cap_out > 0.0)
                        ep = prog.add_variable("ep" + tag, 0.0, cap_out, w * (tf.rec_fee_produce + sell));
                } else {
                    for (int v : in.vars) prog.add_objective(v, w * buy);
                    for (int v : out_r.vars) prog.add_objective(v, -w * sell);
                    // netted reading split into nonnegative parts
                    const int nm = prog.add_variable("nm" + tag, 0.0, lp::kInf);
                    const int np = prog.add_variable("np" + tag, 0.0, lp::kInf);
                    prog.add_sos1(nm, np);
                    std::vector<lp::Term> net{{nm, 1.0}, {np, -1.0}};
                    for (int v : in.vars) net.push_back({v, -1.0});
                    for (int v : out_r.vars) net.push_back({v, 1.0});
                    prog.add_constraint("net" + tag, net, lp::Relation::Equal, in.constant - out_r.constant);
                    em = prog.add_variable("em" + tag, 0.0, lp::kInf, w * (tf.rec_fee_consume - buy));
                    ep = prog.add_variable("ep" + tag, 0.0, lp::kInf, w * (tf.rec_fee_produce + sell));
                    prog.add_constraint("emn" + tag, {{em, 1.0}, {nm, -1.0}}, lp::Relation::LessEqual, 0.0);
                    prog.add_constraint("epn" + tag, {{ep, 1.0}, {np, -1.0}}, lp::Relation::LessEqual, 0.0);
                    std::vector<lp::Term> em_cap{{em, 1.0}}, ep_cap{{ep, 1.0}};
                    for (int v : in.vars) em_cap.push_back({v, -1.0});
                    for (int v : out_r.vars) ep_cap.push_back({v, -1.0});
                    prog.add_constraint("emc" + tag, em_cap, lp::Relation::LessEqual, in.constant);
                    prog.add_constraint("epc" + tag, ep_cap, lp::Relation::LessEqual, out_r.constant);
                }
                if (em >= 0) balance.push_back({em, 1.0});
                if (ep >= 0) balance.push_back({ep, -1.0});
                peaks_in[m].push_back({in.constant, em, in.vars});
                peaks_out[m].push_back({out_r.constant, ep, out_r.vars});
            }
            if (!balance.empty())
                prog.add_constraint("bal[" + std::to_string(pabs) + "]", balance, lp::Relation::Equal, 0.0);
        }
        for (std::size_t m = 0; m < members; ++m) {
            for (int side = 0; side < 2; ++side) {
                const double price = side == 0 ? peak_in : peak_out;
                if (price == 0.0) continue;
                const auto& entries = side == 0 ? peaks_in[m] : peaks_out[m];
                double floor = 0.0;
                for (const auto& e : entries)
                    if (e.share < 0 && e.vars.empty()) floor = std::max(floor, e.constant);
                const std::string tag = idx(static_cast<long>(m), info.absolute);
                const int p = prog.add_variable((side == 0 ? "pin" : "pout") + tag, floor, lp::kInf,
                                                w * info.tau * price);
                int row = 0;
                for (const auto& e : entries) {
                    ++row;
                    if (e.share < 0 && e.vars.empty()) continue;
                    if (e.vars.empty() && e.constant <= floor) continue;
                    std::vector<lp::Term> terms{{p, 1.0}};
                    if (e.share >= 0) terms.push_back({e.share, 1.0});
                    for (int v : e.vars) terms.push_back({v, -1.0});
                    prog.add_constraint((side == 0 ? "pkin" : "pkout") + tag + std::to_string(row), terms,
                                        lp::Relation::GreaterEqual, e.constant);
                }
            }
        }
    }
    return out;
}

Action mpc_action(const RecConfig& cfg, const SimState& state, const ExogenousSequence& forecast,
                  const MpcOptions& opts, lp::Solution* solution) {
    const MpcProgram mp = build_mpc_program(cfg, state, forecast, opts);
    lp::Solution sol = lp::solve_milp(mp.program);
    const bool usable = sol.status == lp::Status::Optimal ||
                        (sol.status == lp::Status::IterationLimit && sol.has_incumbent());
    if (!usable) throw SolverError("mpc: solver returned " + lp::to_string(sol.status));
    Action a = admissible(cfg, state, mp.action_at(sol.values, 0));
    if (solution) *solution = std::move(sol);
    return a;
}

// ---------------------------------------------------------------- policies

RulePolicy::RulePolicy(const RecConfig& cfg, PolicySpec spec) : Policy(std::move(spec)), cfg_(cfg) {}

Action RulePolicy::act(const SimState& state, const ExogenousSequence& truth, const ExogenousSequence&) {
    const RuleMode mode = spec_.kind == PolicyKind::SelfRule ? RuleMode::Self : RuleMode::Rec;
    return rule_action(cfg_, state, truth.at(static_cast<std::size_t>(state.t)), mode);
}

MpcPolicy::MpcPolicy(const RecConfig& cfg, PolicySpec spec) : Policy(std::move(spec)), cfg_(cfg) {
    spec_.validate();
}

void MpcPolicy::reset() {
    plan_.reset();
    warm_.clear();
}

namespace {

bool same_state(const SimState& a, const SimState& b) {
    if (counters_of(a) != counters_of(b)) return false;
    for (std::size_t i = 0; i < a.soc.size(); ++i)
        if (std::abs(a.soc[i] - b.soc[i]) > 1e-9 * std::max(1.0, std::abs(b.soc[i]))) return false;
    if (a.meters.consumption.rows() != b.meters.consumption.rows() ||
        a.meters.consumption.cols() != b.meters.consumption.cols())
        return false;
    const double scale = std::max(1.0, b.meters.consumption.cwiseAbs().maxCoeff());
    return (a.meters.consumption - b.meters.consumption).cwiseAbs().maxCoeff() <= 1e-9 * scale &&
           (a.meters.production - b.meters.production).cwiseAbs().maxCoeff() <= 1e-9 * scale;
}

bool same_exo(const Exogenous& a, const Exogenous& b) {
    return a.consumption == b.consumption && a.production == b.production;
}

}  // namespace

bool MpcPolicy::plan_matches(const SimState& state, const ExogenousSequence& forecast) const {
    if (!plan_) return false;
    const Plan& p = *plan_;
    if (state.t < p.start || state.t >= p.end) return false;
    if (p.end != state.t + static_cast<int>(forecast.size())) return false;
    const auto off = static_cast<std::size_t>(state.t - p.start);
    for (std::size_t k = 0; k < forecast.size(); ++k)
        if (!same_exo(forecast[k], p.forecast[off + k])) return false;
    return same_state(state, p.predicted[off]);
}

Action MpcPolicy::act(const SimState& state, const ExogenousSequence& truth, const ExogenousSequence& base) {
    const int T = cfg_.time_grid.horizon_steps;
    if (state.t >= T) return zero_action(cfg_);
    const int H = spec_.full_horizon ? T - state.t : std::min(spec_.horizon, T - state.t);
    const auto forecast = blend_foresight(truth, base, spec_.foresight_alpha, static_cast<std::size_t>(state.t),
                                          static_cast<std::size_t>(H));
    if (plan_matches(state, forecast))
        return admissible(cfg_, state, plan_->actions[static_cast<std::size_t>(state.t - plan_->start)]);

    MpcOptions opts;
    opts.include_peaks = spec_.include_peaks;
    opts.prorate_tail = state.t + H < T;
    const MpcProgram mp = build_mpc_program(cfg_, state, forecast, opts);
    lp::Basis warm;
    const lp::Basis* warm_ptr = nullptr;
    if (!warm_.empty()) {
        warm = lp::map_basis(mp.program, warm_);
        warm_ptr = &warm;
    }
    const lp::Solution sol = lp::solve_milp(mp.program, {}, warm_ptr);
    ++solves_;
    const bool optimal = sol.status == lp::Status::Optimal;
    if (!optimal && !(sol.status == lp::Status::IterationLimit && sol.has_incumbent()))
        throw SolverError("mpc: solver returned " + lp::to_string(sol.status) + " at t=" + std::to_string(state.t));
    warm_ = lp::name_basis(mp.program, sol.basis);

    Plan plan;
    plan.start = state.t;
    plan.end = state.t + H;
    plan.forecast = forecast;
    SimState s = state;
    for (int k = 0; k < H; ++k) {
        Action a = admissible(cfg_, s, mp.action_at(sol.values, k));
        plan.predicted.push_back(s);
        plan.actions.push_back(a);
        s = transition(cfg_, s, forecast[static_cast<std::size_t>(k)], a).next;
    }
    // only an optimal plan stays optimal for the remaining steps
    if (optimal) plan_ = std::move(plan);
    else plan_.reset();
    return admissible(cfg_, state, mp.action_at(sol.values, 0));
}

std::unique_ptr<Policy> make_policy(const RecConfig& cfg, const PolicySpec& spec) {
    switch (spec.kind) {
        case PolicyKind::RecRule:
        case PolicyKind::SelfRule: return std::make_unique<RulePolicy>(cfg, spec);
        case PolicyKind::Mpc: return std::make_unique<MpcPolicy>(cfg, spec);
        case PolicyKind::RlExternal: break;
    }
    throw PreconditionError("policy '" + spec.label() + "' is driven through the env-server, not in-process");
}

}  // namespace recopt
