#include "recopt/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "recopt/errors.hpp"

namespace recopt {

void ExperimentPlan::validate() const {
    if (policies.empty()) throw PreconditionError("plan: at least one policy is required");
    if (scenarios < 1) throw PreconditionError("plan: scenario count must be >= 1");
    if (seeds.empty()) throw PreconditionError("plan: at least one seed is required");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        throw PreconditionError("plan: seeds must be distinct");
    if (horizon < 0) throw PreconditionError("plan: horizon must be >= 0");
    for (const auto& p : policies) {
        p.validate();
        if (p.kind == PolicyKind::RlExternal)
            throw PreconditionError("plan: rl policies are evaluated through the env-server");
    }
}

std::uint64_t scenario_seed(std::uint64_t seed, int scenario) {
    return derive_seed(seed, 0x5ce0000000000000ULL + static_cast<std::uint64_t>(scenario));
}

double episode_return(const RecConfig& cfg, Policy& policy, const ExogenousSequence& truth,
                      const ExogenousSequence& base) {
    policy.reset();
    SimState s = initial_state(cfg);
    double ret = 0.0, disc = 1.0;
    for (int t = 0; t < cfg.time_grid.horizon_steps; ++t) {
        const Action a = policy.act(s, truth, base);
        const auto r = step(cfg, s, truth[static_cast<std::size_t>(t)], a);
        ret -= disc * r.cost;
        disc *= cfg.time_grid.discount;
        s = r.next;
    }
    return ret;
}

namespace {

RecConfig with_horizon(const RecConfig& cfg, int horizon) {
    RecConfig out = cfg;
    if (horizon > 0) out.time_grid.horizon_steps = horizon;
    out.validate();
    return out;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double standard_error(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

template <class F>
void parallel_for(std::size_t count, int threads, F&& body) {
    const auto workers = static_cast<std::size_t>(
        std::max(1, threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency())));
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (std::size_t i = next++; i < count; i = next++) body(i);
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < std::min(workers, count); ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
}

}  // namespace

std::vector<ReturnEstimate> evaluate(const RecConfig& base_cfg, const ExperimentPlan& plan) {
    plan.validate();
    const RecConfig cfg = with_horizon(base_cfg, plan.horizon);
    const auto T = static_cast<std::size_t>(cfg.time_grid.horizon_steps);
    const ExogenousSequence base = base_sequence(cfg, T);
    const std::size_t P = plan.policies.size(), S = plan.seeds.size();
    const auto J = static_cast<std::size_t>(plan.scenarios);

    // Scenarios are shared by every policy.
    std::vector<ExogenousSequence> scenarios(S * J);
    parallel_for(S * J, plan.threads, [&](std::size_t i) {
        scenarios[i] = sample_sequence(cfg, noise_from_config(cfg, scenario_seed(plan.seeds[i / J], static_cast<int>(i % J))));
    });

    std::vector<double> returns(P * S * J, 0.0);
    std::vector<std::string> errors(P * S * J);
    parallel_for(P * S * J, plan.threads, [&](std::size_t i) {
        const std::size_t p = i / (S * J), sj = i % (S * J);
        try {
            auto policy = make_policy(cfg, plan.policies[p]);
            returns[i] = episode_return(cfg, *policy, scenarios[sj], base);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    std::vector<ReturnEstimate> out;
    for (std::size_t p = 0; p < P; ++p) {
        ReturnEstimate r;
        r.policy = plan.policies[p].label();
        for (std::size_t sj = 0; sj < S * J && r.error.empty(); ++sj)
            if (!errors[p * S * J + sj].empty()) {
                const std::size_t s = sj / J, j = sj % J;
                r.error = "seed " + std::to_string(plan.seeds[s]) + " scenario " + std::to_string(j) + ": " +
                          errors[p * S * J + sj];
            }
        if (!r.error.empty()) {
            r.mean = r.standard_error = std::nan("");
            out.push_back(std::move(r));
            continue;
        }
        r.per_scenario.assign(returns.begin() + static_cast<std::ptrdiff_t>(p * S * J),
                              returns.begin() + static_cast<std::ptrdiff_t>((p + 1) * S * J));
        for (std::size_t s = 0; s < S; ++s)
            r.per_seed.push_back(mean_of(std::vector<double>(r.per_scenario.begin() + static_cast<std::ptrdiff_t>(s * J),
                                                             r.per_scenario.begin() + static_cast<std::ptrdiff_t>((s + 1) * J))));
        r.mean = mean_of(r.per_seed);
        r.standard_error = S >= 2 ? standard_error(r.per_seed) : standard_error(r.per_scenario);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<PolicyTiming> time_policies(const RecConfig& cfg, const std::vector<PolicySpec>& policies, int calls,
                                        std::uint64_t seed) {
    if (calls < 1) throw PreconditionError("time_policies: calls must be >= 1");
    const auto T = static_cast<std::size_t>(cfg.time_grid.horizon_steps);
    const ExogenousSequence base = base_sequence(cfg, T);
    const ExogenousSequence truth = sample_sequence(cfg, noise_from_config(cfg, scenario_seed(seed, 0)));

    // Visit states spread over the episode, reached with the REC rule.
    std::vector<SimState> states;
    {
        SimState s = initial_state(cfg);
        const int stride = std::max<int>(1, static_cast<int>(T) / calls);
        for (std::size_t t = 0; t < T && static_cast<int>(states.size()) < calls; ++t) {
            if (static_cast<int>(t) % stride == 0) states.push_back(s);
            const Action a = rule_action(cfg, s, truth[t], RuleMode::Rec);
            s = transition(cfg, s, truth[t], a).next;
        }
    }

    std::vector<PolicyTiming> out;
    for (const auto& spec : policies) {
        auto policy = make_policy(cfg, spec);
        double total = 0.0;
        for (const auto& s : states) {
            policy->reset();
            const auto t0 = std::chrono::steady_clock::now();
            policy->act(s, truth, base);
            total += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        out.push_back({spec.label(), total / static_cast<double>(states.size()), static_cast<int>(states.size())});
    }
    return out;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string results_csv(const ExperimentPlan& plan, const std::vector<ReturnEstimate>& results) {
    std::ostringstream out;
    out << "policy,seed,scenarios,mean_return,error\n";
    for (const auto& r : results)
        for (std::size_t s = 0; s < plan.seeds.size(); ++s) {
            out << r.policy << ',' << plan.seeds[s] << ',' << plan.scenarios << ',';
            out << (r.error.empty() ? format_number(r.per_seed[s]) : "nan") << ',';
            std::string e = r.error;
            std::replace(e.begin(), e.end(), ',', ';');
            std::replace(e.begin(), e.end(), '\n', ' ');
            out << e << '\n';
        }
    return out.str();
}

nlohmann::json results_json(const RecConfig& cfg, const ExperimentPlan& plan,
                            const std::vector<ReturnEstimate>& results) {
    using nlohmann::json;
    json policies = json::array();
    for (const auto& r : results) {
        json row{{"policy", r.policy}, {"per_seed", r.per_seed}};
        if (r.error.empty()) {
            row["mean"] = r.mean;
            row["standard_error"] = r.standard_error;
        } else {
            row["mean"] = nullptr;
            row["standard_error"] = nullptr;
            row["error"] = r.error;
        }
        policies.push_back(std::move(row));
    }

    // curves[family][alpha] = [{K, mean, standard_error}] sorted by K
    std::map<std::string, std::map<double, std::vector<std::pair<int, const ReturnEstimate*>>>> curves;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& spec = plan.policies[i];
        if (spec.kind != PolicyKind::Mpc || spec.full_horizon || !results[i].error.empty()) continue;
        curves[spec.include_peaks ? "mpc" : "mpc-retail"][spec.foresight_alpha].emplace_back(spec.horizon,
                                                                                             &results[i]);
    }
    json curve_doc = json::object();
    for (auto& [family, by_alpha] : curves) {
        json fam = json::array();
        for (auto& [alpha, points] : by_alpha) {
            std::sort(points.begin(), points.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            json pts = json::array();
            for (const auto& [k, r] : points)
                pts.push_back({{"K", k}, {"mean", r->mean}, {"standard_error", r->standard_error}});
            fam.push_back({{"alpha", alpha}, {"points", pts}});
        }
        curve_doc[family] = fam;
    }

    json seeds = json::array();
    for (auto s : plan.seeds) seeds.push_back(s);
    return json{{"config", cfg.id},
                {"horizon", plan.horizon > 0 ? plan.horizon : cfg.time_grid.horizon_steps},
                {"scenarios_per_seed", plan.scenarios},
                {"seeds", seeds},
                {"policies", policies},
                {"curves", curve_doc}};
}

nlohmann::json timings_json(const std::vector<PolicyTiming>& timings) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& t : timings)
        out.push_back({{"policy", t.policy}, {"mean_seconds", t.mean_seconds}, {"calls", t.calls}});
    return out;
}

}  // namespace recopt
