// rec-opt: experiments, env-server and one-off reallocations.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "recopt/billing.hpp"
#include "recopt/env_server.hpp"
#include "recopt/errors.hpp"
#include "recopt/evaluation.hpp"

using namespace recopt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<PolicySpec> parse_policies(const std::vector<std::string>& texts) {
    std::vector<PolicySpec> out;
    for (const auto& t : texts) out.push_back(parse_policy_spec(t));
    return out;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void print_estimates(const std::vector<ReturnEstimate>& results) {
    std::size_t width = 6;
    for (const auto& r : results) width = std::max(width, r.policy.size());
    std::cout << std::left << std::setw(static_cast<int>(width)) << "policy" << "  " << std::right << std::setw(14)
              << "mean return" << "  " << std::setw(10) << "std err" << '\n';
    for (const auto& r : results) {
        std::cout << std::left << std::setw(static_cast<int>(width)) << r.policy << "  " << std::right;
        if (!r.error.empty()) {
            std::cout << "failed: " << r.error << '\n';
            continue;
        }
        std::cout << std::fixed << std::setprecision(6) << std::setw(14) << r.mean << "  " << std::setw(10)
                  << r.standard_error << '\n';
    }
    std::cout.unsetf(std::ios::floatfield);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Battery control and billing for renewable energy communities"};
    app.require_subcommand(1);
    bool as_json = false;
    app.add_flag("--json", as_json, "Machine-readable JSON on stdout");

    // eval
    auto* eval = app.add_subcommand("eval", "Estimate expected returns of policies over sampled scenarios");
    std::string eval_config = "rec2";
    std::vector<std::string> eval_policies{"rec", "self", "opt"};
    int eval_scenarios = 16;
    std::vector<std::uint64_t> eval_seeds{0};
    int eval_horizon = 0, eval_threads = 0;
    std::string eval_out;
    bool eval_timing = false;
    eval->add_option("--config", eval_config, "Config id or path")->capture_default_str();
    eval->add_option("--policies", eval_policies, "Policy specs, e.g. rec self opt mpc:K=10:alpha=0.85")
        ->capture_default_str();
    eval->add_option("--scenarios", eval_scenarios, "Scenarios per seed")->capture_default_str();
    eval->add_option("--seeds", eval_seeds, "Run seeds")->capture_default_str();
    eval->add_option("--horizon", eval_horizon, "Episode length T (0: config value)");
    eval->add_option("--threads", eval_threads, "Worker threads (0: all cores)");
    eval->add_option("--out", eval_out, "Directory for results.csv and summary.json");
    eval->add_flag("--timing", eval_timing, "Also time the policies (mean over 32 calls)");

    // serve-env
    auto* serve = app.add_subcommand("serve-env", "Serve the environment protocol on stdio or TCP");
    std::string serve_config = "rec2", serve_mode = "sparse";
    bool serve_retail = false;
    int serve_port = -1;
    serve->add_option("--config", serve_config, "Default config id or path")->capture_default_str();
    serve->add_option("--mode", serve_mode, "Reward mode")->check(CLI::IsMember({"dense", "sparse"}))
        ->capture_default_str();
    serve->add_flag("--retail", serve_retail, "Ignore peak costs in rewards");
    serve->add_option("--port", serve_port, "Listen on 127.0.0.1:PORT instead of stdio (0 picks a free port)");

    // realloc
    auto* realloc = app.add_subcommand("realloc", "Optimal reallocation of one billing period");
    std::string realloc_file;
    double realloc_tau = 1.0;
    bool realloc_no_peaks = false;
    realloc->add_option("--meters", realloc_file, "JSON file with \"tariffs\" and \"meters\"")->required();
    realloc->add_option("--tau", realloc_tau, "Elapsed fraction of the billing period")->capture_default_str();
    realloc->add_flag("--no-peaks", realloc_no_peaks, "Ignore peak prices in the criterion");

    // bench
    auto* bench = app.add_subcommand("bench", "Mean time to compute one action");
    std::string bench_config = "rec2";
    std::vector<std::string> bench_policies{"rec", "self", "mpc:K=1:alpha=1", "mpc:K=10:alpha=1",
                                            "mpc:K=50:alpha=1", "opt"};
    int bench_calls = 32;
    bench->add_option("--config", bench_config, "Config id or path")->capture_default_str();
    bench->add_option("--policies", bench_policies, "Policy specs")->capture_default_str();
    bench->add_option("--calls", bench_calls, "Timed calls per policy")->capture_default_str();

    // sample
    auto* sample = app.add_subcommand("sample", "Write one sampled scenario as CSV");
    std::string sample_config = "rec2", sample_out;
    std::uint64_t sample_seed = 0;
    sample->add_option("--config", sample_config, "Config id or path")->capture_default_str();
    sample->add_option("--seed", sample_seed, "Noise seed")->capture_default_str();
    sample->add_option("--out", sample_out, "Output file (stdout if omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*eval) {
            const RecConfig cfg = load_config(resolve_config(eval_config));
            ExperimentPlan plan;
            plan.config = eval_config;
            plan.policies = parse_policies(eval_policies);
            plan.scenarios = eval_scenarios;
            plan.seeds = eval_seeds;
            plan.horizon = eval_horizon;
            plan.threads = eval_threads;
            plan.output = eval_out;
            plan.timing = eval_timing;
            const auto results = evaluate(cfg, plan);
            json summary = results_json(cfg, plan, results);
            if (plan.timing) summary["timings"] = timings_json(time_policies(cfg, plan.policies));
            if (!eval_out.empty()) {
                write_file(fs::path(eval_out) / "results.csv", results_csv(plan, results));
                write_file(fs::path(eval_out) / "summary.json", summary.dump(2) + "\n");
            }
            if (as_json) std::cout << summary.dump(2) << '\n';
            else print_estimates(results);
            bool failed = false;
            for (const auto& r : results) failed = failed || !r.error.empty();
            return failed ? 3 : 0;
        }
        if (*serve) {
            EnvDefaults d;
            d.config = serve_config;
            d.mode.dense = serve_mode == "dense";
            d.mode.retail = serve_retail;
            load_config(resolve_config(d.config));  // fail early on a bad default
            if (serve_port < 0) {
                serve_stream(std::cin, std::cout, d);
            } else {
                serve_tcp(serve_port, d, 0, [](int port) {
                    std::cerr << "listening on 127.0.0.1:" << port << std::endl;
                });
            }
            return 0;
        }
        if (*realloc) {
            std::ifstream in(realloc_file);
            if (!in) throw ConfigError("cannot open " + realloc_file);
            const json doc = json::parse(in);
            const Tariffs tariffs = parse_tariffs(doc.at("tariffs"));
            const MeterMatrix meters = parse_meters(doc.at("meters"));
            const auto no_rec = bill_no_rec(meters, tariffs);
            const auto r = optimal_reallocation(meters, tariffs, realloc_tau, !realloc_no_peaks);
            json out = reallocation_to_json(r);
            out["no_rec_bills"] = no_rec.member;
            out["no_rec_total"] = no_rec.total;
            if (as_json) {
                std::cout << out.dump(2) << '\n';
            } else {
                std::cout << std::fixed << std::setprecision(2) << "bill without REC: " << no_rec.total << '\n'
                          << "global REC bill:  " << r.global_bill << '\n';
                for (std::size_t m = 0; m < r.member_bills.size(); ++m)
                    std::cout << "  member " << m + 1 << ": " << r.member_bills[m] << '\n';
            }
            return 0;
        }
        if (*bench) {
            const RecConfig cfg = load_config(resolve_config(bench_config));
            const auto timings = time_policies(cfg, parse_policies(bench_policies), bench_calls);
            if (as_json) {
                std::cout << timings_json(timings).dump(2) << '\n';
            } else {
                for (const auto& t : timings)
                    std::cout << std::left << std::setw(24) << t.policy << std::scientific << std::setprecision(3)
                              << t.mean_seconds << " s\n";
            }
            return 0;
        }
        if (*sample) {
            const RecConfig cfg = load_config(resolve_config(sample_config));
            const auto seq = sample_sequence(cfg, noise_from_config(cfg, sample_seed));
            std::ostringstream csv;
            csv << "t";
            for (const auto& id : cfg.member_ids) csv << ',' << id << "/consumption," << id << "/production";
            csv << '\n';
            for (std::size_t t = 0; t < seq.size(); ++t) {
                csv << t;
                for (std::size_t m = 0; m < cfg.member_count(); ++m)
                    csv << ',' << format_number(seq[t].consumption[m]) << ',' << format_number(seq[t].production[m]);
                csv << '\n';
            }
            if (sample_out.empty()) std::cout << csv.str();
            else write_file(sample_out, csv.str());
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "rec-opt: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "rec-opt: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
