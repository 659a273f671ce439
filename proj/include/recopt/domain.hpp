#pragma once

// REC domain model: tariffs, assets, time discretisation, configuration
// ingestion and meter readings.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace recopt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Proportional tariffs of the community. Prices are money/kWh; peak prices
// apply to kWh peak values (no conversion to kW).
struct Tariffs {
    std::vector<double> buy_price;   // per member, energy bought from the retailer
    std::vector<double> sell_price;  // per member, energy sold to the retailer
    double offtake_peak_price = 0.0;
    double injection_peak_price = 0.0;
    double rec_fee_consume = 0.0;  // on energy received from the REC
    double rec_fee_produce = 0.0;  // on energy shared with the REC

    std::size_t member_count() const { return buy_price.size(); }

    // Same tariffs with both peak prices set to zero ("retail" view).
    Tariffs without_peaks() const;

    void validate(std::size_t members) const;

    bool operator==(const Tariffs&) const = default;
};

struct BatterySpec {
    double capacity = 0.0;             // kWh
    double max_charge_power = 0.0;     // kW
    double max_discharge_power = 0.0;  // kW
    double charge_efficiency = 1.0;
    double discharge_efficiency = 1.0;
    std::size_t owner = 0;  // member index

    void validate(std::size_t members) const;

    bool operator==(const BatterySpec&) const = default;
};

struct TimeGrid {
    double step_hours = 1.0;
    int steps_per_market_period = 1;
    int market_periods_per_billing = 1;
    int horizon_steps = 1;
    double discount = 0.99;

    int steps_per_billing() const { return steps_per_market_period * market_periods_per_billing; }
    void validate() const;

    bool operator==(const TimeGrid&) const = default;
};

// Non-controllable flows of one member, in kW, one value per time step.
// A flow that is not declared in the profile file stays empty and is
// treated as identically zero (and is never perturbed by noise).
struct MemberProfile {
    std::vector<double> consumption;
    std::vector<double> production;

    bool has_consumption() const { return !consumption.empty(); }
    bool has_production() const { return !production.empty(); }
    double consumption_at(std::size_t t) const { return has_consumption() ? consumption.at(t) : 0.0; }
    double production_at(std::size_t t) const { return has_production() ? production.at(t) : 0.0; }
    std::size_t length() const { return std::max(consumption.size(), production.size()); }

    bool operator==(const MemberProfile&) const = default;
};

// Default red-noise parameters used when sampling scenarios for a config.
// With `relative` set, sigma is a fraction of each flow's mean magnitude.
struct NoiseDefaults {
    double correlation = 0.5;
    double sigma = 0.3;
    bool relative = false;

    bool operator==(const NoiseDefaults&) const = default;
};

struct RecConfig {
    std::string id;
    std::vector<std::string> member_ids;
    Tariffs tariffs;
    std::vector<BatterySpec> batteries;
    TimeGrid time_grid;
    std::vector<MemberProfile> base_profiles;
    NoiseDefaults noise;
    std::string profiles_file = "profiles.csv";  // relative to the config file

    std::size_t member_count() const { return member_ids.size(); }

    // Index of the battery owned by `member`, or -1.
    int battery_of(std::size_t member) const;

    void validate() const;

    bool operator==(const RecConfig&) const = default;
};

// Per-member, per-market-period meter readings of one billing period (kWh).
// Rows are members, columns market periods.
struct MeterMatrix {
    Matrix consumption;
    Matrix production;
    int periods_elapsed = 0;
    int steps_elapsed_in_billing = 0;

    static MeterMatrix zeros(std::size_t members, std::size_t periods);
    // Builds meters from signed net readings: rows are market periods,
    // columns members, positive values are consumption.
    static MeterMatrix from_net(const std::vector<std::vector<double>>& net_by_period);

    std::size_t member_count() const { return static_cast<std::size_t>(consumption.rows()); }
    std::size_t period_count() const { return static_cast<std::size_t>(consumption.cols()); }

    void validate() const;
};

// Configuration ingestion ----------------------------------------------------

RecConfig load_config(const std::filesystem::path& path);
RecConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

// JSON document for `cfg` (profiles referenced through cfg.profiles_file).
nlohmann::json config_to_json(const RecConfig& cfg);
// Writes `<dir>/<cfg.id>.json` and its profile CSV next to it.
std::filesystem::path save_config(const RecConfig& cfg, const std::filesystem::path& dir);

std::vector<MemberProfile> read_profiles_csv(const std::filesystem::path& path,
                                             const std::vector<std::string>& member_ids);
void write_profiles_csv(const std::filesystem::path& path, const RecConfig& cfg);

// Directory holding the named configurations shipped with the project.
// Overridable through the REC_OPT_CONFIG_DIR environment variable.
std::filesystem::path default_config_dir();
// Accepts either a path to a JSON file or a config id looked up in
// default_config_dir().
std::filesystem::path resolve_config(const std::string& id_or_path);

// Tariffs/meters documents used by `rec-opt realloc` and the golden fixtures.
Tariffs parse_tariffs(const nlohmann::json& doc);
nlohmann::json tariffs_to_json(const Tariffs& tariffs);
MeterMatrix parse_meters(const nlohmann::json& doc);

}  // namespace recopt
