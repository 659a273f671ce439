#include "recopt/domain.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "recopt/errors.hpp"

#ifndef RECOPT_CONFIG_DIR
#define RECOPT_CONFIG_DIR "configs"
#endif

namespace recopt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ConfigError(field + ": " + what);
}

void require_nonnegative(double v, const std::string& field) {
    require(std::isfinite(v) && v >= 0.0, field, "must be a finite value >= 0");
}

template <typename T>
T get_field(const json& doc, const char* key, const std::string& path) {
    if (!doc.contains(key)) throw ConfigError(path + "." + key + ": missing");
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(path + "." + key + ": " + e.what());
    }
}

template <typename T>
T get_field_or(const json& doc, const char* key, T fallback, const std::string& path) {
    if (!doc.contains(key)) return fallback;
    return get_field<T>(doc, key, path);
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

// ---------------------------------------------------------------------------

Tariffs Tariffs::without_peaks() const {
    Tariffs t = *this;
    t.offtake_peak_price = 0.0;
    t.injection_peak_price = 0.0;
    return t;
}

void Tariffs::validate(std::size_t members) const {
    require(buy_price.size() == members, "tariffs.buy_price",
            "expected " + std::to_string(members) + " entries, got " + std::to_string(buy_price.size()));
    require(sell_price.size() == members, "tariffs.sell_price",
            "expected " + std::to_string(members) + " entries, got " + std::to_string(sell_price.size()));
    for (std::size_t m = 0; m < members; ++m) {
        require_nonnegative(buy_price[m], "tariffs.buy_price[" + std::to_string(m) + "]");
        require_nonnegative(sell_price[m], "tariffs.sell_price[" + std::to_string(m) + "]");
    }
    require_nonnegative(offtake_peak_price, "tariffs.offtake_peak_price");
    require_nonnegative(injection_peak_price, "tariffs.injection_peak_price");
    require_nonnegative(rec_fee_consume, "tariffs.rec_fee_consume");
    require_nonnegative(rec_fee_produce, "tariffs.rec_fee_produce");
}

void BatterySpec::validate(std::size_t members) const {
    require(std::isfinite(capacity) && capacity > 0.0, "battery.capacity_kwh", "must be > 0");
    require_nonnegative(max_charge_power, "battery.max_charge_kw");
    require_nonnegative(max_discharge_power, "battery.max_discharge_kw");
    require(charge_efficiency > 0.0 && charge_efficiency <= 1.0, "battery.charge_efficiency",
            "must lie in (0, 1]");
    require(discharge_efficiency > 0.0 && discharge_efficiency <= 1.0, "battery.discharge_efficiency",
            "must lie in (0, 1]");
    require(owner < members, "battery.owner", "unknown member");
}

void TimeGrid::validate() const {
    require(std::isfinite(step_hours) && step_hours > 0.0, "time.step_hours", "must be > 0");
    require(steps_per_market_period > 0, "time.steps_per_market_period", "must be > 0");
    require(market_periods_per_billing > 0, "time.market_periods_per_billing", "must be > 0");
    require(horizon_steps > 0, "time.horizon_steps", "must be > 0");
    require(discount > 0.0 && discount < 1.0, "time.discount", "must lie strictly inside (0, 1)");
}

int RecConfig::battery_of(std::size_t member) const {
    for (std::size_t b = 0; b < batteries.size(); ++b)
        if (batteries[b].owner == member) return static_cast<int>(b);
    return -1;
}

void RecConfig::validate() const {
    const std::size_t members = member_count();
    require(members > 0, "members", "at least one member is required");
    tariffs.validate(members);
    time_grid.validate();
    std::vector<int> owned(members, 0);
    for (const auto& b : batteries) {
        b.validate(members);
        require(++owned[b.owner] <= 1, "batteries", "at most one battery per member");
    }
    require(base_profiles.size() == members, "profiles", "one profile per member expected");
    const auto horizon = static_cast<std::size_t>(time_grid.horizon_steps);
    for (std::size_t m = 0; m < members; ++m) {
        const auto& p = base_profiles[m];
        const std::string name = "profiles[" + member_ids[m] + "]";
        if (p.has_consumption())
            require(p.consumption.size() >= horizon, name + ".consumption", "shorter than horizon_steps");
        if (p.has_production())
            require(p.production.size() >= horizon, name + ".production", "shorter than horizon_steps");
        for (std::size_t t = 0; t < p.length(); ++t) {
            const double c = p.consumption_at(t), g = p.production_at(t);
            require_nonnegative(c, name + ".consumption");
            require_nonnegative(g, name + ".production");
            require(c == 0.0 || g == 0.0, name, "consumption and production both nonzero at step " +
                                                    std::to_string(t));
        }
    }
    require(noise.correlation > 0.0 && noise.correlation <= 1.0, "noise.correlation", "must lie in (0, 1]");
    require_nonnegative(noise.sigma, "noise.sigma");
}

MeterMatrix MeterMatrix::zeros(std::size_t members, std::size_t periods) {
    MeterMatrix mm;
    mm.consumption = Matrix::Zero(static_cast<Eigen::Index>(members), static_cast<Eigen::Index>(periods));
    mm.production = mm.consumption;
    return mm;
}

MeterMatrix MeterMatrix::from_net(const std::vector<std::vector<double>>& net_by_period) {
    if (net_by_period.empty()) throw PreconditionError("meters: at least one market period required");
    const std::size_t members = net_by_period.front().size();
    auto mm = zeros(members, net_by_period.size());
    for (std::size_t r = 0; r < net_by_period.size(); ++r) {
        if (net_by_period[r].size() != members)
            throw PreconditionError("meters: ragged net reading matrix");
        for (std::size_t m = 0; m < members; ++m) {
            const double v = net_by_period[r][m];
            mm.consumption(m, r) = std::max(v, 0.0);
            mm.production(m, r) = std::max(-v, 0.0);
        }
    }
    mm.periods_elapsed = static_cast<int>(net_by_period.size());
    return mm;
}

void MeterMatrix::validate() const {
    if (consumption.rows() != production.rows() || consumption.cols() != production.cols())
        throw PreconditionError("meters: consumption/production shapes differ");
    if ((consumption.array() < 0.0).any() || (production.array() < 0.0).any())
        throw PreconditionError("meters: negative reading");
    if (!consumption.allFinite() || !production.allFinite())
        throw PreconditionError("meters: non-finite reading");
}

// ---------------------------------------------------------------------------

Tariffs parse_tariffs(const json& doc) {
    Tariffs t;
    t.buy_price = get_field<std::vector<double>>(doc, "buy_price", "tariffs");
    t.sell_price = get_field<std::vector<double>>(doc, "sell_price", "tariffs");
    t.offtake_peak_price = get_field<double>(doc, "offtake_peak_price", "tariffs");
    t.injection_peak_price = get_field<double>(doc, "injection_peak_price", "tariffs");
    t.rec_fee_consume = get_field<double>(doc, "rec_fee_consume", "tariffs");
    t.rec_fee_produce = get_field<double>(doc, "rec_fee_produce", "tariffs");
    return t;
}

json tariffs_to_json(const Tariffs& t) {
    return json{{"buy_price", t.buy_price},
                {"sell_price", t.sell_price},
                {"offtake_peak_price", t.offtake_peak_price},
                {"injection_peak_price", t.injection_peak_price},
                {"rec_fee_consume", t.rec_fee_consume},
                {"rec_fee_produce", t.rec_fee_produce}};
}

MeterMatrix parse_meters(const json& doc) {
    if (doc.contains("net")) {
        return MeterMatrix::from_net(get_field<std::vector<std::vector<double>>>(doc, "net", "meters"));
    }
    // consumption/production given member-major: [member][period]
    const auto cons = get_field<std::vector<std::vector<double>>>(doc, "consumption", "meters");
    const auto prod = get_field<std::vector<std::vector<double>>>(doc, "production", "meters");
    if (cons.empty() || cons.size() != prod.size()) throw ConfigError("meters: member count mismatch");
    auto mm = MeterMatrix::zeros(cons.size(), cons.front().size());
    for (std::size_t m = 0; m < cons.size(); ++m) {
        if (cons[m].size() != mm.period_count() || prod[m].size() != mm.period_count())
            throw ConfigError("meters: ragged matrix for member " + std::to_string(m));
        for (std::size_t r = 0; r < mm.period_count(); ++r) {
            mm.consumption(m, r) = cons[m][r];
            mm.production(m, r) = prod[m][r];
        }
    }
    mm.periods_elapsed = static_cast<int>(mm.period_count());
    try {
        mm.validate();
    } catch (const PreconditionError& e) {
        throw ConfigError(e.what());
    }
    return mm;
}

std::vector<MemberProfile> read_profiles_csv(const fs::path& path, const std::vector<std::string>& member_ids) {
    std::ifstream in(path);
    if (!in) throw ConfigError("profiles: cannot open profile file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("profiles: empty profile file " + path.string());
    const auto header = split_csv_line(line);

    struct Column {
        std::size_t member;
        bool consumption;
    };
    std::vector<Column> columns;
    for (const auto& name : header) {
        const auto slash = name.find('/');
        if (slash == std::string::npos)
            throw ConfigError("profiles: header cell '" + name + "' is not <member_id>/<flow>");
        const std::string member = name.substr(0, slash), flow = name.substr(slash + 1);
        auto it = std::find(member_ids.begin(), member_ids.end(), member);
        if (it == member_ids.end()) throw ConfigError("profiles: unknown member '" + member + "'");
        if (flow != "consumption" && flow != "production")
            throw ConfigError("profiles: unknown flow '" + flow + "' (consumption|production)");
        columns.push_back({static_cast<std::size_t>(it - member_ids.begin()), flow == "consumption"});
    }

    std::vector<MemberProfile> profiles(member_ids.size());
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != columns.size())
            throw ConfigError("profiles: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                              " cells, expected " + std::to_string(columns.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double v = 0.0;
            const auto* first = cells[c].data();
            const auto* last = first + cells[c].size();
            auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc{} || ptr != last)
                throw ConfigError("profiles: row " + std::to_string(row) + ": bad number '" + cells[c] + "'");
            auto& p = profiles[columns[c].member];
            (columns[c].consumption ? p.consumption : p.production).push_back(v);
        }
    }
    return profiles;
}

void write_profiles_csv(const fs::path& path, const RecConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw ConfigError("profiles: cannot write " + path.string());
    struct Column {
        const std::vector<double>* values;
    };
    std::vector<Column> cols;
    std::string header;
    for (std::size_t m = 0; m < cfg.member_count(); ++m) {
        const auto& p = cfg.base_profiles[m];
        if (p.has_consumption()) {
            header += (header.empty() ? "" : ",") + cfg.member_ids[m] + "/consumption";
            cols.push_back({&p.consumption});
        }
        if (p.has_production()) {
            header += (header.empty() ? "" : ",") + cfg.member_ids[m] + "/production";
            cols.push_back({&p.production});
        }
    }
    out << header << '\n';
    std::size_t rows = 0;
    for (const auto& c : cols) rows = std::max(rows, c.values->size());
    for (std::size_t t = 0; t < rows; ++t) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) out << ',';
            out << format_double(t < cols[c].values->size() ? (*cols[c].values)[t] : 0.0);
        }
        out << '\n';
    }
}

RecConfig parse_config(const json& doc, const fs::path& base_dir) {
    RecConfig cfg;
    cfg.id = get_field_or<std::string>(doc, "id", "rec", "config");

    if (!doc.contains("members") || !doc.at("members").is_array())
        throw ConfigError("members: missing or not an array");
    std::vector<double> buy, sell;
    for (const auto& m : doc.at("members")) {
        cfg.member_ids.push_back(get_field<std::string>(m, "id", "members[]"));
        buy.push_back(get_field<double>(m, "buy_price", "members[" + cfg.member_ids.back() + "]"));
        sell.push_back(get_field<double>(m, "sell_price", "members[" + cfg.member_ids.back() + "]"));
    }
    cfg.tariffs.buy_price = std::move(buy);
    cfg.tariffs.sell_price = std::move(sell);
    if (doc.contains("tariff_overrides")) {
        // Explicit price lists, used to express (and reject) malformed tariffs.
        const auto& o = doc.at("tariff_overrides");
        if (o.contains("buy_price")) cfg.tariffs.buy_price = o.at("buy_price").get<std::vector<double>>();
        if (o.contains("sell_price")) cfg.tariffs.sell_price = o.at("sell_price").get<std::vector<double>>();
    }

    const json peaks = doc.value("peak_prices", json::object());
    cfg.tariffs.offtake_peak_price = get_field<double>(peaks, "offtake", "peak_prices");
    cfg.tariffs.injection_peak_price = get_field<double>(peaks, "injection", "peak_prices");
    const json fees = doc.value("rec_fees", json::object());
    cfg.tariffs.rec_fee_consume = get_field<double>(fees, "consume", "rec_fees");
    cfg.tariffs.rec_fee_produce = get_field<double>(fees, "produce", "rec_fees");

    const json time = doc.value("time", json::object());
    cfg.time_grid.step_hours = get_field<double>(time, "step_hours", "time");
    cfg.time_grid.steps_per_market_period = get_field<int>(time, "steps_per_market_period", "time");
    cfg.time_grid.market_periods_per_billing = get_field<int>(time, "market_periods_per_billing", "time");
    cfg.time_grid.horizon_steps = get_field<int>(time, "horizon_steps", "time");
    cfg.time_grid.discount = get_field<double>(time, "discount", "time");

    for (const auto& b : doc.value("batteries", json::array())) {
        BatterySpec spec;
        const auto owner = get_field<std::string>(b, "owner", "batteries[]");
        auto it = std::find(cfg.member_ids.begin(), cfg.member_ids.end(), owner);
        if (it == cfg.member_ids.end()) throw ConfigError("batteries[].owner: unknown member '" + owner + "'");
        spec.owner = static_cast<std::size_t>(it - cfg.member_ids.begin());
        spec.capacity = get_field<double>(b, "capacity_kwh", "batteries[]");
        spec.max_charge_power = get_field<double>(b, "max_charge_kw", "batteries[]");
        spec.max_discharge_power = get_field<double>(b, "max_discharge_kw", "batteries[]");
        spec.charge_efficiency = get_field<double>(b, "charge_efficiency", "batteries[]");
        spec.discharge_efficiency = get_field<double>(b, "discharge_efficiency", "batteries[]");
        cfg.batteries.push_back(spec);
    }

    if (doc.contains("noise")) {
        const auto& n = doc.at("noise");
        cfg.noise.correlation = get_field_or<double>(n, "correlation", cfg.noise.correlation, "noise");
        cfg.noise.sigma = get_field_or<double>(n, "sigma", cfg.noise.sigma, "noise");
        cfg.noise.relative = get_field_or<bool>(n, "relative", cfg.noise.relative, "noise");
    }

    cfg.profiles_file = get_field<std::string>(doc, "profiles", "config");
    const fs::path profile_path = base_dir / cfg.profiles_file;
    if (!fs::exists(profile_path)) throw ConfigError("profiles: missing profile file " + profile_path.string());
    cfg.base_profiles = read_profiles_csv(profile_path, cfg.member_ids);

    cfg.validate();
    return cfg;
}

RecConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: parse error in " + path.string() + ": " + e.what());
    }
    return parse_config(doc, path.parent_path());
}

json config_to_json(const RecConfig& cfg) {
    json members = json::array();
    for (std::size_t m = 0; m < cfg.member_count(); ++m)
        members.push_back({{"id", cfg.member_ids[m]},
                           {"buy_price", cfg.tariffs.buy_price.at(m)},
                           {"sell_price", cfg.tariffs.sell_price.at(m)}});
    json batteries = json::array();
    for (const auto& b : cfg.batteries)
        batteries.push_back({{"owner", cfg.member_ids.at(b.owner)},
                             {"capacity_kwh", b.capacity},
                             {"max_charge_kw", b.max_charge_power},
                             {"max_discharge_kw", b.max_discharge_power},
                             {"charge_efficiency", b.charge_efficiency},
                             {"discharge_efficiency", b.discharge_efficiency}});
    const auto& tg = cfg.time_grid;
    return json{{"id", cfg.id},
                {"members", members},
                {"peak_prices",
                 {{"offtake", cfg.tariffs.offtake_peak_price}, {"injection", cfg.tariffs.injection_peak_price}}},
                {"rec_fees", {{"consume", cfg.tariffs.rec_fee_consume}, {"produce", cfg.tariffs.rec_fee_produce}}},
                {"time",
                 {{"step_hours", tg.step_hours},
                  {"steps_per_market_period", tg.steps_per_market_period},
                  {"market_periods_per_billing", tg.market_periods_per_billing},
                  {"horizon_steps", tg.horizon_steps},
                  {"discount", tg.discount}}},
                {"batteries", batteries},
                {"noise",
                 {{"correlation", cfg.noise.correlation},
                  {"sigma", cfg.noise.sigma},
                  {"relative", cfg.noise.relative}}},
                {"profiles", cfg.profiles_file}};
}

fs::path save_config(const RecConfig& cfg, const fs::path& dir) {
    fs::create_directories(dir);
    const fs::path json_path = dir / (cfg.id + ".json");
    std::ofstream out(json_path);
    if (!out) throw ConfigError("config: cannot write " + json_path.string());
    out << config_to_json(cfg).dump(2) << '\n';
    write_profiles_csv(dir / cfg.profiles_file, cfg);
    return json_path;
}

fs::path default_config_dir() {
    if (const char* env = std::getenv("REC_OPT_CONFIG_DIR"); env && *env) return fs::path(env);
    return fs::path(RECOPT_CONFIG_DIR);
}

fs::path resolve_config(const std::string& id_or_path) {
    const fs::path direct(id_or_path);
    if (fs::is_regular_file(direct)) return direct;
    const fs::path named = default_config_dir() / (id_or_path + ".json");
    if (fs::is_regular_file(named)) return named;
    throw ConfigError("config: '" + id_or_path + "' is neither a file nor a config in " + default_config_dir().string());
}

}  // namespace recopt
