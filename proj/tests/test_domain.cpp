#include <doctest.h>

#include <filesystem>

#include "fixtures.hpp"
#include "recopt/errors.hpp"

using namespace recopt;
namespace fs = std::filesystem;

TEST_CASE("shipped configurations load with their stated parameters") {
    const auto rec2 = fixtures::load_rec("rec2");
    CHECK(rec2.member_count() == 2);
    CHECK(rec2.tariffs.buy_price == std::vector<double>{0.10, 0.12});
    CHECK(rec2.tariffs.sell_price == std::vector<double>{0.01, 0.01});
    CHECK(rec2.tariffs.offtake_peak_price == 1.0);
    CHECK(rec2.tariffs.rec_fee_consume == 0.03);
    CHECK(rec2.tariffs.rec_fee_produce == 0.01);
    CHECK(rec2.time_grid.steps_per_billing() == 20);
    CHECK(rec2.time_grid.horizon_steps == 101);
    REQUIRE(rec2.batteries.size() == 1);
    CHECK(rec2.batteries[0].owner == 1);
    CHECK(rec2.batteries[0].max_discharge_power == 0.10);
    CHECK(rec2.battery_of(1) == 0);
    CHECK(rec2.battery_of(0) == -1);
    CHECK_FALSE(rec2.base_profiles[0].has_production());
    CHECK_FALSE(rec2.base_profiles[1].has_consumption());

    const auto rec7 = fixtures::load_rec("rec7");
    CHECK(rec7.member_count() == 7);
    CHECK(rec7.time_grid.steps_per_market_period == 5);
    CHECK(rec7.time_grid.market_periods_per_billing == 45);
    CHECK(rec7.time_grid.horizon_steps == 720);
    CHECK(rec7.tariffs.offtake_peak_price == 1.21);
    CHECK(rec7.batteries[0].capacity == 5256.0);
    CHECK(rec7.batteries[0].charge_efficiency == 0.88);
    CHECK(fixtures::load_rec("rec7_t721").time_grid.horizon_steps == 721);
}

TEST_CASE("config round trip through save and load") {
    const auto cfg = fixtures::load_rec("rec2");
    const fs::path dir = fs::temp_directory_path() / "recopt_domain_roundtrip";
    fs::remove_all(dir);
    const auto path = save_config(cfg, dir);
    CHECK(load_config(path) == cfg);
    fs::remove_all(dir);
}

TEST_CASE("config validation names the offending field") {
    const auto base_dir = fixtures::source_dir() / "configs";
    std::ifstream in(base_dir / "rec2.json");
    const auto doc = nlohmann::json::parse(in);

    auto expect_error = [&](nlohmann::json d, const std::string& needle) {
        try {
            parse_config(d, base_dir);
            FAIL("accepted an invalid config");
        } catch (const ConfigError& e) {
            CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
        } catch (const std::exception& e) {
            CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
        }
    };

    auto d = doc;
    d["batteries"][0]["charge_efficiency"] = 0.0;
    expect_error(d, "charge_efficiency");

    d = doc;
    d["time"]["horizon_steps"] = 500;  // longer than the profiles
    expect_error(d, "horizon_steps");

    d = doc;
    d["members"].erase(1);
    expect_error(d, "M2");

    d = doc;
    d["time"]["discount"] = 1.5;
    expect_error(d, "discount");
}

TEST_CASE("resolve_config accepts ids and paths") {
    CHECK(resolve_config("rec2").filename() == "rec2.json");
    const auto p = (fixtures::source_dir() / "configs" / "rec7.json").string();
    CHECK(resolve_config(p) == fs::path(p));
    CHECK_THROWS_AS(resolve_config("no_such_rec"), ConfigError);
}
