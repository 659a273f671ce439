#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "recopt/domain.hpp"

#ifndef RECOPT_SOURCE_DIR
#define RECOPT_SOURCE_DIR "."
#endif

namespace fixtures {

inline std::filesystem::path source_dir() { return RECOPT_SOURCE_DIR; }

struct ReallocCase {
    recopt::Tariffs tariffs;
    recopt::MeterMatrix meters;
};

inline ReallocCase load_realloc(const std::string& name) {
    std::ifstream in(source_dir() / "data" / name);
    const auto doc = nlohmann::json::parse(in);
    return {recopt::parse_tariffs(doc.at("tariffs")), recopt::parse_meters(doc.at("meters"))};
}

inline recopt::RecConfig load_rec(const std::string& id) {
    return recopt::load_config(source_dir() / "configs" / (id + ".json"));
}

}  // namespace fixtures
