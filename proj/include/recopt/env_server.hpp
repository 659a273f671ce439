#pragma once

// Newline-delimited JSON environment protocol over standard streams or TCP.
//
//   {"cmd":"reset","config":"rec2","seed":3,"mode":{"dense":true,"retail":false}}
//     -> {"obs":[...],"t":0}
//   {"cmd":"step","action":[0.01]}
//     -> {"obs":[...],"reward":-0.42,"done":false,"t":1}
//   {"cmd":"close"} -> {"closed":true}
//
// Failures answer {"error":"..."} and keep the session alive.
//
// Observation layout (version 1):
//   [steps in market period, market periods in billing period,
//    state of charge per battery,
//    per-member net meter reading (consumption - production) of the current
//      market period, zeros before the first step of a billing period,
//    per-member net exogenous flow (consumption - production, kW) of the
//      upcoming step, zeros once the episode is over,
//    last reward (dense mode only)]

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "recopt/exogenous.hpp"
#include "recopt/simulator.hpp"

namespace recopt {

inline constexpr int kObservationVersion = 1;

struct EnvDefaults {
    std::string config = "rec2";
    CostMode mode;
};

class EnvSession {
public:
    explicit EnvSession(EnvDefaults defaults = {});

    // Handles one request line; returns the response line (no newline).
    std::string handle(const std::string& line);
    bool closed() const { return closed_; }

    nlohmann::json reset(const nlohmann::json& request);
    nlohmann::json step(const nlohmann::json& request);
    std::vector<double> observation() const;

private:
    EnvDefaults defaults_;
    std::optional<RecConfig> cfg_;
    ExogenousSequence truth_;
    SimState state_;
    CostMode mode_;
    double last_reward_ = 0.0;
    bool closed_ = false;
};

// Serves requests from `in` until close or end of stream.
void serve_stream(std::istream& in, std::ostream& out, const EnvDefaults& defaults);

// Accepts connections on 127.0.0.1:port, one session per connection, each on
// its own thread. Blocks forever unless max_connections > 0, in which case it
// returns once that many connections have been served. `on_ready` receives
// the bound port (useful with port 0) before the first accept.
void serve_tcp(int port, const EnvDefaults& defaults, int max_connections = 0,
               const std::function<void(int)>& on_ready = {});

}  // namespace recopt
