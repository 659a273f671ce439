#include "recopt/env_server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>
#include <vector>

#include "recopt/errors.hpp"

namespace recopt {

using nlohmann::json;

EnvSession::EnvSession(EnvDefaults defaults) : defaults_(std::move(defaults)), mode_(defaults_.mode) {}

std::vector<double> EnvSession::observation() const {
    const RecConfig& cfg = *cfg_;
    const auto& g = cfg.time_grid;
    std::vector<double> obs{static_cast<double>(state_.step_in_market), static_cast<double>(state_.market_in_billing)};
    obs.insert(obs.end(), state_.soc.begin(), state_.soc.end());

    const int elapsed = elapsed_steps(g, counters_of(state_));
    const int period = (elapsed + g.steps_per_market_period - 1) / g.steps_per_market_period;  // 1-based
    for (std::size_t m = 0; m < cfg.member_count(); ++m) {
        const auto row = static_cast<Eigen::Index>(m);
        obs.push_back(period == 0 ? 0.0
                                  : state_.meters.consumption(row, period - 1) - state_.meters.production(row, period - 1));
    }
    const bool running = state_.t < g.horizon_steps;
    for (std::size_t m = 0; m < cfg.member_count(); ++m) {
        const auto& e = truth_[static_cast<std::size_t>(std::min(state_.t, g.horizon_steps - 1))];
        obs.push_back(running ? e.consumption[m] - e.production[m] : 0.0);
    }
    if (mode_.dense) obs.push_back(last_reward_);
    for (double& v : obs)
        if (v == 0.0) v = 0.0;  // no negative zeros on the wire
    return obs;
}

json EnvSession::reset(const json& request) {
    const std::string id = request.value("config", defaults_.config);
    const std::uint64_t seed = request.value("seed", std::uint64_t{0});
    CostMode mode = defaults_.mode;
    if (request.contains("mode")) {
        const auto& m = request.at("mode");
        mode.dense = m.value("dense", mode.dense);
        mode.retail = m.value("retail", mode.retail);
    }
    RecConfig cfg = load_config(resolve_config(id));
    truth_ = sample_sequence(cfg, noise_from_config(cfg, seed));
    cfg_ = std::move(cfg);
    state_ = initial_state(*cfg_);
    mode_ = mode;
    last_reward_ = 0.0;
    return json{{"obs", observation()}, {"t", 0}};
}

json EnvSession::step(const json& request) {
    if (!cfg_) throw PreconditionError("step before reset");
    const RecConfig& cfg = *cfg_;
    if (state_.t >= cfg.time_grid.horizon_steps) throw PreconditionError("episode is over; send reset");
    const auto& raw = request.at("action");
    if (!raw.is_array() || raw.size() != cfg.batteries.size())
        throw PreconditionError("action must be an array with one power per battery (" +
                                std::to_string(cfg.batteries.size()) + ")");
    Action a;
    for (const auto& v : raw) {
        if (!v.is_number()) throw PreconditionError("action entries must be numbers");
        a.battery_power.push_back(v.get<double>());
    }
    a = admissible(cfg, state_, a);
    const auto r = recopt::step(cfg, state_, truth_[static_cast<std::size_t>(state_.t)], a, mode_);
    state_ = r.next;
    last_reward_ = r.cost == 0.0 ? 0.0 : -r.cost;
    const bool done = state_.t >= cfg.time_grid.horizon_steps;
    return json{{"obs", observation()}, {"reward", last_reward_}, {"done", done}, {"t", state_.t}};
}

std::string EnvSession::handle(const std::string& line) {
    try {
        const json request = json::parse(line);
        const std::string cmd = request.at("cmd").get<std::string>();
        if (cmd == "reset") return reset(request).dump();
        if (cmd == "step") return step(request).dump();
        if (cmd == "close") {
            closed_ = true;
            return json{{"closed", true}}.dump();
        }
        throw PreconditionError("unknown cmd '" + cmd + "' (reset, step, close)");
    } catch (const std::exception& e) {
        return json{{"error", e.what()}}.dump();
    }
}

void serve_stream(std::istream& in, std::ostream& out, const EnvDefaults& defaults) {
    EnvSession session(defaults);
    std::string line;
    while (!session.closed() && std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out << session.handle(line) << '\n';
        out.flush();
    }
}

namespace {

void serve_connection(int fd, EnvDefaults defaults) {
    EnvSession session(std::move(defaults));
    std::string buffer;
    char chunk[4096];
    while (!session.closed()) {
        const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t pos;
        while (!session.closed() && (pos = buffer.find('\n')) != std::string::npos) {
            std::string line = buffer.substr(0, pos);
            buffer.erase(0, pos + 1);
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const std::string reply = session.handle(line) + "\n";
            std::size_t sent = 0;
            while (sent < reply.size()) {
                const ssize_t w = ::send(fd, reply.data() + sent, reply.size() - sent, MSG_NOSIGNAL);
                if (w <= 0) {
                    ::close(fd);
                    return;
                }
                sent += static_cast<std::size_t>(w);
            }
        }
    }
    ::close(fd);
}

}  // namespace

void serve_tcp(int port, const EnvDefaults& defaults, int max_connections,
               const std::function<void(int)>& on_ready) {
    const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) throw std::runtime_error(std::string("env-server: socket: ") + std::strerror(errno));
    const int yes = 1;
    ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listener, 16) < 0) {
        const std::string msg = std::strerror(errno);
        ::close(listener);
        throw std::runtime_error("env-server: cannot listen on port " + std::to_string(port) + ": " + msg);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
    const int actual = ntohs(addr.sin_port);
    if (on_ready) on_ready(actual);

    std::vector<std::thread> workers;
    for (int served = 0; max_connections <= 0 || served < max_connections; ++served) {
        const int fd = ::accept(listener, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR) {
                --served;
                continue;
            }
            break;
        }
        if (max_connections > 0) workers.emplace_back(serve_connection, fd, defaults);
        else std::thread(serve_connection, fd, defaults).detach();
    }
    for (auto& w : workers) w.join();
    ::close(listener);
}

}  // namespace recopt
