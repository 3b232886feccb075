#include "laar/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "laar/errors.hpp"

namespace laar {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
    T out{};
    const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
        throw FormatError("config: bad value for '" + std::string(key) + "': '" + std::string(value) + "'");
    }
    return out;
}

EndpointConfig& endpoint_named(ClusterConfig& cfg, std::string_view id) {
    for (auto& ep : cfg.endpoints) {
        if (ep.profile.model_id == id) return ep;
    }
    auto& ep = cfg.endpoints.emplace_back();
    ep.profile.model_id = std::string(id);
    ep.initial_state.model_id = std::string(id);
    return ep;
}

std::filesystem::path resolve(const std::filesystem::path& base, std::string_view value) {
    std::filesystem::path p{std::string(value)};
    if (p.is_relative() && !base.empty()) p = base / p;
    return p;
}

}  // namespace

std::string_view to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Laar: return "laar";
        case PolicyKind::LoadAware: return "load-aware";
        case PolicyKind::SessionAffinity: return "session-affinity";
        case PolicyKind::RoundRobin: return "round-robin";
    }
    return "?";
}

std::optional<PolicyKind> parse_policy(std::string_view name) {
    for (const auto k : {PolicyKind::Laar, PolicyKind::LoadAware, PolicyKind::SessionAffinity, PolicyKind::RoundRobin}) {
        if (name == to_string(k)) return k;
    }
    return std::nullopt;
}

std::vector<std::string> ClusterConfig::model_ids() const {
    std::vector<std::string> ids;
    ids.reserve(endpoints.size());
    for (const auto& ep : endpoints) ids.push_back(ep.profile.model_id);
    return ids;
}

void validate(const ClusterConfig& cfg) {
    if (cfg.retry_cap < 1) throw FormatError("config: retry_cap must be >= 1");
    if (cfg.concurrency < 1) throw FormatError("config: concurrency must be >= 1");
    if (!(cfg.epsilon_q > 0.0 && cfg.epsilon_q < 1.0)) throw FormatError("config: epsilon_q must lie in (0, 1)");
    if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha)) throw FormatError("config: alpha must be >= 0");
    if (cfg.endpoints.empty()) throw FormatError("config: no endpoints");
    std::set<std::string> seen;
    for (const auto& ep : cfg.endpoints) {
        const auto& id = ep.profile.model_id;
        if (id.empty()) throw FormatError("config: empty model id");
        if (!seen.insert(id).second) throw FormatError("config: duplicate model id '" + id + "'");
        if (!(ep.profile.seconds_per_token > 0.0) || !std::isfinite(ep.profile.seconds_per_token)) {
            throw FormatError("config: seconds_per_token for '" + id + "' must be positive");
        }
        if (ep.initial_state.model_id != id) throw FormatError("config: endpoint state/profile mismatch for '" + id + "'");
    }
}

ClusterConfig parse_cluster_config(std::string_view text, const std::filesystem::path& base_dir) {
    ClusterConfig cfg;
    cfg.endpoints.clear();
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw FormatError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));

        if (key == "alpha") {
            cfg.alpha = parse_number<double>(key, value);
        } else if (key == "retry_cap") {
            cfg.retry_cap = parse_number<std::uint32_t>(key, value);
        } else if (key == "concurrency") {
            cfg.concurrency = parse_number<std::uint32_t>(key, value);
        } else if (key == "rng_seed") {
            cfg.rng_seed = parse_number<std::uint64_t>(key, value);
        } else if (key == "epsilon_q") {
            cfg.epsilon_q = parse_number<double>(key, value);
        } else if (key == "policy") {
            const auto p = parse_policy(value);
            if (!p) throw FormatError("config: unknown policy '" + std::string(value) + "'");
            cfg.policy = *p;
        } else if (key == "capability_dir") {
            cfg.capability_dir = resolve(base_dir, value);
        } else if (key.starts_with("endpoint.")) {
            const auto rest = key.substr(9);
            const auto dot = rest.rfind('.');
            if (dot == std::string_view::npos || dot == 0) {
                throw FormatError("config line " + std::to_string(lineno) + ": expected endpoint.<id>.<field>");
            }
            auto& ep = endpoint_named(cfg, rest.substr(0, dot));
            const auto field = rest.substr(dot + 1);
            if (field == "seconds_per_token") {
                ep.profile.seconds_per_token = parse_number<double>(key, value);
            } else if (field == "initial_queued_tokens") {
                ep.initial_state.queued_tokens = parse_number<std::uint64_t>(key, value);
            } else if (field == "capability") {
                ep.capability_path = resolve(base_dir, value);
            } else {
                throw FormatError("config: unknown endpoint field '" + std::string(field) + "'");
            }
        } else {
            throw FormatError("config: unknown key '" + std::string(key) + "'");
        }
    }
    validate(cfg);
    return cfg;
}

ClusterConfig load_cluster_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_cluster_config(buf.str(), path.parent_path());
}

std::filesystem::path capability_path_for(const ClusterConfig& cfg, const EndpointConfig& endpoint) {
    if (!endpoint.capability_path.empty()) return endpoint.capability_path;
    if (!cfg.capability_dir.empty()) return cfg.capability_dir / (endpoint.profile.model_id + ".coef");
    return {};
}

void load_capability_models(ClusterConfig& cfg) {
    for (auto& ep : cfg.endpoints) {
        const auto path = capability_path_for(cfg, ep);
        if (path.empty()) throw IoError("no capability model configured for '" + ep.profile.model_id + "'");
        if (!std::filesystem::exists(path)) throw IoError("missing capability model file: " + path.string());
        ep.profile.capability = load_model(path);
        ep.capability_path = path;
    }
}

ClusterConfig default_cluster_config() {
    ClusterConfig cfg;
    const std::pair<const char*, double> models[] = {
        {"granite-3.1-2b", 0.00012},
        {"granite-3.1-8b", 0.00020},
        {"phi-3-mini", 0.00018},
        {"phi-3-medium", 0.00030},
        {"llama-3.1-swallow-8b", 0.00015},
    };
    for (const auto& [id, spt] : models) {
        EndpointConfig ep;
        ep.profile.model_id = id;
        ep.profile.seconds_per_token = spt;
        ep.initial_state.model_id = id;
        cfg.endpoints.push_back(std::move(ep));
    }
    cfg.rng_seed = 42;
    return cfg;
}

}  // namespace laar
