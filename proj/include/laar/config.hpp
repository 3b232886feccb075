#pragma once

// Cluster configuration: model profiles, router constants and the key/value file they load from.
//
// File format (one `key = value` per line, '#' comments):
//
//   alpha = 0.7
//   retry_cap = 10
//   concurrency = 8
//   rng_seed = 42
//   epsilon_q = 0.001
//   policy = laar
//   capability_dir = models            # optional; <dir>/<model_id>.coef
//   endpoint.<model_id>.seconds_per_token = 0.00012
//   endpoint.<model_id>.initial_queued_tokens = 0     # optional
//   endpoint.<model_id>.capability = path/to/file     # optional, overrides capability_dir
//
// Relative paths resolve against the config file's directory. Endpoints keep file order.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "laar/capability.hpp"
#include "laar/core.hpp"

namespace laar {

enum class PolicyKind : std::uint8_t { Laar, LoadAware, SessionAffinity, RoundRobin };

std::string_view to_string(PolicyKind kind);
std::optional<PolicyKind> parse_policy(std::string_view name);

struct ModelProfile {
    std::string model_id;
    double seconds_per_token = 0.0;
    CapabilityModel capability;
};

struct EndpointConfig {
    ModelProfile profile;
    EndpointState initial_state;
    /// Where the capability coefficients come from; empty when none is configured.
    std::filesystem::path capability_path;
};

struct ClusterConfig {
    std::vector<EndpointConfig> endpoints;
    double alpha = 0.7;
    std::uint32_t retry_cap = 10;
    std::uint32_t concurrency = 8;
    std::uint64_t rng_seed = 0;
    double epsilon_q = 1e-3;
    PolicyKind policy = PolicyKind::Laar;
    std::filesystem::path capability_dir;

    std::vector<std::string> model_ids() const;
};

/// Throws FormatError when an invariant fails (duplicate ids, nonpositive speeds, ranges).
void validate(const ClusterConfig& cfg);

ClusterConfig parse_cluster_config(std::string_view text, const std::filesystem::path& base_dir = {});
ClusterConfig load_cluster_config(const std::filesystem::path& path);

/// Capability file path resolved for one endpoint (explicit path, else capability_dir).
std::filesystem::path capability_path_for(const ClusterConfig& cfg, const EndpointConfig& endpoint);

/// Loads every endpoint's coefficient file; IoError names the first missing file.
void load_capability_models(ClusterConfig& cfg);

/// A five-model cluster with the router constants used throughout the experiments.
ClusterConfig default_cluster_config();

}  // namespace laar
