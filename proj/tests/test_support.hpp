#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "laar/capability.hpp"
#include "laar/config.hpp"
#include "laar/workload.hpp"

namespace laar::testing {

inline std::filesystem::path data_dir() { return LAAR_DATA_DIR; }

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("laar-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline EndpointConfig endpoint(const std::string& id, double seconds_per_token, std::uint64_t queued = 0) {
    EndpointConfig ep;
    ep.profile.model_id = id;
    ep.profile.seconds_per_token = seconds_per_token;
    ep.initial_state = EndpointState{id, queued};
    return ep;
}

/// Capability model whose prediction is `q` for every request.
inline CapabilityModel constant_capability(double q) {
    CapabilityModel m;
    m.weights[kBiasSlot] = std::log(q / (1.0 - q));
    return m;
}

/// Every (model, en/ja/zh, 4K..64K) entry set to `p`.
inline AccuracyProfile flat_profile(const std::vector<std::string>& models, double p) {
    AccuracyProfile profile;
    for (const auto& m : models) {
        for (const auto lang : {LanguageClass::English, LanguageClass::Japanese, LanguageClass::Chinese}) {
            for (const auto b : {LengthBucket::B4K, LengthBucket::B8K, LengthBucket::B16K, LengthBucket::B32K,
                                 LengthBucket::B64K}) {
                profile.set(m, lang, b, p);
            }
        }
    }
    return profile;
}

inline ClusterConfig single_endpoint_cluster(double seconds_per_token, std::uint32_t retry_cap,
                                             PolicyKind policy = PolicyKind::Laar) {
    ClusterConfig cfg;
    cfg.endpoints.push_back(endpoint("solo", seconds_per_token));
    cfg.retry_cap = retry_cap;
    cfg.concurrency = 8;
    cfg.policy = policy;
    cfg.rng_seed = 1;
    return cfg;
}

inline std::vector<WorkloadQuery> english_queries(std::uint32_t n, std::uint64_t tokens, std::uint64_t seed = 7) {
    const LanguageClass langs[] = {LanguageClass::English};
    const std::uint64_t lengths[] = {tokens};
    return generate_workload(n, langs, lengths, seed);
}

inline std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + 1)) ++n;
    return n;
}

}  // namespace laar::testing
