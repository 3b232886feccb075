#pragma once

// Endpoint-picker service: scores candidates for one request per call and tracks live endpoint
// load. Transport is JSON over HTTP:
//
//   POST /v1/select   SelectRequest  -> SelectResponse
//   POST /v1/report   {"model_id", "tokens", "event": "dispatch" | "complete"}
//   GET  /v1/state    {"endpoints": [{"model_id", "queued_tokens"}]}
//   GET  /healthz     {"ready", "candidates", "reasons"}
//
// SelectRequest body:
//   request_id        string, required
//   text_sample       string; head+tail sample of the prompt, at most 4096 characters are read
//   total_chars       integer, optional; full prompt length in characters when a sample is sent
//   features          {"language": "en"|"ja"|"zh"|"unknown", "estimated_tokens": n}
//                     exactly one of text_sample / features
//   attempted_models  [string]; models tried by earlier attempts of this request
//   endpoint_states   [{"model_id", "queued_tokens"}], optional; overrides the tracker per model
//
// SelectResponse body:
//   request_id, selected_model, attempted_models (echo, plus the selection appended, for the
//   client to send back on retry), candidates [{"model_id", "cost" (null when excluded),
//   "excluded", "score", "q", "l"}], evaluations {"q", "l"}, decision_micros, warnings [string]

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "laar/config.hpp"
#include "laar/policy.hpp"

namespace laar {

inline constexpr std::size_t kMaxSampleChars = 4096;

/// Malformed or contradictory request body.
struct BadRequest : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SelectRequest {
    std::string request_id;
    std::optional<std::string> text_sample;
    std::optional<std::uint64_t> total_chars;
    std::optional<RequestFeatures> features;
    std::vector<std::string> attempted_models;
    std::optional<std::vector<EndpointState>> endpoint_states;
};

struct SelectResponse {
    std::string request_id;
    std::string selected_model;
    std::vector<ScoredCandidate> candidates;
    std::vector<std::string> attempted_models;
    EvalCounters evaluations;
    double decision_micros = 0.0;
    std::vector<std::string> warnings;
};

struct HealthStatus {
    bool ready = false;
    std::size_t candidates = 0;
    std::vector<std::string> reasons;
};

/// Per-endpoint queued-token counters behind one mutex.
class EndpointTracker {
public:
    explicit EndpointTracker(std::vector<EndpointState> initial);

    /// Throws std::out_of_range for an unknown model. Returns a warning when a completion would
    /// drive the count below zero (it is clamped at zero instead).
    std::optional<std::string> dispatch(const std::string& model_id, std::uint64_t tokens);
    std::optional<std::string> complete(const std::string& model_id, std::uint64_t tokens);

    std::vector<EndpointState> snapshot() const;
    bool contains(const std::string& model_id) const;

private:
    EndpointState& find(const std::string& model_id);

    mutable std::mutex mutex_;
    std::vector<EndpointState> states_;
};

class EppService {
public:
    /// `not_ready_reasons` records configuration problems reported by healthcheck().
    explicit EppService(ClusterConfig cfg, std::vector<std::string> not_ready_reasons = {});

    /// Loads the config and every capability model; failures leave the service not ready.
    static std::unique_ptr<EppService> from_config_file(const std::filesystem::path& path);

    /// Throws BadRequest for malformed input and std::runtime_error when there are no candidates.
    SelectResponse handle_select(const SelectRequest& req);

    std::optional<std::string> report_dispatch(const std::string& model_id, std::uint64_t tokens);
    std::optional<std::string> report_complete(const std::string& model_id, std::uint64_t tokens);

    HealthStatus healthcheck() const;
    std::vector<EndpointState> snapshot() const { return tracker_.snapshot(); }
    const ClusterConfig& config() const { return cfg_; }

private:
    ClusterConfig cfg_;
    std::vector<std::string> reasons_;
    EndpointTracker tracker_;
    Router router_;
};

SelectRequest parse_select_request(const nlohmann::json& body);
nlohmann::json to_json(const SelectRequest& req);
nlohmann::json to_json(const SelectResponse& resp);
SelectResponse parse_select_response(const nlohmann::json& body);
nlohmann::json to_json(const HealthStatus& status);

/// HTTP front end for an EppService.
class ServiceServer {
public:
    explicit ServiceServer(EppService& service);
    ~ServiceServer();
    ServiceServer(const ServiceServer&) = delete;
    ServiceServer& operator=(const ServiceServer&) = delete;

    /// Returns false when the address cannot be bound. Port 0 picks a free port.
    bool bind(const std::string& host, int port);
    int port() const;
    /// Blocks until stop().
    void serve();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Splits "host:port"; throws std::invalid_argument when malformed.
std::pair<std::string, int> parse_listen_address(const std::string& addr);

}  // namespace laar
