#pragma once

// Discrete-event simulation of a multi-model serving cluster. Closed-loop client streams issue
// requests, failed attempts retry immediately through the router, and every endpoint serves a
// FIFO queue one attempt at a time. The event loop is single-threaded over a virtual clock.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "laar/config.hpp"
#include "laar/policy.hpp"
#include "laar/workload.hpp"

namespace laar {

enum class EventKind : std::uint8_t { ServiceEnd = 0, ServiceStart = 1, RetryDispatch = 2, Arrival = 3 };

std::string_view to_string(EventKind kind);

struct SimEvent {
    double time = 0.0;
    EventKind kind = EventKind::Arrival;
    std::string request_id;
    std::uint32_t attempt_index = 0;
    std::string model_id;
};

struct AttemptRecord {
    std::uint32_t attempt_index = 1;
    std::string model_id;
    double dispatch_time = 0.0;
    double start_time = 0.0;
    double end_time = 0.0;
    /// end_time - dispatch_time
    double latency = 0.0;
    bool correct = false;
    std::uint64_t tokens = 0;

    bool operator==(const AttemptRecord&) const = default;
};

struct RequestOutcome {
    std::string request_id;
    LanguageClass language = LanguageClass::English;
    std::uint64_t target_tokens = 0;
    std::vector<AttemptRecord> attempts;
    /// 1-based index of the first correct attempt.
    std::optional<std::uint32_t> first_correct;
    double ttca = 0.0;
    bool censored = false;

    bool operator==(const RequestOutcome&) const = default;
};

class Simulator {
public:
    /// Validates the profile against the cluster's models (ConsistencyError on a gap).
    Simulator(const ClusterConfig& cluster, std::span<const WorkloadQuery> queries, const AccuracyProfile& profile);
    ~Simulator();
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    /// Processes the next event. Returns false once the event queue is empty.
    bool step();
    void run();

    double now() const;
    std::vector<EndpointState> snapshot_states() const;

    /// Throws std::logic_error when an endpoint's queued_tokens differs from the tokens of the
    /// attempts it holds. Checked after every event.
    void check_conservation() const;

    /// Finished requests in workload order (unfinished ones are absent).
    std::vector<RequestOutcome> outcomes() const;
    std::uint64_t events_processed() const;

    /// Called after each event has been applied.
    void set_observer(std::function<void(const SimEvent&, const Simulator&)> observer);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Throws std::invalid_argument on an empty workload.
std::vector<RequestOutcome> run_simulation(const ClusterConfig& cluster, std::span<const WorkloadQuery> queries,
                                           const AccuracyProfile& profile);

// Attempt log: tab-separated, first line "# laar-attempts v1", then a column header row:
// policy request_id language target_tokens attempt model_id tokens dispatch start end latency correct
struct AttemptLogRow {
    std::string policy;
    std::string request_id;
    LanguageClass language = LanguageClass::English;
    std::uint64_t target_tokens = 0;
    AttemptRecord attempt;
};

std::string format_attempt_log(std::string_view policy, std::span<const RequestOutcome> outcomes,
                               bool include_header = true);
void write_attempt_log(std::string_view policy, std::span<const RequestOutcome> outcomes,
                       const std::filesystem::path& path);
std::vector<AttemptLogRow> read_attempt_log(const std::filesystem::path& path);

/// Regroups log rows into outcomes (per policy and request, in first-seen order).
std::vector<RequestOutcome> outcomes_from_log(std::span<const AttemptLogRow> rows, std::uint32_t retry_cap);

}  // namespace laar
