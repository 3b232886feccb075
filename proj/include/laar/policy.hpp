#pragma once

// Routing policies. LAAR ranks candidates by L(m, x) / Q(m, x) and excludes models a request has
// already tried; load-aware, session-affinity and round-robin are the comparison baselines.

#include <atomic>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "laar/config.hpp"
#include "laar/core.hpp"

namespace laar {

struct RoutingContext {
    RequestFeatures features;
    /// Models already tried for this request, in attempt order, no duplicates.
    std::vector<std::string> attempted_models;
    std::string session_id;
    std::string request_id;

    bool attempted(std::string_view model_id) const;
    /// Appends unless already present.
    void record_attempt(const std::string& model_id);
};

struct ScoredCandidate {
    std::string model_id;
    double cost = 0.0;   // +inf when excluded
    double score = 0.0;  // 1 / (cost + 1e-9), 0 when excluded
    double q = 0.0;
    double l = 0.0;

    bool excluded() const;
};

/// A model endpoint offered to a policy together with a load snapshot.
struct Candidate {
    const ModelProfile* profile = nullptr;
    EndpointState state;
};

/// Number of capability and latency evaluations performed.
struct EvalCounters {
    std::uint64_t q_evals = 0;
    std::uint64_t l_evals = 0;
};

inline constexpr double kScoreEpsilon = 1e-9;

double score_from_cost(double cost);

/// Cost of one candidate. `exclude_attempted` is true when some candidate in the set has not
/// been tried yet; then attempted models get infinite cost. Unknown language scores as English.
ScoredCandidate laar_cost(const ModelProfile& profile, const RequestFeatures& features, const EndpointState& state,
                          const RoutingContext& ctx, const ClusterConfig& cfg, bool exclude_attempted,
                          EvalCounters* counters = nullptr);

struct LaarSelection {
    std::string model_id;
    /// One entry per candidate, in candidate order.
    std::vector<ScoredCandidate> scores;
};

/// Maximal score wins; ties go to the lexicographically smallest model id.
LaarSelection score_laar(std::span<const Candidate> candidates, const RoutingContext& ctx, const ClusterConfig& cfg,
                         EvalCounters* counters = nullptr);

std::string select_laar(std::span<const Candidate> candidates, const RoutingContext& ctx, const ClusterConfig& cfg);
std::string select_load_aware(std::span<const Candidate> candidates, const RoutingContext& ctx,
                              const ClusterConfig& cfg);
/// FNV-1a(session_id) modulo the candidate count over sorted model ids.
std::string select_session_affinity(std::span<const Candidate> candidates, const RoutingContext& ctx,
                                    const ClusterConfig& cfg);

/// Cycles through sorted model ids. The counter is shared by every request the instance routes.
class RoundRobinSelector {
public:
    std::string select(std::span<const Candidate> candidates);

private:
    std::atomic<std::uint64_t> next_{0};
};

/// Dispatches to the policy named in the configuration. Safe for concurrent use.
class Router {
public:
    explicit Router(PolicyKind kind) : kind_(kind) {}

    PolicyKind kind() const { return kind_; }

    /// Throws std::invalid_argument on an empty candidate list.
    std::string select(std::span<const Candidate> candidates, const RoutingContext& ctx, const ClusterConfig& cfg,
                       EvalCounters* counters = nullptr);

private:
    PolicyKind kind_;
    RoundRobinSelector round_robin_;
};

}  // namespace laar
