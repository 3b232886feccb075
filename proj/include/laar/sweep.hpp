#pragma once

// Policy x (language, length) experiment sweeps. Every job is an independent simulation, so the
// parallel kernels distribute jobs over OpenMP threads; the serial versions are the reference
// the tests compare against. Results are identical for any thread count.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "laar/config.hpp"
#include "laar/metrics.hpp"
#include "laar/simulator.hpp"
#include "laar/workload.hpp"

namespace laar {

struct Cell {
    LanguageClass language = LanguageClass::English;
    std::uint64_t target_tokens = 0;

    auto operator<=>(const Cell&) const = default;
};

/// Distinct cells of a workload, language order then length.
std::vector<Cell> cells_of(std::span<const WorkloadQuery> queries);

/// Queries of one cell in workload order.
std::vector<WorkloadQuery> queries_in(std::span<const WorkloadQuery> queries, const Cell& cell);

struct SweepResult {
    PolicyKind policy = PolicyKind::Laar;
    Cell cell;
    std::vector<RequestOutcome> outcomes;
};

enum class Execution { Serial, Parallel };

/// One simulation per (policy, cell), jobs ordered policy-major. The cluster's policy field is
/// overridden per job; everything else, including the seed, is shared.
std::vector<SweepResult> run_sweep(const ClusterConfig& cluster, std::span<const WorkloadQuery> queries,
                                   const AccuracyProfile& profile, std::span<const PolicyKind> policies,
                                   Execution mode = Execution::Parallel);

std::vector<TtcaSummary> summarize_sweep(std::span<const SweepResult> results, std::uint32_t retry_cap,
                                         Execution mode = Execution::Parallel);

/// compute_ttca over many attempt lists.
std::vector<TtcaResult> compute_ttca_batch(std::span<const std::vector<AttemptRecord>> attempt_lists,
                                           std::uint32_t retry_cap, Execution mode = Execution::Parallel);

struct ComparisonRow {
    Cell cell;
    std::vector<double> mean_ttca;  // one per policy, input order
    std::vector<double> ratios;     // reference vs each later policy
    std::vector<double> final_success;
};

/// The first policy is the reference; ratios compare it against every other policy.
std::vector<ComparisonRow> compare_policies(std::span<const SweepResult> results, std::span<const PolicyKind> policies,
                                            std::uint32_t retry_cap);

/// Tab-separated comparison table with a "# laar-compare v1" first line.
std::string format_comparison(std::span<const ComparisonRow> rows, std::span<const PolicyKind> policies);

}  // namespace laar
