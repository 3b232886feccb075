#include "laar/sweep.hpp"

#include <fmt/format.h>

#include <exception>
#include <set>
#include <stdexcept>

#include <omp.h>

namespace laar {

namespace {

// Runs body(i) for i in [0, n); exceptions inside the parallel region are rethrown after it.
template <typename Body>
void for_each_index(std::size_t n, Execution mode, Body&& body) {
    if (mode == Execution::Serial) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr error;
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(laar_sweep_error)
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace

std::vector<Cell> cells_of(std::span<const WorkloadQuery> queries) {
    std::set<Cell> cells;
    for (const auto& q : queries) cells.insert(Cell{q.language, q.target_tokens});
    return {cells.begin(), cells.end()};
}

std::vector<WorkloadQuery> queries_in(std::span<const WorkloadQuery> queries, const Cell& cell) {
    std::vector<WorkloadQuery> out;
    for (const auto& q : queries) {
        if (q.language == cell.language && q.target_tokens == cell.target_tokens) out.push_back(q);
    }
    return out;
}

std::vector<SweepResult> run_sweep(const ClusterConfig& cluster, std::span<const WorkloadQuery> queries,
                                   const AccuracyProfile& profile, std::span<const PolicyKind> policies,
                                   Execution mode) {
    if (queries.empty()) throw std::invalid_argument("run_sweep: empty workload");
    const auto cells = cells_of(queries);
    std::vector<std::vector<WorkloadQuery>> cell_queries;
    cell_queries.reserve(cells.size());
    for (const auto& c : cells) cell_queries.push_back(queries_in(queries, c));

    std::vector<SweepResult> results(policies.size() * cells.size());
    for_each_index(results.size(), mode, [&](std::size_t job) {
        const std::size_t p = job / cells.size();
        const std::size_t c = job % cells.size();
        ClusterConfig cfg = cluster;
        cfg.policy = policies[p];
        auto& r = results[job];
        r.policy = policies[p];
        r.cell = cells[c];
        r.outcomes = run_simulation(cfg, cell_queries[c], profile);
    });
    return results;
}

std::vector<TtcaSummary> summarize_sweep(std::span<const SweepResult> results, std::uint32_t retry_cap,
                                         Execution mode) {
    std::vector<TtcaSummary> out(results.size());
    for_each_index(results.size(), mode, [&](std::size_t i) {
        const auto& r = results[i];
        out[i] = summarize(std::string(to_string(r.policy)), r.cell.language, r.cell.target_tokens, r.outcomes,
                           retry_cap);
    });
    return out;
}

std::vector<TtcaResult> compute_ttca_batch(std::span<const std::vector<AttemptRecord>> attempt_lists,
                                           std::uint32_t retry_cap, Execution mode) {
    std::vector<TtcaResult> out(attempt_lists.size());
    if (mode == Execution::Serial) {
        for (std::size_t i = 0; i < attempt_lists.size(); ++i) out[i] = compute_ttca(attempt_lists[i], retry_cap);
        return out;
    }
    std::exception_ptr error;
    const auto count = static_cast<std::ptrdiff_t>(attempt_lists.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = compute_ttca(attempt_lists[static_cast<std::size_t>(i)], retry_cap);
        } catch (...) {
#pragma omp critical(laar_ttca_error)
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return out;
}

std::vector<ComparisonRow> compare_policies(std::span<const SweepResult> results, std::span<const PolicyKind> policies,
                                            std::uint32_t retry_cap) {
    if (policies.size() < 2) throw std::invalid_argument("compare needs at least two policies");
    if (results.size() % policies.size() != 0) throw std::invalid_argument("sweep results do not match policies");
    const std::size_t n_cells = results.size() / policies.size();
    std::vector<ComparisonRow> rows(n_cells);
    for (std::size_t c = 0; c < n_cells; ++c) {
        auto& row = rows[c];
        row.cell = results[c].cell;
        const auto& reference = results[c].outcomes;
        for (std::size_t p = 0; p < policies.size(); ++p) {
            const auto& r = results[p * n_cells + c];
            if (r.cell != row.cell) throw std::invalid_argument("sweep results are not policy-major");
            row.mean_ttca.push_back(mean_ttca(r.outcomes));
            row.final_success.push_back(success_curve(r.outcomes, retry_cap).back());
            if (p > 0) row.ratios.push_back(improvement_ratio(reference, r.outcomes));
        }
    }
    return rows;
}

std::string format_comparison(std::span<const ComparisonRow> rows, std::span<const PolicyKind> policies) {
    std::string out = "# laar-compare v1 censored=included reference=";
    out += to_string(policies.front());
    out += "\nlanguage\ttarget_tokens";
    for (std::size_t p = 0; p < policies.size(); ++p) {
        out += fmt::format("\tmean_ttca[{}]\tfinal_success[{}]", to_string(policies[p]), to_string(policies[p]));
    }
    for (std::size_t p = 1; p < policies.size(); ++p) out += fmt::format("\tratio_vs[{}]", to_string(policies[p]));
    out += '\n';
    for (const auto& row : rows) {
        out += fmt::format("{}\t{}", to_string(row.cell.language), row.cell.target_tokens);
        for (std::size_t p = 0; p < policies.size(); ++p) {
            out += fmt::format("\t{:.6f}\t{:.4f}", row.mean_ttca[p], row.final_success[p]);
        }
        for (const double r : row.ratios) out += fmt::format("\t{:.6f}", r);
        out += '\n';
    }
    return out;
}

}  // namespace laar
