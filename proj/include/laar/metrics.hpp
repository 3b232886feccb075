#pragma once

// Time-to-correct-answer accounting, per-retry curves and report files.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "laar/simulator.hpp"

namespace laar {

struct TtcaResult {
    double ttca = 0.0;
    std::optional<std::uint32_t> first_correct;
    bool censored = false;

    bool operator==(const TtcaResult&) const = default;
};

/// Sum of latencies up to and including the first correct attempt; the sum over every recorded
/// attempt when none is correct (censored). Throws std::invalid_argument on an empty list, more
/// than `retry_cap` attempts, or indices that do not run 1, 2, 3, ...
TtcaResult compute_ttca(std::span<const AttemptRecord> attempts, std::uint32_t retry_cap);

/// Entry k-1 is the fraction of requests whose first correct attempt is at index <= k.
std::vector<double> success_curve(std::span<const RequestOutcome> outcomes, std::uint32_t retry_cap);

/// Entry k-1 is the mean time a request has spent after k attempts (fewer when it stopped earlier).
std::vector<double> ttca_curve(std::span<const RequestOutcome> outcomes, std::uint32_t retry_cap);

/// Censored requests contribute their accumulated latency.
double mean_ttca(std::span<const RequestOutcome> outcomes);

/// (baseline mean - reference mean) / baseline mean. Throws on empty input, mismatched sizes or a
/// zero baseline mean.
double improvement_ratio(std::span<const RequestOutcome> reference, std::span<const RequestOutcome> baseline);

struct TtcaSummary {
    std::string policy;
    LanguageClass language = LanguageClass::English;
    std::uint64_t target_tokens = 0;
    double mean_ttca = 0.0;
    std::vector<double> success_rates;
    double censored_fraction = 0.0;
    std::uint64_t n = 0;

    bool operator==(const TtcaSummary&) const = default;
};

TtcaSummary summarize(std::string policy, LanguageClass language, std::uint64_t target_tokens,
                      std::span<const RequestOutcome> outcomes, std::uint32_t retry_cap);

// Report: tab-separated, first line "# laar-report v1 censored=included", then the header
// policy language target_tokens n mean_ttca censored_fraction success_rates
// where success_rates is a ';'-joined list with one entry per allowed attempt. Reals use the
// shortest round-trip representation.
void write_report(std::span<const TtcaSummary> summaries, const std::filesystem::path& path);
std::vector<TtcaSummary> read_report(const std::filesystem::path& path);

}  // namespace laar
