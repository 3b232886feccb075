#pragma once

// UUID key-value lookup workloads, the answer checker, and the accuracy profile that decides
// whether a simulated model answers a query correctly.

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "laar/core.hpp"

namespace laar {

inline constexpr std::uint64_t kWorkloadLengths[] = {4096, 8192, 16384, 32768, 65536};

struct WorkloadQuery {
    std::string query_id;
    /// Index of the underlying lookup; one base query expands into every (language, length) cell.
    std::uint32_t base_index = 0;
    std::string context;
    std::string question;
    std::string target_key;
    std::string expected_value;
    LanguageClass language = LanguageClass::English;
    std::uint64_t target_tokens = 0;

    /// Text sent to a model: context, newline, question.
    std::string prompt() const;

    bool operator==(const WorkloadQuery&) const = default;
};

/// Builds `n_queries` base lookups for every language and length. Each prompt's estimated token
/// count equals its target exactly (whitespace pads the JSON body). Deterministic in `seed`.
/// Throws std::invalid_argument when a target cannot hold a single key-value pair.
std::vector<WorkloadQuery> generate_workload(std::uint32_t n_queries, std::span<const LanguageClass> languages,
                                             std::span<const std::uint64_t> lengths, std::uint64_t seed);

/// Even base indices first, odd second.
std::pair<std::vector<WorkloadQuery>, std::vector<WorkloadQuery>> split_by_parity(
    std::span<const WorkloadQuery> queries);

/// 1 iff the expected value occurs in the response.
bool check_answer(const WorkloadQuery& query, std::string_view response);

class AccuracyProfile {
public:
    struct Key {
        std::string model_id;
        LanguageClass language;
        LengthBucket bucket;

        auto operator<=>(const Key&) const = default;
    };

    /// Throws FormatError on a probability outside [0, 1].
    void set(const std::string& model_id, LanguageClass language, LengthBucket bucket, double p);
    std::optional<double> find(const std::string& model_id, LanguageClass language, LengthBucket bucket) const;
    /// Throws ConsistencyError when the entry is missing.
    double at(const std::string& model_id, LanguageClass language, LengthBucket bucket) const;

    std::size_t size() const { return entries_.size(); }
    std::vector<std::string> model_ids() const;
    const std::map<Key, double>& entries() const { return entries_; }

    /// Every model must cover en/ja/zh x 4K..64K; throws ConsistencyError naming the first gap.
    void require_complete(std::span<const std::string> model_ids) const;

private:
    std::map<Key, double> entries_;
};

/// Delimited text: header "model,language,bucket,probability", then one row per entry.
/// Languages are en/ja/zh, buckets 4K/8K/16K/32K/64K. '#' lines are comments. The result is
/// checked for completeness over the models it mentions.
AccuracyProfile parse_accuracy_profile(std::string_view text);
AccuracyProfile load_accuracy_profile(const std::filesystem::path& path);
void save_accuracy_profile(const AccuracyProfile& profile, const std::filesystem::path& path);

/// hash64(seed, model_id, query_id), identical on every call.
std::uint64_t response_hash(std::uint64_t seed, std::string_view model_id, std::string_view query_id);

/// Deterministic stand-in for a temperature-0 model answer: the expected value with the profile's
/// probability, otherwise a wrong UUID. Never depends on how often it is asked.
std::string simulate_response(const std::string& model_id, const WorkloadQuery& query,
                              const AccuracyProfile& profile, std::uint64_t seed);

// One JSON object per line.
void write_workload(std::span<const WorkloadQuery> queries, const std::filesystem::path& path);
std::vector<WorkloadQuery> read_workload(const std::filesystem::path& path);

std::string format_uuid(std::uint64_t hi, std::uint64_t lo);

}  // namespace laar
