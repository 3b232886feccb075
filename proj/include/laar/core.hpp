#pragma once

// Domain types and request feature extraction shared by every routing component.

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

namespace laar {

enum class LanguageClass : std::uint8_t { English = 0, Japanese = 1, Chinese = 2, Unknown = 3 };

inline constexpr std::size_t kNumLanguages = 4;
inline constexpr std::array<LanguageClass, kNumLanguages> kAllLanguages{
    LanguageClass::English, LanguageClass::Japanese, LanguageClass::Chinese, LanguageClass::Unknown};

enum class LengthBucket : std::uint8_t { B4K = 0, B8K = 1, B16K = 2, B32K = 3, B64K = 4, BOver = 5 };

inline constexpr std::size_t kNumBuckets = 6;
inline constexpr std::array<LengthBucket, kNumBuckets> kAllBuckets{
    LengthBucket::B4K,  LengthBucket::B8K,  LengthBucket::B16K,
    LengthBucket::B32K, LengthBucket::B64K, LengthBucket::BOver};

/// Inclusive upper token bound of a bucket; BOver is unbounded.
constexpr std::uint64_t bucket_upper_bound(LengthBucket b) {
    switch (b) {
        case LengthBucket::B4K: return 4096;
        case LengthBucket::B8K: return 8192;
        case LengthBucket::B16K: return 16384;
        case LengthBucket::B32K: return 32768;
        case LengthBucket::B64K: return 65536;
        case LengthBucket::BOver: break;
    }
    return std::numeric_limits<std::uint64_t>::max();
}

inline constexpr std::string_view kKvLookupTask = "kv-lookup";

struct RequestFeatures {
    LanguageClass language = LanguageClass::Unknown;
    std::uint64_t estimated_tokens = 0;
    LengthBucket bucket = LengthBucket::B4K;
    std::string task_type{kKvLookupTask};

    bool operator==(const RequestFeatures&) const = default;
};

/// Endpoint load signal: prompt tokens queued or in service at a model's endpoint.
struct EndpointState {
    std::string model_id;
    std::uint64_t queued_tokens = 0;

    bool operator==(const EndpointState&) const = default;
};

// Names used in files, flags and JSON bodies.
std::string_view to_string(LanguageClass lang);
std::string_view to_string(LengthBucket bucket);
std::optional<LanguageClass> parse_language(std::string_view s);
std::optional<LengthBucket> parse_bucket(std::string_view s);

/// Kana wins over CJK ideographs, which win over ASCII letters.
LanguageClass classify_language(std::string_view utf8_sample);

/// Counts bytes inspected by the feature-extraction path.
struct ScanStats {
    std::size_t bytes_inspected = 0;
};

/// First and last `max_chars` code points of `full_text`; the whole text when the two windows
/// overlap. Only the two windows are walked.
std::string sample_text(std::string_view full_text, std::size_t max_chars, ScanStats* stats = nullptr);

double chars_per_token(LanguageClass lang);

/// ceil(code points / chars_per_token(language)). Linear in the text.
std::uint64_t estimate_tokens(std::string_view full_text, LanguageClass language);

LengthBucket bucket_of(std::uint64_t tokens);

inline constexpr std::size_t kDefaultSampleChars = 512;

/// Sample-bounded feature extraction. When the text is longer than both windows the code-point
/// count of the unsampled middle is extrapolated from the sample's bytes-per-character ratio, so
/// the work done never depends on the prompt length.
RequestFeatures extract_features(std::string_view full_text, std::size_t max_chars = kDefaultSampleChars,
                                 ScanStats* stats = nullptr);

/// Feature record for a known token count (used by the service and by training-data loaders).
RequestFeatures make_features(LanguageClass language, std::uint64_t estimated_tokens);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace laar
