#include "laar/core.hpp"

#include <cmath>

namespace laar {

namespace {

constexpr bool is_continuation(unsigned char c) { return (c & 0xC0U) == 0x80U; }

// Decodes one code point starting at `i` and advances `i`. Malformed sequences decode as a
// single replacement unit so that every byte belongs to exactly one character.
char32_t next_code_point(std::string_view s, std::size_t& i) {
    const auto lead = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = lead;
    if (lead >= 0xF0U && lead < 0xF8U) {
        len = 4;
        cp = lead & 0x07U;
    } else if (lead >= 0xE0U) {
        len = 3;
        cp = lead & 0x0FU;
    } else if (lead >= 0xC0U) {
        len = 2;
        cp = lead & 0x1FU;
    } else if (lead >= 0x80U) {
        ++i;
        return 0xFFFD;
    }
    if (len > 1) {
        if (i + len > s.size()) {
            ++i;
            return 0xFFFD;
        }
        for (std::size_t k = 1; k < len; ++k) {
            const auto c = static_cast<unsigned char>(s[i + k]);
            if (!is_continuation(c)) {
                ++i;
                return 0xFFFD;
            }
            cp = (cp << 6) | (c & 0x3FU);
        }
    }
    i += len;
    return cp;
}

std::size_t count_code_points(std::string_view s) {
    std::size_t n = 0;
    for (const char c : s) {
        if (!is_continuation(static_cast<unsigned char>(c))) ++n;
    }
    return n;
}

// Byte offset just past the first `n` code points.
std::size_t advance_forward(std::string_view s, std::size_t n) {
    std::size_t i = 0;
    for (std::size_t k = 0; k < n && i < s.size(); ++k) {
        ++i;
        while (i < s.size() && is_continuation(static_cast<unsigned char>(s[i]))) ++i;
    }
    return i;
}

// Byte offset where the last `n` code points begin.
std::size_t advance_backward(std::string_view s, std::size_t n) {
    std::size_t i = s.size();
    for (std::size_t k = 0; k < n && i > 0; ++k) {
        --i;
        while (i > 0 && is_continuation(static_cast<unsigned char>(s[i]))) --i;
    }
    return i;
}

struct Windows {
    std::size_t head_end;
    std::size_t tail_start;
    bool overlapping() const { return tail_start <= head_end; }
};

Windows find_windows(std::string_view text, std::size_t max_chars, ScanStats* stats) {
    Windows w{advance_forward(text, max_chars), advance_backward(text, max_chars)};
    if (stats) {
        if (w.overlapping()) {
            stats->bytes_inspected += text.size();
        } else {
            stats->bytes_inspected += w.head_end + (text.size() - w.tail_start);
        }
    }
    return w;
}

}  // namespace

std::string_view to_string(LanguageClass lang) {
    switch (lang) {
        case LanguageClass::English: return "en";
        case LanguageClass::Japanese: return "ja";
        case LanguageClass::Chinese: return "zh";
        case LanguageClass::Unknown: break;
    }
    return "unknown";
}

std::string_view to_string(LengthBucket bucket) {
    switch (bucket) {
        case LengthBucket::B4K: return "4K";
        case LengthBucket::B8K: return "8K";
        case LengthBucket::B16K: return "16K";
        case LengthBucket::B32K: return "32K";
        case LengthBucket::B64K: return "64K";
        case LengthBucket::BOver: break;
    }
    return "over";
}

std::optional<LanguageClass> parse_language(std::string_view s) {
    if (s == "en" || s == "English" || s == "english") return LanguageClass::English;
    if (s == "ja" || s == "Japanese" || s == "japanese") return LanguageClass::Japanese;
    if (s == "zh" || s == "Chinese" || s == "chinese") return LanguageClass::Chinese;
    if (s == "unknown" || s == "Unknown") return LanguageClass::Unknown;
    return std::nullopt;
}

std::optional<LengthBucket> parse_bucket(std::string_view s) {
    for (const auto b : kAllBuckets) {
        if (s == to_string(b)) return b;
    }
    if (s == "B4K") return LengthBucket::B4K;
    if (s == "B8K") return LengthBucket::B8K;
    if (s == "B16K") return LengthBucket::B16K;
    if (s == "B32K") return LengthBucket::B32K;
    if (s == "B64K") return LengthBucket::B64K;
    if (s == "BOver") return LengthBucket::BOver;
    return std::nullopt;
}

LanguageClass classify_language(std::string_view sample) {
    bool cjk = false;
    bool ascii_letter = false;
    std::size_t i = 0;
    while (i < sample.size()) {
        const char32_t cp = next_code_point(sample, i);
        if (cp >= 0x3040 && cp <= 0x30FF) return LanguageClass::Japanese;
        if (cp >= 0x4E00 && cp <= 0x9FFF) {
            cjk = true;
        } else if ((cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z')) {
            ascii_letter = true;
        }
    }
    if (cjk) return LanguageClass::Chinese;
    if (ascii_letter) return LanguageClass::English;
    return LanguageClass::Unknown;
}

std::string sample_text(std::string_view full_text, std::size_t max_chars, ScanStats* stats) {
    const Windows w = find_windows(full_text, max_chars, stats);
    if (w.overlapping()) return std::string(full_text);
    std::string out;
    out.reserve(w.head_end + (full_text.size() - w.tail_start));
    out.append(full_text.substr(0, w.head_end));
    out.append(full_text.substr(w.tail_start));
    return out;
}

double chars_per_token(LanguageClass lang) { return lang == LanguageClass::English ? 4.0 : 1.0; }

std::uint64_t estimate_tokens(std::string_view full_text, LanguageClass language) {
    const auto chars = static_cast<double>(count_code_points(full_text));
    return static_cast<std::uint64_t>(std::ceil(chars / chars_per_token(language)));
}

LengthBucket bucket_of(std::uint64_t tokens) {
    for (const auto b : kAllBuckets) {
        if (tokens <= bucket_upper_bound(b)) return b;
    }
    return LengthBucket::BOver;
}

RequestFeatures make_features(LanguageClass language, std::uint64_t estimated_tokens) {
    RequestFeatures f;
    f.language = language;
    f.estimated_tokens = estimated_tokens;
    f.bucket = bucket_of(estimated_tokens);
    return f;
}

RequestFeatures extract_features(std::string_view full_text, std::size_t max_chars, ScanStats* stats) {
    const Windows w = find_windows(full_text, max_chars, stats);
    if (w.overlapping()) {
        if (stats) stats->bytes_inspected += full_text.size();
        const LanguageClass lang = classify_language(full_text);
        return make_features(lang, estimate_tokens(full_text, lang));
    }

    const std::string_view head = full_text.substr(0, w.head_end);
    const std::string_view tail = full_text.substr(w.tail_start);
    std::string sample;
    sample.reserve(head.size() + tail.size());
    sample.append(head).append(tail);
    if (stats) stats->bytes_inspected += sample.size();

    const LanguageClass lang = classify_language(sample);
    const double sample_chars = 2.0 * static_cast<double>(max_chars);
    const double middle_bytes = static_cast<double>(w.tail_start - w.head_end);
    const double chars = sample_chars + middle_bytes * sample_chars / static_cast<double>(sample.size());
    return make_features(lang, static_cast<std::uint64_t>(std::ceil(chars / chars_per_token(lang))));
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace laar
