#include "laar/workload.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "laar/errors.hpp"

namespace laar {

namespace {

std::string_view context_prefix(LanguageClass lang) {
    switch (lang) {
        case LanguageClass::Japanese: return "JSONデータ: ";
        case LanguageClass::Chinese: return "JSON数据: ";
        default: return "JSON data: ";
    }
}

std::string render_question(LanguageClass lang, std::string_view key) {
    switch (lang) {
        case LanguageClass::Japanese: return fmt::format("キー: {}。指定されたキーに関連付けられた値は:", key);
        case LanguageClass::Chinese: return fmt::format("键: {}。与指定键相关联的值是:", key);
        default: return fmt::format("Key: {}. The value associated with the specified key is:", key);
    }
}

std::size_t code_points(std::string_view s) {
    std::size_t n = 0;
    for (const char c : s) {
        if ((static_cast<unsigned char>(c) & 0xC0U) != 0x80U) ++n;
    }
    return n;
}

constexpr std::size_t kUuidChars = 36;
// "<key>": "<value>"
constexpr std::size_t kPairChars = 2 * kUuidChars + 6;
constexpr std::size_t kSeparatorChars = 2;

class UuidSource {
public:
    explicit UuidSource(std::uint64_t seed) : rng_(seed) {}

    std::string next() {
        for (;;) {
            auto id = format_uuid(rng_(), rng_());
            if (used_.insert(id).second) return id;
        }
    }

    std::mt19937_64& rng() { return rng_; }

private:
    std::mt19937_64 rng_;
    std::unordered_set<std::string> used_;
};

std::uint64_t record_seed(std::uint64_t seed, std::uint32_t base, LanguageClass lang, std::uint64_t length) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ base);
    h = mix64(h ^ static_cast<std::uint64_t>(lang));
    return mix64(h ^ length);
}

WorkloadQuery build_query(std::uint32_t base, LanguageClass lang, std::uint64_t target_tokens, std::uint64_t seed) {
    UuidSource uuids(record_seed(seed, base, lang, target_tokens));
    WorkloadQuery q;
    q.base_index = base;
    q.language = lang;
    q.target_tokens = target_tokens;
    q.query_id = fmt::format("q{:03}-{}-{}k", base, to_string(lang), target_tokens / 1024);

    const auto target_chars =
        static_cast<std::size_t>(static_cast<double>(target_tokens) * chars_per_token(lang));
    const auto prefix = context_prefix(lang);
    // Question length does not depend on the key value; every UUID has the same width.
    const std::size_t question_chars = code_points(render_question(lang, std::string(kUuidChars, '0')));
    const std::size_t fixed = code_points(prefix) + 2 + 1 + question_chars;  // braces, newline
    if (fixed + kPairChars > target_chars) {
        throw std::invalid_argument(fmt::format("target length {} too small for one key-value pair", target_tokens));
    }
    const std::size_t pairs = (target_chars - fixed + kSeparatorChars) / (kPairChars + kSeparatorChars);
    const std::size_t used = fixed + pairs * (kPairChars + kSeparatorChars) - kSeparatorChars;
    const std::size_t padding = target_chars - used;

    std::uniform_int_distribution<std::size_t> pick(0, pairs - 1);
    const std::size_t target_index = pick(uuids.rng());

    std::string body;
    body.reserve(target_chars + 16);
    body.append(prefix);
    body.push_back('{');
    for (std::size_t i = 0; i < pairs; ++i) {
        auto key = uuids.next();
        auto value = uuids.next();
        if (i > 0) body.append(", ");
        body.push_back('"');
        body.append(key);
        body.append("\": \"");
        body.append(value);
        body.push_back('"');
        if (i == target_index) {
            q.target_key = std::move(key);
            q.expected_value = std::move(value);
        }
    }
    body.append(padding, ' ');
    body.push_back('}');
    q.context = std::move(body);
    q.question = render_question(lang, q.target_key);
    return q;
}

std::vector<std::string_view> split(std::string_view s, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(delim, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

constexpr LanguageClass kProfileLanguages[] = {LanguageClass::English, LanguageClass::Japanese,
                                               LanguageClass::Chinese};
constexpr LengthBucket kProfileBuckets[] = {LengthBucket::B4K, LengthBucket::B8K, LengthBucket::B16K,
                                            LengthBucket::B32K, LengthBucket::B64K};

}  // namespace

std::string format_uuid(std::uint64_t hi, std::uint64_t lo) {
    // Version 4 / variant 1 layout.
    hi = (hi & 0xFFFFFFFFFFFF0FFFULL) | 0x0000000000004000ULL;
    lo = (lo & 0x3FFFFFFFFFFFFFFFULL) | 0x8000000000000000ULL;
    return fmt::format("{:08x}-{:04x}-{:04x}-{:04x}-{:012x}", hi >> 32, (hi >> 16) & 0xFFFF, hi & 0xFFFF, lo >> 48,
                       lo & 0xFFFFFFFFFFFFULL);
}

std::string WorkloadQuery::prompt() const {
    std::string p;
    p.reserve(context.size() + question.size() + 1);
    p.append(context).append("\n").append(question);
    return p;
}

std::vector<WorkloadQuery> generate_workload(std::uint32_t n_queries, std::span<const LanguageClass> languages,
                                             std::span<const std::uint64_t> lengths, std::uint64_t seed) {
    if (n_queries < 1) throw std::invalid_argument("n_queries must be >= 1");
    if (languages.empty() || lengths.empty()) throw std::invalid_argument("languages and lengths must be nonempty");
    std::vector<WorkloadQuery> out;
    out.reserve(static_cast<std::size_t>(n_queries) * languages.size() * lengths.size());
    for (std::uint32_t base = 0; base < n_queries; ++base) {
        for (const auto lang : languages) {
            for (const auto len : lengths) out.push_back(build_query(base, lang, len, seed));
        }
    }
    return out;
}

std::pair<std::vector<WorkloadQuery>, std::vector<WorkloadQuery>> split_by_parity(
    std::span<const WorkloadQuery> queries) {
    std::pair<std::vector<WorkloadQuery>, std::vector<WorkloadQuery>> out;
    for (const auto& q : queries) (q.base_index % 2 == 0 ? out.first : out.second).push_back(q);
    return out;
}

bool check_answer(const WorkloadQuery& query, std::string_view response) {
    return !query.expected_value.empty() && response.find(query.expected_value) != std::string_view::npos;
}

void AccuracyProfile::set(const std::string& model_id, LanguageClass language, LengthBucket bucket, double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw FormatError(fmt::format("probability {} for ({}, {}, {}) outside [0, 1]", p, model_id,
                                      to_string(language), to_string(bucket)));
    }
    entries_[Key{model_id, language, bucket}] = p;
}

std::optional<double> AccuracyProfile::find(const std::string& model_id, LanguageClass language,
                                            LengthBucket bucket) const {
    const auto it = entries_.find(Key{model_id, language, bucket});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

double AccuracyProfile::at(const std::string& model_id, LanguageClass language, LengthBucket bucket) const {
    if (const auto p = find(model_id, language, bucket)) return *p;
    throw ConsistencyError(fmt::format("accuracy profile has no entry for ({}, {}, {})", model_id,
                                       to_string(language), to_string(bucket)));
}

std::vector<std::string> AccuracyProfile::model_ids() const {
    std::set<std::string> ids;
    for (const auto& [key, p] : entries_) ids.insert(key.model_id);
    return {ids.begin(), ids.end()};
}

void AccuracyProfile::require_complete(std::span<const std::string> model_ids) const {
    for (const auto& m : model_ids) {
        for (const auto lang : kProfileLanguages) {
            for (const auto bucket : kProfileBuckets) (void)at(m, lang, bucket);
        }
    }
}

AccuracyProfile parse_accuracy_profile(std::string_view text) {
    AccuracyProfile profile;
    std::istringstream in{std::string(text)};
    std::string raw;
    bool header = false;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto cols = split(line, ',');
        if (!header) {
            if (cols.size() != 4 || trim(cols[0]) != "model" || trim(cols[1]) != "language" ||
                trim(cols[2]) != "bucket" || trim(cols[3]) != "probability") {
                throw FormatError("accuracy profile: expected header 'model,language,bucket,probability'");
            }
            header = true;
            continue;
        }
        if (cols.size() != 4) throw FormatError(fmt::format("accuracy profile line {}: expected 4 columns", lineno));
        const auto model = trim(cols[0]);
        const auto lang = parse_language(trim(cols[1]));
        const auto bucket = parse_bucket(trim(cols[2]));
        const auto pstr = trim(cols[3]);
        double p = 0.0;
        const auto res = std::from_chars(pstr.data(), pstr.data() + pstr.size(), p);
        if (model.empty() || !lang || !bucket || res.ec != std::errc{} || res.ptr != pstr.data() + pstr.size()) {
            throw FormatError(fmt::format("accuracy profile line {}: cannot parse '{}'", lineno, line));
        }
        profile.set(std::string(model), *lang, *bucket, p);
    }
    if (!header) throw FormatError("accuracy profile: missing header");
    const auto ids = profile.model_ids();
    profile.require_complete(ids);
    return profile;
}

AccuracyProfile load_accuracy_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read accuracy profile: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_accuracy_profile(buf.str());
}

void save_accuracy_profile(const AccuracyProfile& profile, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write accuracy profile: " + path.string());
    out << "model,language,bucket,probability\n";
    for (const auto& [key, p] : profile.entries()) {
        out << fmt::format("{},{},{},{}\n", key.model_id, to_string(key.language), to_string(key.bucket), p);
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::uint64_t response_hash(std::uint64_t seed, std::string_view model_id, std::string_view query_id) {
    std::uint64_t h = fnv1a64(model_id, mix64(seed));
    h = fnv1a64(std::string_view("\x1f", 1), h);
    h = fnv1a64(query_id, h);
    return mix64(h);
}

std::string simulate_response(const std::string& model_id, const WorkloadQuery& query,
                              const AccuracyProfile& profile, std::uint64_t seed) {
    const double p = profile.at(model_id, query.language, bucket_of(query.target_tokens));
    const std::uint64_t h = response_hash(seed, model_id, query.query_id);
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    if (u < p) return query.expected_value;
    std::string wrong = format_uuid(mix64(h ^ 0x5bd1e995ULL), mix64(h ^ 0x27d4eb2fULL));
    if (wrong == query.expected_value) wrong = format_uuid(mix64(h + 1), mix64(h + 2));
    return wrong;
}

void write_workload(std::span<const WorkloadQuery> queries, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write workload: " + path.string());
    for (const auto& q : queries) {
        const nlohmann::ordered_json rec = {
            {"query_id", q.query_id},
            {"base_index", q.base_index},
            {"language", to_string(q.language)},
            {"target_tokens", q.target_tokens},
            {"target_key", q.target_key},
            {"expected_value", q.expected_value},
            {"context", q.context},
            {"question", q.question},
        };
        out << rec.dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<WorkloadQuery> read_workload(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read workload: " + path.string());
    std::vector<WorkloadQuery> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            const auto rec = nlohmann::json::parse(line);
            WorkloadQuery q;
            q.query_id = rec.at("query_id").get<std::string>();
            q.base_index = rec.at("base_index").get<std::uint32_t>();
            const auto lang = parse_language(rec.at("language").get<std::string>());
            if (!lang) throw FormatError("unknown language");
            q.language = *lang;
            q.target_tokens = rec.at("target_tokens").get<std::uint64_t>();
            q.target_key = rec.at("target_key").get<std::string>();
            q.expected_value = rec.at("expected_value").get<std::string>();
            q.context = rec.at("context").get<std::string>();
            q.question = rec.at("question").get<std::string>();
            out.push_back(std::move(q));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
        } catch (const FormatError& e) {
            throw FormatError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
        }
    }
    return out;
}

}  // namespace laar
