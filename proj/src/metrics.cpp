#include "laar/metrics.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "laar/errors.hpp"

namespace laar {

namespace {

std::string real(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_real(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw FormatError("bad number '" + std::string(s) + "'");
    return v;
}

std::uint64_t parse_uint(std::string_view s) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw FormatError("bad integer '" + std::string(s) + "'");
    return v;
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

constexpr std::string_view kReportVersion = "# laar-report v1 censored=included";
constexpr std::string_view kReportHeader =
    "policy\tlanguage\ttarget_tokens\tn\tmean_ttca\tcensored_fraction\tsuccess_rates";

}  // namespace

TtcaResult compute_ttca(std::span<const AttemptRecord> attempts, std::uint32_t retry_cap) {
    if (attempts.empty()) throw std::invalid_argument("empty attempt list");
    if (attempts.size() > retry_cap) throw std::invalid_argument("more attempts than retry_cap");
    TtcaResult r;
    for (std::size_t i = 0; i < attempts.size(); ++i) {
        if (attempts[i].attempt_index != i + 1) throw std::invalid_argument("attempt indices must be consecutive from 1");
    }
    for (const auto& a : attempts) {
        r.ttca += a.latency;
        if (a.correct) {
            r.first_correct = a.attempt_index;
            return r;
        }
    }
    r.censored = true;
    return r;
}

std::vector<double> success_curve(std::span<const RequestOutcome> outcomes, std::uint32_t retry_cap) {
    if (outcomes.empty()) throw std::invalid_argument("no outcomes");
    std::vector<double> counts(retry_cap, 0.0);
    for (const auto& o : outcomes) {
        if (!o.first_correct) continue;
        for (std::uint32_t k = *o.first_correct; k <= retry_cap; ++k) counts[k - 1] += 1.0;
    }
    for (auto& c : counts) c /= static_cast<double>(outcomes.size());
    return counts;
}

std::vector<double> ttca_curve(std::span<const RequestOutcome> outcomes, std::uint32_t retry_cap) {
    if (outcomes.empty()) throw std::invalid_argument("no outcomes");
    std::vector<double> sums(retry_cap, 0.0);
    for (const auto& o : outcomes) {
        double acc = 0.0;
        for (std::uint32_t k = 1; k <= retry_cap; ++k) {
            if (k <= o.attempts.size() && !(o.first_correct && k > *o.first_correct)) acc += o.attempts[k - 1].latency;
            sums[k - 1] += acc;
        }
    }
    for (auto& s : sums) s /= static_cast<double>(outcomes.size());
    return sums;
}

double mean_ttca(std::span<const RequestOutcome> outcomes) {
    if (outcomes.empty()) throw std::invalid_argument("no outcomes");
    double sum = 0.0;
    for (const auto& o : outcomes) sum += o.ttca;
    return sum / static_cast<double>(outcomes.size());
}

double improvement_ratio(std::span<const RequestOutcome> reference, std::span<const RequestOutcome> baseline) {
    if (reference.empty() || baseline.empty()) throw std::invalid_argument("improvement_ratio: empty outcome list");
    if (reference.size() != baseline.size()) throw std::invalid_argument("improvement_ratio: workloads differ in size");
    const double base = mean_ttca(baseline);
    if (base == 0.0) throw std::domain_error("improvement_ratio: zero baseline mean");
    return (base - mean_ttca(reference)) / base;
}

TtcaSummary summarize(std::string policy, LanguageClass language, std::uint64_t target_tokens,
                      std::span<const RequestOutcome> outcomes, std::uint32_t retry_cap) {
    TtcaSummary s;
    s.policy = std::move(policy);
    s.language = language;
    s.target_tokens = target_tokens;
    s.n = outcomes.size();
    s.mean_ttca = mean_ttca(outcomes);
    s.success_rates = success_curve(outcomes, retry_cap);
    std::uint64_t censored = 0;
    for (const auto& o : outcomes) censored += o.censored ? 1 : 0;
    s.censored_fraction = static_cast<double>(censored) / static_cast<double>(outcomes.size());
    return s;
}

void write_report(std::span<const TtcaSummary> summaries, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report: " + path.string());
    out << kReportVersion << '\n' << kReportHeader << '\n';
    for (const auto& s : summaries) {
        std::string rates;
        for (std::size_t i = 0; i < s.success_rates.size(); ++i) {
            if (i) rates.push_back(';');
            rates += real(s.success_rates[i]);
        }
        out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", s.policy, to_string(s.language), s.target_tokens, s.n,
                           real(s.mean_ttca), real(s.censored_fraction), rates);
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<TtcaSummary> read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read report: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kReportVersion) throw FormatError(path.string() + ": not a v1 report");
    if (!std::getline(in, line) || line != kReportHeader) throw FormatError(path.string() + ": bad report header");
    std::vector<TtcaSummary> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cols = split(line, '\t');
        if (cols.size() != 7) throw FormatError(path.string() + ": expected 7 columns");
        TtcaSummary s;
        s.policy = std::string(cols[0]);
        const auto lang = parse_language(cols[1]);
        if (!lang) throw FormatError(path.string() + ": bad language");
        s.language = *lang;
        s.target_tokens = parse_uint(cols[2]);
        s.n = parse_uint(cols[3]);
        s.mean_ttca = parse_real(cols[4]);
        s.censored_fraction = parse_real(cols[5]);
        if (!cols[6].empty()) {
            for (const auto r : split(cols[6], ';')) s.success_rates.push_back(parse_real(r));
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace laar
