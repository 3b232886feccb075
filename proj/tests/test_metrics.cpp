#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "laar/errors.hpp"
#include "laar/metrics.hpp"
#include "test_support.hpp"

using namespace laar;

namespace {

std::vector<AttemptRecord> attempts(std::initializer_list<std::pair<double, bool>> xs) {
    std::vector<AttemptRecord> out;
    for (const auto& [latency, correct] : xs) {
        AttemptRecord a;
        a.attempt_index = static_cast<std::uint32_t>(out.size() + 1);
        a.latency = latency;
        a.correct = correct;
        out.push_back(a);
    }
    return out;
}

RequestOutcome outcome_with_ttca(double ttca) {
    RequestOutcome o;
    o.ttca = ttca;
    return o;
}

RequestOutcome outcome_from(std::vector<AttemptRecord> as, std::uint32_t cap) {
    RequestOutcome o;
    const auto t = compute_ttca(as, cap);
    o.attempts = std::move(as);
    o.ttca = t.ttca;
    o.first_correct = t.first_correct;
    o.censored = t.censored;
    return o;
}

}  // namespace

TEST_CASE("compute_ttca examples") {
    const auto a = compute_ttca(attempts({{2.0, false}, {3.0, true}, {4.0, false}}), 10);
    CHECK(a.ttca == 5.0);
    CHECK(a.first_correct == 2u);
    CHECK_FALSE(a.censored);

    const auto b = compute_ttca(attempts({{1.5, true}}), 10);
    CHECK(b.ttca == 1.5);
    CHECK(b.first_correct == 1u);

    const auto c = compute_ttca(attempts({{1.0, false}, {2.0, false}, {3.0, false}}), 3);
    CHECK(c.ttca == 6.0);
    CHECK(c.censored);
    CHECK_FALSE(c.first_correct.has_value());
}

TEST_CASE("compute_ttca input errors") {
    CHECK_THROWS_AS(compute_ttca(std::vector<AttemptRecord>{}, 10), std::invalid_argument);
    CHECK_THROWS_AS(compute_ttca(attempts({{1, false}, {1, false}, {1, true}}), 2), std::invalid_argument);
    auto gap = attempts({{1, false}, {1, true}});
    gap[1].attempt_index = 3;
    CHECK_THROWS_AS(compute_ttca(gap, 10), std::invalid_argument);
}

TEST_CASE("compute_ttca agrees with a direct oracle on random attempt lists") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> len(1, 10);
    std::uniform_real_distribution<double> lat(0.001, 50.0);
    std::bernoulli_distribution coin(0.3);
    for (int trial = 0; trial < 10000; ++trial) {
        std::vector<AttemptRecord> as;
        const int n = len(rng);
        for (int i = 0; i < n; ++i) {
            AttemptRecord a;
            a.attempt_index = static_cast<std::uint32_t>(i + 1);
            a.latency = lat(rng);
            a.correct = coin(rng);
            as.push_back(a);
        }
        // Oracle: index of first correct, then a prefix sum.
        std::size_t k = as.size();
        for (std::size_t i = 0; i < as.size(); ++i) {
            if (as[i].correct) {
                k = i + 1;
                break;
            }
        }
        double expected = 0.0;
        for (std::size_t i = 0; i < k; ++i) expected += as[i].latency;
        const bool censored = std::none_of(as.begin(), as.end(), [](const auto& a) { return a.correct; });

        const auto got = compute_ttca(as, 10);
        CHECK(got.ttca == doctest::Approx(expected).epsilon(1e-9));
        CHECK(got.censored == censored);
        if (!censored) CHECK(got.first_correct == k);
    }
}

TEST_CASE("success_curve example") {
    std::vector<RequestOutcome> os = {
        outcome_from(attempts({{1, true}}), 3),
        outcome_from(attempts({{1, false}, {1, true}}), 3),
        outcome_from(attempts({{1, false}, {1, true}}), 3),
        outcome_from(attempts({{1, false}, {1, false}, {1, false}}), 3),
    };
    const auto s = success_curve(os, 3);
    REQUIRE(s.size() == 3);
    CHECK(s[0] == 0.25);
    CHECK(s[1] == 0.75);
    CHECK(s[2] == 0.75);

    const auto t = ttca_curve(os, 3);
    CHECK(t[0] == 1.0);
    CHECK(t[1] == 1.75);
    CHECK(t[2] == 2.0);
}

TEST_CASE("improvement_ratio examples") {
    const std::vector<RequestOutcome> base = {outcome_with_ttca(100.0)};
    const std::vector<RequestOutcome> better = {outcome_with_ttca(69.0)};
    const std::vector<RequestOutcome> much_better = {outcome_with_ttca(51.0)};
    CHECK(improvement_ratio(better, base) == doctest::Approx(0.31).epsilon(1e-12));
    CHECK(improvement_ratio(base, base) == 0.0);
    CHECK(improvement_ratio(much_better, base) == doctest::Approx(0.49).epsilon(1e-12));

    const std::vector<RequestOutcome> zero = {outcome_with_ttca(0.0)};
    const std::vector<RequestOutcome> none;
    const std::vector<RequestOutcome> two = {outcome_with_ttca(1.0), outcome_with_ttca(2.0)};
    CHECK_THROWS_AS(improvement_ratio(base, zero), std::domain_error);
    CHECK_THROWS_AS(improvement_ratio(none, base), std::invalid_argument);
    CHECK_THROWS_AS(improvement_ratio(base, two), std::invalid_argument);
}

TEST_CASE("mean_ttca is invariant to outcome order") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> t(0.0, 100.0);
    std::vector<RequestOutcome> os;
    for (int i = 0; i < 64; ++i) os.push_back(outcome_with_ttca(t(rng)));
    const double m = mean_ttca(os);
    for (int k = 0; k < 20; ++k) {
        std::shuffle(os.begin(), os.end(), rng);
        CHECK(mean_ttca(os) == doctest::Approx(m).epsilon(1e-12));
    }
}

TEST_CASE("report files") {
    const auto dir = testing::scratch_dir("report");
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<TtcaSummary> rows;
    for (const auto* policy : {"laar", "load-aware", "session-affinity"}) {
        for (const auto lang : {LanguageClass::English, LanguageClass::Japanese, LanguageClass::Chinese}) {
            for (const auto len : kWorkloadLengths) {
                TtcaSummary s;
                s.policy = policy;
                s.language = lang;
                s.target_tokens = len;
                s.n = 50;
                s.mean_ttca = 100.0 * u(rng);
                s.censored_fraction = u(rng);
                double acc = 0.0;
                for (int k = 0; k < 10; ++k) {
                    acc = std::min(1.0, acc + 0.2 * u(rng));
                    s.success_rates.push_back(acc);
                }
                rows.push_back(s);
            }
        }
    }
    write_report(rows, dir / "r.tsv");

    std::ifstream in(dir / "r.tsv");
    std::string line;
    std::size_t lines = 0;
    std::getline(in, line);
    CHECK(line == "# laar-report v1 censored=included");
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 46);  // header + 45 rows

    CHECK(read_report(dir / "r.tsv") == rows);

    write_report(std::vector<TtcaSummary>{}, dir / "empty.tsv");
    CHECK(read_report(dir / "empty.tsv").empty());

    std::ofstream(dir / "bad.tsv") << "# something else\n";
    CHECK_THROWS_AS(read_report(dir / "bad.tsv"), FormatError);
}

TEST_CASE("summarize") {
    std::vector<RequestOutcome> os = {
        outcome_from(attempts({{2, true}}), 2),
        outcome_from(attempts({{1, false}, {3, false}}), 2),
    };
    const auto s = summarize("laar", LanguageClass::Japanese, 8192, os, 2);
    CHECK(s.n == 2);
    CHECK(s.mean_ttca == 3.0);
    CHECK(s.censored_fraction == 0.5);
    CHECK(s.success_rates == std::vector<double>{0.5, 0.5});
}
