#include <doctest.h>

#include <random>

#include "laar/latency.hpp"
#include "test_support.hpp"

using namespace laar;

namespace {

ModelProfile profile(const std::string& id, double spt) {
    ModelProfile p;
    p.model_id = id;
    p.seconds_per_token = spt;
    return p;
}

}  // namespace

TEST_CASE("estimate_latency examples") {
    const auto m = profile("m", 0.001);
    const auto f = make_features(LanguageClass::English, 10000);
    CHECK(estimate_latency(m, f, {"m", 0}, 0.7) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(estimate_latency(m, f, {"m", 20000}, 0.7) == doctest::Approx(24.0).epsilon(1e-12));
    CHECK(estimate_latency(m, f, {"m", 20000}, 0.0) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("estimate_latency rejects a foreign state") {
    const auto m = profile("m", 0.001);
    CHECK_THROWS_WITH_AS(estimate_latency(m, make_features(LanguageClass::English, 1), {"other", 0}, 0.7),
                         "state/profile mismatch", std::invalid_argument);
}

TEST_CASE("estimate_latency is monotone and linear") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> spt(1e-5, 1e-2);
    std::uniform_int_distribution<std::uint64_t> tok(0, 200000);
    std::uniform_real_distribution<double> alpha(0.0, 2.0);
    for (int i = 0; i < 1000; ++i) {
        const auto m = profile("m", spt(rng));
        const double a = alpha(rng);
        const auto t = tok(rng);
        const auto r = tok(rng);
        const double base = estimate_latency(m, make_features(LanguageClass::English, t), {"m", r}, a);
        CHECK(estimate_latency(m, make_features(LanguageClass::English, t + 1), {"m", r}, a) >= base);
        CHECK(estimate_latency(m, make_features(LanguageClass::English, t), {"m", r + 1}, a) >= base);

        const double oracle = m.seconds_per_token * (static_cast<double>(t) + a * static_cast<double>(r));
        CHECK(base == doctest::Approx(oracle).epsilon(1e-12));

        auto m2 = m;
        m2.seconds_per_token *= 3.0;
        CHECK(estimate_latency(m2, make_features(LanguageClass::English, t), {"m", r}, a) ==
              doctest::Approx(3.0 * base).epsilon(1e-12));
    }
}

TEST_CASE("faster model ranks first under equal load") {
    const auto fast = profile("fast", 0.0001);
    const auto slow = profile("slow", 0.0003);
    const auto f = make_features(LanguageClass::Japanese, 8192);
    CHECK(estimate_latency(fast, f, {"fast", 5000}, 0.7) < estimate_latency(slow, f, {"slow", 5000}, 0.7));
}
