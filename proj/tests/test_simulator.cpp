#include <doctest.h>

#include <fstream>
#include <set>

#include "laar/errors.hpp"
#include "laar/metrics.hpp"
#include "laar/simulator.hpp"
#include "test_support.hpp"

using namespace laar;

namespace {

ClusterConfig five_model_cluster(PolicyKind policy) {
    auto cfg = default_cluster_config();
    cfg.policy = policy;
    cfg.rng_seed = 42;
    for (auto& ep : cfg.endpoints) ep.profile.capability = testing::constant_capability(0.5);
    return cfg;
}

std::vector<WorkloadQuery> mixed_queries(std::uint32_t n, std::uint64_t seed = 3) {
    const LanguageClass langs[] = {LanguageClass::English, LanguageClass::Japanese, LanguageClass::Chinese};
    const std::uint64_t lengths[] = {4096, 8192};
    return generate_workload(n, langs, lengths, seed);
}

AccuracyProfile shipped_profile() { return load_accuracy_profile(testing::data_dir() / "accuracy_profile.csv"); }

}  // namespace

TEST_CASE("single always-correct endpoint answers in one service time") {
    const auto cfg = testing::single_endpoint_cluster(0.001, 10);
    const auto qs = testing::english_queries(1, 4096);
    const auto out = run_simulation(cfg, qs, testing::flat_profile({"solo"}, 1.0));
    REQUIRE(out.size() == 1);
    CHECK(out[0].attempts.size() == 1);
    CHECK(out[0].first_correct == 1u);
    CHECK_FALSE(out[0].censored);
    CHECK(out[0].ttca == doctest::Approx(4.096).epsilon(1e-12));
}

TEST_CASE("an always-wrong endpoint retries until the cap and is censored") {
    const auto cfg = testing::single_endpoint_cluster(0.001, 3, PolicyKind::LoadAware);
    const auto qs = testing::english_queries(1, 4096);
    const auto out = run_simulation(cfg, qs, testing::flat_profile({"solo"}, 0.0));
    REQUIRE(out.size() == 1);
    CHECK(out[0].attempts.size() == 3);
    CHECK(out[0].censored);
    CHECK_FALSE(out[0].first_correct.has_value());
    CHECK(out[0].ttca == doctest::Approx(3 * 4.096).epsilon(1e-12));
}

TEST_CASE("LAAR stops once every model has failed") {
    const auto cfg = testing::single_endpoint_cluster(0.001, 10, PolicyKind::Laar);
    const auto qs = testing::english_queries(1, 4096);
    const auto out = run_simulation(cfg, qs, testing::flat_profile({"solo"}, 0.0));
    REQUIRE(out.size() == 1);
    CHECK(out[0].attempts.size() == 1);
    CHECK(out[0].censored);
}

TEST_CASE("FIFO queueing adds the earlier request's service time") {
    auto cfg = testing::single_endpoint_cluster(0.001, 10);
    cfg.concurrency = 2;
    const auto qs = testing::english_queries(2, 4096);
    const auto out = run_simulation(cfg, qs, testing::flat_profile({"solo"}, 1.0));
    REQUIRE(out.size() == 2);
    CHECK(out[0].ttca == doctest::Approx(4.096).epsilon(1e-12));
    CHECK(out[1].ttca == doctest::Approx(8.192).epsilon(1e-12));
    CHECK(out[1].attempts[0].start_time == doctest::Approx(4.096).epsilon(1e-12));
}

TEST_CASE("queued tokens rise and fall with service") {
    auto cfg = testing::single_endpoint_cluster(0.001, 10);
    cfg.concurrency = 1;
    const auto qs = testing::english_queries(1, 4096);
    const auto profile = testing::flat_profile({"solo"}, 1.0);
    Simulator sim(cfg, qs, profile);
    CHECK(sim.snapshot_states().at(0).queued_tokens == 0);
    std::vector<std::uint64_t> seen;
    sim.set_observer([&](const SimEvent&, const Simulator& s) { seen.push_back(s.snapshot_states().at(0).queued_tokens); });
    sim.run();
    CHECK(seen.front() == 4096);
    CHECK(seen.back() == 0);
    CHECK(sim.snapshot_states().at(0).queued_tokens == 0);
    CHECK(sim.now() == doctest::Approx(4.096));
}

TEST_CASE("token conservation holds after every event") {
    for (const auto policy : {PolicyKind::Laar, PolicyKind::LoadAware, PolicyKind::SessionAffinity, PolicyKind::RoundRobin}) {
        const auto cfg = five_model_cluster(policy);
        const auto qs = mixed_queries(4);
        const auto profile = shipped_profile();
        Simulator sim(cfg, qs, profile);
        double last = 0.0;
        std::uint64_t checks = 0;
        sim.set_observer([&](const SimEvent& ev, const Simulator& s) {
            s.check_conservation();
            CHECK(ev.time >= last);
            last = ev.time;
            ++checks;
        });
        sim.run();
        CHECK(checks == sim.events_processed());
        CHECK(sim.outcomes().size() == qs.size());
        for (const auto& st : sim.snapshot_states()) CHECK(st.queued_tokens == 0);
    }
}

TEST_CASE("identical inputs produce byte-identical attempt logs") {
    const auto profile = shipped_profile();
    const auto qs = mixed_queries(4);
    for (const auto policy : {PolicyKind::Laar, PolicyKind::LoadAware, PolicyKind::SessionAffinity}) {
        const auto cfg = five_model_cluster(policy);
        const auto a = run_simulation(cfg, qs, profile);
        const auto b = run_simulation(cfg, qs, profile);
        CHECK(format_attempt_log(to_string(policy), a) == format_attempt_log(to_string(policy), b));
    }
}

TEST_CASE("LAAR never repeats a model and uses at most |M| attempts") {
    const auto cfg = five_model_cluster(PolicyKind::Laar);
    const auto qs = mixed_queries(6);
    for (const auto& o : run_simulation(cfg, qs, shipped_profile())) {
        CHECK(o.attempts.size() <= 5);
        std::set<std::string> distinct;
        for (const auto& a : o.attempts) distinct.insert(a.model_id);
        CHECK(distinct.size() == o.attempts.size());
    }
}

TEST_CASE("session affinity never recovers from a first failure") {
    const auto cfg = five_model_cluster(PolicyKind::SessionAffinity);
    const auto qs = mixed_queries(6);
    for (const auto& o : run_simulation(cfg, qs, shipped_profile())) {
        std::set<std::string> distinct;
        for (const auto& a : o.attempts) distinct.insert(a.model_id);
        CHECK(distinct.size() == 1);
        if (!o.attempts.front().correct) {
            CHECK(o.censored);
            CHECK(o.attempts.size() == cfg.retry_cap);
        }
    }
}

TEST_CASE("per-retry curves are monotone") {
    const auto profile = shipped_profile();
    const auto qs = mixed_queries(6);
    for (const auto policy : {PolicyKind::Laar, PolicyKind::LoadAware, PolicyKind::SessionAffinity, PolicyKind::RoundRobin}) {
        const auto out = run_simulation(five_model_cluster(policy), qs, profile);
        const auto s = success_curve(out, 10);
        const auto t = ttca_curve(out, 10);
        for (std::size_t k = 1; k < s.size(); ++k) {
            CHECK(s[k] >= s[k - 1]);
            CHECK(t[k] >= t[k - 1]);
        }
    }
}

TEST_CASE("attempt log round trip") {
    const auto dir = testing::scratch_dir("simlog");
    const auto cfg = five_model_cluster(PolicyKind::LoadAware);
    const auto qs = mixed_queries(3);
    const auto out = run_simulation(cfg, qs, shipped_profile());
    write_attempt_log("load-aware", out, dir / "log.tsv");

    std::ifstream in(dir / "log.tsv");
    std::string first;
    std::getline(in, first);
    CHECK(first == "# laar-attempts v1");

    const auto rows = read_attempt_log(dir / "log.tsv");
    std::size_t total = 0;
    for (const auto& o : out) total += o.attempts.size();
    CHECK(rows.size() == total);
    CHECK(outcomes_from_log(rows, cfg.retry_cap) == out);
}

TEST_CASE("simulation input errors") {
    const auto cfg = five_model_cluster(PolicyKind::Laar);
    const std::vector<WorkloadQuery> none;
    CHECK_THROWS_AS(run_simulation(cfg, none, shipped_profile()), std::invalid_argument);
    const auto qs = mixed_queries(1);
    CHECK_THROWS_AS(run_simulation(cfg, qs, testing::flat_profile({"granite-3.1-2b"}, 0.5)), ConsistencyError);
}
