#include <doctest.h>

#include <fstream>

#include "laar/config.hpp"
#include "laar/errors.hpp"
#include "test_support.hpp"

using namespace laar;

TEST_CASE("parse_cluster_config reads router constants and endpoints") {
    const auto cfg = parse_cluster_config(R"(# cluster
alpha = 0.5
retry_cap = 4
concurrency = 2
rng_seed = 9
epsilon_q = 0.01
policy = load-aware
endpoint.b.seconds_per_token = 0.002
endpoint.a.seconds_per_token = 0.001   # trailing comment
endpoint.a.initial_queued_tokens = 100
)",
                                          "/base");
    CHECK(cfg.alpha == 0.5);
    CHECK(cfg.retry_cap == 4);
    CHECK(cfg.concurrency == 2);
    CHECK(cfg.rng_seed == 9);
    CHECK(cfg.epsilon_q == 0.01);
    CHECK(cfg.policy == PolicyKind::LoadAware);
    REQUIRE(cfg.endpoints.size() == 2);
    CHECK(cfg.endpoints[0].profile.model_id == "b");
    CHECK(cfg.endpoints[1].profile.seconds_per_token == 0.001);
    CHECK(cfg.endpoints[1].initial_state.queued_tokens == 100);
    CHECK(cfg.endpoints[1].initial_state.model_id == "a");
}

TEST_CASE("capability paths resolve against the config directory") {
    const auto cfg = parse_cluster_config("capability_dir = models\n"
                                          "endpoint.a.seconds_per_token = 0.001\n"
                                          "endpoint.b.seconds_per_token = 0.001\n"
                                          "endpoint.b.capability = special/b.txt\n",
                                          "/etc/laar");
    CHECK(capability_path_for(cfg, cfg.endpoints[0]) == std::filesystem::path("/etc/laar/models/a.coef"));
    CHECK(capability_path_for(cfg, cfg.endpoints[1]) == std::filesystem::path("/etc/laar/special/b.txt"));
}

TEST_CASE("invalid configurations are rejected") {
    CHECK_THROWS_AS(parse_cluster_config("alpha = -1\nendpoint.a.seconds_per_token = 0.1\n"), FormatError);
    CHECK_THROWS_AS(parse_cluster_config("endpoint.a.seconds_per_token = 0\n"), FormatError);
    CHECK_THROWS_AS(parse_cluster_config("policy = fastest\nendpoint.a.seconds_per_token = 0.1\n"), FormatError);
    CHECK_THROWS_AS(parse_cluster_config("retry_cap = 0\nendpoint.a.seconds_per_token = 0.1\n"), FormatError);
    CHECK_THROWS_AS(parse_cluster_config("bogus = 1\nendpoint.a.seconds_per_token = 0.1\n"), FormatError);
    CHECK_THROWS_AS(parse_cluster_config("alpha = 0.7\n"), FormatError);
}

TEST_CASE("policy names") {
    for (const auto p : {PolicyKind::Laar, PolicyKind::LoadAware, PolicyKind::SessionAffinity, PolicyKind::RoundRobin}) {
        CHECK(parse_policy(to_string(p)) == p);
    }
    CHECK_FALSE(parse_policy("random").has_value());
}

TEST_CASE("shipped cluster file matches the default cluster") {
    const auto file = load_cluster_config(testing::data_dir() / "cluster.conf");
    const auto def = default_cluster_config();
    CHECK(file.model_ids() == def.model_ids());
    CHECK(file.model_ids().size() == 5);
    CHECK(file.alpha == 0.7);
    CHECK(file.retry_cap == 10);
    CHECK(file.concurrency == 8);
    CHECK(file.epsilon_q == 1e-3);
}

TEST_CASE("load_capability_models names the missing file") {
    const auto dir = testing::scratch_dir("config");
    std::ofstream(dir / "c.conf") << "capability_dir = m\nendpoint.x.seconds_per_token = 0.001\n";
    auto cfg = load_cluster_config(dir / "c.conf");
    try {
        load_capability_models(cfg);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("x.coef") != std::string::npos);
    }
    CHECK_THROWS_AS(load_cluster_config(dir / "nope.conf"), IoError);
}
