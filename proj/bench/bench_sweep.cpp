// Serial reference vs OpenMP kernels. Set OMP_NUM_THREADS to vary the parallel side.
#include <benchmark/benchmark.h>

#include <filesystem>

#include "laar/sweep.hpp"

using namespace laar;

namespace {

constexpr LanguageClass kLangs[] = {LanguageClass::English, LanguageClass::Japanese, LanguageClass::Chinese};
constexpr std::uint64_t kLengths[] = {4096, 8192, 16384};
constexpr PolicyKind kPolicies[] = {PolicyKind::Laar, PolicyKind::LoadAware, PolicyKind::SessionAffinity};

struct Fixture {
    ClusterConfig cluster = default_cluster_config();
    AccuracyProfile profile = load_accuracy_profile(std::filesystem::path(LAAR_DATA_DIR) / "accuracy_profile.csv");
    std::vector<WorkloadQuery> queries = generate_workload(20, kLangs, kLengths, 7);
    std::vector<SweepResult> results;
    std::vector<std::vector<AttemptRecord>> attempt_lists;

    Fixture() {
        cluster.rng_seed = 42;
        for (auto& ep : cluster.endpoints) ep.profile.capability.weights[kBiasSlot] = 0.5;
        results = run_sweep(cluster, queries, profile, kPolicies, Execution::Serial);
        for (int rep = 0; rep < 200; ++rep) {
            for (const auto& r : results) {
                for (const auto& o : r.outcomes) attempt_lists.push_back(o.attempts);
            }
        }
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

Execution mode_of(const benchmark::State& state) {
    return state.range(0) == 0 ? Execution::Serial : Execution::Parallel;
}

void BM_RunSweep(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) {
        auto r = run_sweep(f.cluster, f.queries, f.profile, kPolicies, mode_of(state));
        benchmark::DoNotOptimize(r);
    }
}

void BM_SummarizeSweep(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) {
        auto s = summarize_sweep(f.results, f.cluster.retry_cap, mode_of(state));
        benchmark::DoNotOptimize(s);
    }
}

void BM_TtcaBatch(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) {
        auto t = compute_ttca_batch(f.attempt_lists, f.cluster.retry_cap, mode_of(state));
        benchmark::DoNotOptimize(t);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.attempt_lists.size()));
}

}  // namespace

// Argument 0 runs the serial reference, 1 the parallel kernel.
BENCHMARK(BM_RunSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SummarizeSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_TtcaBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
