// laar: workload generation, capability fitting, simulation, policy comparison and the
// endpoint-picker service behind one command.
//
// Exit codes: 0 success, 1 usage/validation, 2 I/O, 3 simulation/config inconsistency.

#include <fmt/format.h>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "laar/capability.hpp"
#include "laar/config.hpp"
#include "laar/errors.hpp"
#include "laar/metrics.hpp"
#include "laar/service.hpp"
#include "laar/simulator.hpp"
#include "laar/sweep.hpp"
#include "laar/workload.hpp"

namespace fs = std::filesystem;
using namespace laar;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitInconsistent = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path resolve_config(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("LAAR_CONFIG"); env && *env) return env;
    if (fs::exists("laar.conf")) return "laar.conf";
    throw UsageError("no config: pass --config, set LAAR_CONFIG, or provide ./laar.conf");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<LanguageClass> parse_languages(const std::string& s) {
    std::vector<LanguageClass> out;
    for (const auto& item : split_list(s)) {
        const auto lang = parse_language(item);
        if (!lang || *lang == LanguageClass::Unknown) throw UsageError("unknown language '" + item + "'");
        out.push_back(*lang);
    }
    if (out.empty()) throw UsageError("no languages given");
    return out;
}

std::vector<std::uint64_t> parse_lengths(const std::string& s) {
    std::vector<std::uint64_t> out;
    for (const auto& item : split_list(s)) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw UsageError("bad length '" + item + "'");
        }
    }
    if (out.empty()) throw UsageError("no lengths given");
    return out;
}

std::vector<PolicyKind> parse_policies(const std::string& s) {
    std::vector<PolicyKind> out;
    for (const auto& item : split_list(s)) {
        const auto p = parse_policy(item);
        if (!p) throw UsageError("unknown policy '" + item + "'");
        out.push_back(*p);
    }
    return out;
}

bool needs_capability(const std::vector<PolicyKind>& policies) {
    for (const auto p : policies) {
        if (p == PolicyKind::Laar) return true;
    }
    return false;
}

ClusterConfig load_cluster(const std::string& config_flag, std::uint64_t seed, const std::string& capability_dir) {
    ClusterConfig cfg = load_cluster_config(resolve_config(config_flag));
    cfg.rng_seed = seed;
    if (!capability_dir.empty()) {
        cfg.capability_dir = capability_dir;
        for (auto& ep : cfg.endpoints) ep.capability_path.clear();
    }
    return cfg;
}

std::string with_suffix(const fs::path& path, const std::string& tag) {
    const auto stem = path.parent_path() / path.stem();
    return stem.string() + "." + tag + path.extension().string();
}

void print_summaries(const std::vector<TtcaSummary>& summaries) {
    fmt::print("{:<18} {:<4} {:>7} {:>4} {:>12} {:>9} {:>9}\n", "policy", "lang", "tokens", "n", "mean_ttca_s",
               "success", "censored");
    for (const auto& s : summaries) {
        fmt::print("{:<18} {:<4} {:>7} {:>4} {:>12.3f} {:>9.3f} {:>9.3f}\n", s.policy, to_string(s.language),
                   s.target_tokens, s.n, s.mean_ttca, s.success_rates.back(), s.censored_fraction);
    }
}

// ---------------------------------------------------------------------------------------------

struct GenArgs {
    std::uint32_t n = 100;
    std::string languages = "en,ja,zh";
    std::string lengths = "4096,8192,16384,32768,65536";
    std::uint64_t seed = 0;
    std::string out;
    bool split = false;
};

int cmd_gen(const GenArgs& a) {
    const auto langs = parse_languages(a.languages);
    const auto lengths = parse_lengths(a.lengths);
    const auto queries = generate_workload(a.n, langs, lengths, a.seed);

    auto report = [](const std::string& path, std::span<const WorkloadQuery> qs) {
        std::map<std::pair<LanguageClass, std::uint64_t>, int> counts;
        for (const auto& q : qs) ++counts[{q.language, q.target_tokens}];
        std::string cells;
        for (const auto& [cell, n] : counts) cells += fmt::format(" {}/{}={}", to_string(cell.first), cell.second, n);
        fmt::print("wrote {} queries to {}:{}\n", qs.size(), path, cells);
    };

    if (a.split) {
        const auto [train, eval] = split_by_parity(queries);
        const auto train_path = with_suffix(a.out, "train");
        const auto eval_path = with_suffix(a.out, "eval");
        write_workload(train, train_path);
        write_workload(eval, eval_path);
        report(train_path, train);
        report(eval_path, eval);
    } else {
        write_workload(queries, a.out);
        report(a.out, queries);
    }
    return 0;
}

struct FitArgs {
    std::string config;
    std::string attempt_log;
    std::string workload;
    std::string profile;
    std::string out_dir;
    std::uint64_t seed = 0;
    double l2 = 1e-4;
    double learning_rate = 0.5;
    std::uint32_t epochs = 5000;
};

int cmd_fit(const FitArgs& a) {
    if (a.attempt_log.empty() == a.workload.empty()) {
        throw UsageError("fit needs exactly one of --attempt-log or --workload");
    }
    const ClusterConfig cfg = load_cluster(a.config, a.seed, {});
    std::map<std::string, std::vector<TrainingExample>> data;
    for (const auto& id : cfg.model_ids()) data[id];

    if (!a.attempt_log.empty()) {
        for (const auto& row : read_attempt_log(a.attempt_log)) {
            auto it = data.find(row.attempt.model_id);
            if (it == data.end()) throw ConsistencyError("attempt log names unknown model '" + row.attempt.model_id + "'");
            it->second.push_back(TrainingExample{make_features(row.language, row.attempt.tokens), row.attempt.correct});
        }
    } else {
        if (a.profile.empty()) throw UsageError("--workload requires --profile");
        const auto queries = read_workload(a.workload);
        const auto profile = load_accuracy_profile(a.profile);
        const auto ids = cfg.model_ids();
        profile.require_complete(ids);
        for (const auto& q : queries) {
            const auto features = extract_features(q.prompt());
            for (const auto& id : ids) {
                const bool ok = check_answer(q, simulate_response(id, q, profile, cfg.rng_seed));
                data[id].push_back(TrainingExample{features, ok});
            }
        }
    }

    fs::create_directories(a.out_dir);
    FitOptions opts;
    opts.l2 = a.l2;
    opts.learning_rate = a.learning_rate;
    opts.epochs = a.epochs;
    opts.seed = a.seed;
    for (const auto& id : cfg.model_ids()) {
        const auto& examples = data[id];
        if (examples.empty()) throw ConsistencyError("no training data for '" + id + "'");
        const auto model = fit(examples, opts);
        const auto path = fs::path(a.out_dir) / (id + ".coef");
        save_model(model, path);
        std::size_t wins = 0;
        for (const auto& ex : examples) wins += ex.success ? 1 : 0;
        fmt::print("fitted {} on {} examples ({} successes) -> {}\n", id, examples.size(), wins, path.string());
    }
    return 0;
}

struct SimArgs {
    std::string config;
    std::string workload;
    std::string profile;
    std::string capability_dir;
    std::string policy;
    std::string policies = "laar,load-aware,session-affinity";
    std::uint64_t seed = 0;
    std::string out_log;
    std::string out_report;
    std::string out;
    std::string log_dir;
    bool serial = false;
};

struct SweepInputs {
    ClusterConfig cfg;
    std::vector<WorkloadQuery> queries;
    AccuracyProfile profile;
};

SweepInputs load_sweep_inputs(const SimArgs& a, const std::vector<PolicyKind>& policies) {
    SweepInputs in{load_cluster(a.config, a.seed, a.capability_dir), read_workload(a.workload),
                   load_accuracy_profile(a.profile)};
    if (in.queries.empty()) throw ConsistencyError("workload is empty");
    const auto ids = in.cfg.model_ids();
    in.profile.require_complete(ids);
    if (needs_capability(policies)) load_capability_models(in.cfg);
    return in;
}

int cmd_simulate(const SimArgs& a) {
    const auto policy = parse_policy(a.policy);
    if (!policy) throw UsageError("unknown policy '" + a.policy + "'");
    const std::vector<PolicyKind> policies{*policy};
    const auto in = load_sweep_inputs(a, policies);

    const auto results = run_sweep(in.cfg, in.queries, in.profile, policies,
                                   a.serial ? Execution::Serial : Execution::Parallel);
    const auto summaries = summarize_sweep(results, in.cfg.retry_cap);
    if (!a.out_log.empty()) {
        std::ofstream log(a.out_log, std::ios::binary);
        if (!log) throw IoError("cannot write attempt log: " + a.out_log);
        bool header = true;
        for (const auto& r : results) {
            log << format_attempt_log(to_string(r.policy), r.outcomes, header);
            header = false;
        }
    }
    if (!a.out_report.empty()) write_report(summaries, a.out_report);
    print_summaries(summaries);
    return 0;
}

int cmd_compare(const SimArgs& a) {
    const auto policies = parse_policies(a.policies);
    if (policies.size() < 2) throw UsageError("compare needs at least two policies");
    const auto in = load_sweep_inputs(a, policies);

    const auto results = run_sweep(in.cfg, in.queries, in.profile, policies,
                                   a.serial ? Execution::Serial : Execution::Parallel);
    const auto rows = compare_policies(results, policies, in.cfg.retry_cap);
    const auto table = format_comparison(rows, policies);

    if (!a.out.empty()) {
        std::ofstream out(a.out);
        if (!out) throw IoError("cannot write comparison: " + a.out);
        out << table;
    }
    if (!a.out_report.empty()) write_report(summarize_sweep(results, in.cfg.retry_cap), a.out_report);
    if (!a.log_dir.empty()) {
        fs::create_directories(a.log_dir);
        for (std::size_t p = 0; p < policies.size(); ++p) {
            const auto path = fs::path(a.log_dir) / fmt::format("{}-{}.tsv", p, to_string(policies[p]));
            std::ofstream log(path, std::ios::binary);
            if (!log) throw IoError("cannot write attempt log: " + path.string());
            for (std::size_t c = 0; c < rows.size(); ++c) {
                const auto& r = results[p * rows.size() + c];
                log << format_attempt_log(to_string(r.policy), r.outcomes, c == 0);
            }
        }
    }
    std::cout << table;
    return 0;
}

struct ServeArgs {
    std::string config;
    std::string listen;
};

ServiceServer* g_server = nullptr;

extern "C" void handle_signal(int) {
    if (g_server) g_server->stop();
}

int cmd_serve(const ServeArgs& a) {
    auto service = EppService::from_config_file(resolve_config(a.config));
    const auto health = service->healthcheck();
    if (!health.ready) {
        for (const auto& r : health.reasons) fmt::print(stderr, "laar serve: {}\n", r);
        throw ConsistencyError("service not ready");
    }
    std::string listen = a.listen;
    if (listen.empty()) {
        const char* env = std::getenv("LAAR_LISTEN_ADDR");
        listen = env && *env ? env : "127.0.0.1:8080";
    }
    const auto [host, port] = parse_listen_address(listen);
    ServiceServer server(*service);
    if (!server.bind(host, port)) throw IoError(fmt::format("cannot bind {}:{}", host, port));
    g_server = &server;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    fmt::print("laar serve: ready on {}:{} with {} candidates\n", host, server.port(), health.candidates);
    std::fflush(stdout);
    server.serve();
    g_server = nullptr;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Accuracy-aware routing: workloads, capability fitting, simulation and the endpoint picker"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a UUID key-value lookup workload");
    gen_cmd->add_option("--n", gen.n, "Base queries (each expands to every language x length)")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--languages", gen.languages, "Comma-separated: en,ja,zh");
    gen_cmd->add_option("--lengths", gen.lengths, "Comma-separated target token counts");
    gen_cmd->add_option("--seed", gen.seed, "Generator seed")->required();
    gen_cmd->add_option("--out", gen.out, "Output workload file (JSON lines)")->required();
    gen_cmd->add_flag("--split", gen.split, "Write even/odd base queries to <out>.train / <out>.eval");

    FitArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "Fit one capability model per configured endpoint");
    fit_cmd->add_option("--config", fit_args.config, "Cluster config (else $LAAR_CONFIG, else ./laar.conf)");
    fit_cmd->add_option("--attempt-log", fit_args.attempt_log, "Train from a simulator attempt log");
    fit_cmd->add_option("--workload", fit_args.workload, "Train from a workload split scored against --profile");
    fit_cmd->add_option("--profile", fit_args.profile, "Accuracy profile (with --workload)");
    fit_cmd->add_option("--out-dir", fit_args.out_dir, "Directory for <model>.coef files")->required();
    fit_cmd->add_option("--seed", fit_args.seed, "Response seed (overrides rng_seed)")->required();
    fit_cmd->add_option("--l2", fit_args.l2, "L2 penalty")->check(CLI::NonNegativeNumber);
    fit_cmd->add_option("--learning-rate", fit_args.learning_rate, "Gradient step")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--epochs", fit_args.epochs, "Maximum iterations");

    SimArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Simulate one policy over every (language, length) cell");
    SimArgs cmp;
    auto* cmp_cmd = app.add_subcommand("compare", "Simulate several policies and report TTCA improvement ratios");
    for (auto [cmd, args] : {std::pair{sim_cmd, &sim}, std::pair{cmp_cmd, &cmp}}) {
        cmd->add_option("--config", args->config, "Cluster config (else $LAAR_CONFIG, else ./laar.conf)");
        cmd->add_option("--workload", args->workload, "Workload file")->required();
        cmd->add_option("--profile", args->profile, "Accuracy profile")->required();
        cmd->add_option("--capability-dir", args->capability_dir, "Directory of <model>.coef files");
        cmd->add_option("--seed", args->seed, "Simulation seed (overrides rng_seed)")->required();
        cmd->add_option("--report", args->out_report, "Write TTCA summary report");
        cmd->add_flag("--serial", args->serial, "Run jobs on one thread (reference path)");
    }
    sim_cmd->add_option("--policy", sim.policy, "laar | load-aware | session-affinity | round-robin")->required();
    sim_cmd->add_option("--log", sim.out_log, "Write attempt log");
    cmp_cmd->add_option("--policies", cmp.policies, "Comma-separated; the first is the reference");
    cmp_cmd->add_option("--out", cmp.out, "Write comparison table");
    cmp_cmd->add_option("--log-dir", cmp.log_dir, "Write one attempt log per policy");

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "Run the endpoint-picker HTTP service");
    serve_cmd->add_option("--config", serve.config, "Cluster config (else $LAAR_CONFIG, else ./laar.conf)");
    serve_cmd->add_option("--listen", serve.listen, "host:port (else $LAAR_LISTEN_ADDR, else 127.0.0.1:8080)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*gen_cmd) return cmd_gen(gen);
        if (*fit_cmd) return cmd_fit(fit_args);
        if (*sim_cmd) return cmd_simulate(sim);
        if (*cmp_cmd) return cmd_compare(cmp);
        if (*serve_cmd) return cmd_serve(serve);
    } catch (const UsageError& e) {
        fmt::print(stderr, "laar: {}\n", e.what());
        return kExitUsage;
    } catch (const IoError& e) {
        fmt::print(stderr, "laar: {}\n", e.what());
        return kExitIo;
    } catch (const FormatError& e) {
        fmt::print(stderr, "laar: {}\n", e.what());
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        fmt::print(stderr, "laar: {}\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        fmt::print(stderr, "laar: {}\n", e.what());
        return kExitInconsistent;
    }
    return kExitUsage;
}
