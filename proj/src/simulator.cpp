#include "laar/simulator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <deque>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "laar/errors.hpp"
#include "laar/metrics.hpp"

namespace laar {

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::ServiceEnd: return "service-end";
        case EventKind::ServiceStart: return "service-start";
        case EventKind::RetryDispatch: return "retry-dispatch";
        case EventKind::Arrival: return "arrival";
    }
    return "?";
}

namespace {

struct QueuedEvent {
    double time;
    EventKind kind;
    std::size_t request;  // index into the workload; unused for ServiceStart
    std::size_t endpoint;
    std::uint64_t seq;
};

}  // namespace

struct Simulator::Impl {
    struct Endpoint {
        const ModelProfile* profile;
        EndpointState state;
        std::deque<std::size_t> waiting;  // request indices, FIFO
        std::optional<std::size_t> in_service;
        bool start_pending = false;
    };

    struct Request {
        const WorkloadQuery* query;
        RequestFeatures features;
        std::uint64_t tokens;
        RoutingContext ctx;
        RequestOutcome outcome;
        bool done = false;
    };

    const ClusterConfig& cluster;
    const AccuracyProfile& profile;
    Router router;
    std::vector<Endpoint> endpoints;
    std::vector<Request> requests;
    std::size_t next_unserved = 0;
    double clock = 0.0;
    std::uint64_t seq = 0;
    std::uint64_t processed = 0;
    std::function<void(const SimEvent&, const Simulator&)> observer;

    // Earliest time first, then kind priority, then request id, then insertion order.
    struct Later {
        const Impl* impl;
        bool operator()(const QueuedEvent& a, const QueuedEvent& b) const {
            if (a.time != b.time) return a.time > b.time;
            if (a.kind != b.kind) return a.kind > b.kind;
            const auto& ida = impl->request_id_of(a);
            const auto& idb = impl->request_id_of(b);
            if (ida != idb) return ida > idb;
            return a.seq > b.seq;
        }
    };
    std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, Later> events{Later{this}};

    Impl(const ClusterConfig& c, std::span<const WorkloadQuery> queries, const AccuracyProfile& p)
        : cluster(c), profile(p), router(c.policy) {
        if (c.endpoints.empty()) throw ConsistencyError("cluster has no endpoints");
        const auto ids = c.model_ids();
        profile.require_complete(ids);
        for (const auto& ep : c.endpoints) endpoints.push_back(Endpoint{&ep.profile, ep.initial_state, {}, {}, false});

        requests.reserve(queries.size());
        for (const auto& q : queries) {
            Request r{&q, {}, 0, {}, {}, false};
            const std::string prompt = q.prompt();
            r.features = extract_features(prompt);
            r.tokens = estimate_tokens(prompt, q.language);
            r.ctx.features = r.features;
            r.ctx.request_id = q.query_id;
            r.ctx.session_id = q.query_id;
            r.outcome.request_id = q.query_id;
            r.outcome.language = q.language;
            r.outcome.target_tokens = q.target_tokens;
            (void)profile.at(c.endpoints.front().profile.model_id, q.language, bucket_of(q.target_tokens));
            requests.push_back(std::move(r));
        }
        const std::size_t streams = std::min<std::size_t>(c.concurrency, requests.size());
        for (std::size_t s = 0; s < streams; ++s) admit_next(0.0);
    }

    const std::string& request_id_of(const QueuedEvent& e) const {
        static const std::string none;
        return e.kind == EventKind::ServiceStart ? none : requests[e.request].ctx.request_id;
    }

    void push(double t, EventKind kind, std::size_t request, std::size_t endpoint) {
        events.push(QueuedEvent{t, kind, request, endpoint, seq++});
    }

    void admit_next(double t) {
        if (next_unserved < requests.size()) push(t, EventKind::Arrival, next_unserved++, 0);
    }

    std::vector<EndpointState> snapshot() const {
        std::vector<EndpointState> out;
        out.reserve(endpoints.size());
        for (const auto& ep : endpoints) out.push_back(ep.state);
        return out;
    }

    std::size_t endpoint_index(const std::string& model_id) const {
        for (std::size_t i = 0; i < endpoints.size(); ++i) {
            if (endpoints[i].profile->model_id == model_id) return i;
        }
        throw ConsistencyError("policy selected unknown model '" + model_id + "'");
    }

    SimEvent dispatch(std::size_t r) {
        auto& req = requests[r];
        std::vector<Candidate> candidates;
        candidates.reserve(endpoints.size());
        for (const auto& ep : endpoints) candidates.push_back(Candidate{ep.profile, ep.state});
        const std::size_t e = endpoint_index(router.select(candidates, req.ctx, cluster));

        AttemptRecord a;
        a.attempt_index = static_cast<std::uint32_t>(req.outcome.attempts.size() + 1);
        a.model_id = endpoints[e].profile->model_id;
        a.dispatch_time = clock;
        a.tokens = req.tokens;
        req.outcome.attempts.push_back(a);

        auto& ep = endpoints[e];
        ep.waiting.push_back(r);
        ep.state.queued_tokens += req.tokens;
        if (!ep.in_service && !ep.start_pending) {
            ep.start_pending = true;
            push(clock, EventKind::ServiceStart, r, e);
        }
        return SimEvent{clock, EventKind::Arrival, req.ctx.request_id, a.attempt_index, a.model_id};
    }

    SimEvent start_service(std::size_t e) {
        auto& ep = endpoints[e];
        ep.start_pending = false;
        if (ep.in_service || ep.waiting.empty()) return SimEvent{clock, EventKind::ServiceStart, {}, 0, ep.profile->model_id};
        const std::size_t r = ep.waiting.front();
        ep.waiting.pop_front();
        ep.in_service = r;
        auto& req = requests[r];
        auto& a = req.outcome.attempts.back();
        a.start_time = clock;
        push(clock + ep.profile->seconds_per_token * static_cast<double>(req.tokens), EventKind::ServiceEnd, r, e);
        return SimEvent{clock, EventKind::ServiceStart, req.ctx.request_id, a.attempt_index, a.model_id};
    }

    void finalize(Request& req) {
        const auto t = compute_ttca(req.outcome.attempts, cluster.retry_cap);
        req.outcome.ttca = t.ttca;
        req.outcome.first_correct = t.first_correct;
        req.outcome.censored = t.censored;
        req.done = true;
        admit_next(clock);
    }

    bool all_models_attempted(const Request& req) const {
        return std::all_of(endpoints.begin(), endpoints.end(),
                           [&](const Endpoint& ep) { return req.ctx.attempted(ep.profile->model_id); });
    }

    SimEvent end_service(std::size_t r, std::size_t e) {
        auto& ep = endpoints[e];
        auto& req = requests[r];
        ep.in_service.reset();
        ep.state.queued_tokens -= req.tokens;
        if (!ep.waiting.empty() && !ep.start_pending) {
            ep.start_pending = true;
            push(clock, EventKind::ServiceStart, ep.waiting.front(), e);
        }

        auto& a = req.outcome.attempts.back();
        a.end_time = clock;
        a.latency = a.end_time - a.dispatch_time;
        const auto response = simulate_response(a.model_id, *req.query, profile, cluster.rng_seed);
        a.correct = check_answer(*req.query, response);
        const SimEvent ev{clock, EventKind::ServiceEnd, req.ctx.request_id, a.attempt_index, a.model_id};

        req.ctx.record_attempt(a.model_id);
        if (a.correct || req.outcome.attempts.size() >= cluster.retry_cap) {
            finalize(req);
        } else if (cluster.policy == PolicyKind::Laar && all_models_attempted(req)) {
            // Deterministic decoding: every remaining attempt would repeat a known failure.
            finalize(req);
        } else {
            push(clock, EventKind::RetryDispatch, r, e);
        }
        return ev;
    }

    void check_conservation() const {
        for (const auto& ep : endpoints) {
            std::uint64_t held = 0;
            for (const auto r : ep.waiting) held += requests[r].tokens;
            if (ep.in_service) held += requests[*ep.in_service].tokens;
            if (held != ep.state.queued_tokens) {
                throw std::logic_error(fmt::format("token conservation violated at {}: queued={} held={}",
                                                   ep.profile->model_id, ep.state.queued_tokens, held));
            }
        }
    }
};

Simulator::Simulator(const ClusterConfig& cluster, std::span<const WorkloadQuery> queries,
                     const AccuracyProfile& profile)
    : impl_(std::make_unique<Impl>(cluster, queries, profile)) {}

Simulator::~Simulator() = default;

bool Simulator::step() {
    auto& im = *impl_;
    if (im.events.empty()) return false;
    const QueuedEvent e = im.events.top();
    im.events.pop();
    im.clock = e.time;

    SimEvent ev;
    switch (e.kind) {
        case EventKind::Arrival:
        case EventKind::RetryDispatch:
            ev = im.dispatch(e.request);
            ev.kind = e.kind;
            break;
        case EventKind::ServiceStart: ev = im.start_service(e.endpoint); break;
        case EventKind::ServiceEnd: ev = im.end_service(e.request, e.endpoint); break;
    }
    ++im.processed;
    im.check_conservation();
    if (im.observer) im.observer(ev, *this);
    return true;
}

void Simulator::run() {
    while (step()) {
    }
}

double Simulator::now() const { return impl_->clock; }

std::vector<EndpointState> Simulator::snapshot_states() const { return impl_->snapshot(); }

void Simulator::check_conservation() const { impl_->check_conservation(); }

std::vector<RequestOutcome> Simulator::outcomes() const {
    std::vector<RequestOutcome> out;
    for (const auto& r : impl_->requests) {
        if (r.done) out.push_back(r.outcome);
    }
    return out;
}

std::uint64_t Simulator::events_processed() const { return impl_->processed; }

void Simulator::set_observer(std::function<void(const SimEvent&, const Simulator&)> observer) {
    impl_->observer = std::move(observer);
}

std::vector<RequestOutcome> run_simulation(const ClusterConfig& cluster, std::span<const WorkloadQuery> queries,
                                           const AccuracyProfile& profile) {
    if (queries.empty()) throw std::invalid_argument("run_simulation: empty workload");
    Simulator sim(cluster, queries, profile);
    sim.run();
    return sim.outcomes();
}

// ---------------------------------------------------------------------------------------------
// Attempt log

namespace {

constexpr std::string_view kLogVersion = "# laar-attempts v1";
constexpr std::string_view kLogHeader =
    "policy\trequest_id\tlanguage\ttarget_tokens\tattempt\tmodel_id\ttokens\tdispatch\tstart\tend\tlatency\tcorrect";

std::string real(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <typename T>
T parse_field(std::string_view s, int lineno) {
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw FormatError(fmt::format("attempt log line {}: bad field '{}'", lineno, s));
    }
    return v;
}

}  // namespace

std::string format_attempt_log(std::string_view policy, std::span<const RequestOutcome> outcomes,
                               bool include_header) {
    std::string out;
    if (include_header) {
        out.append(kLogVersion).append("\n").append(kLogHeader).append("\n");
    }
    for (const auto& o : outcomes) {
        for (const auto& a : o.attempts) {
            out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", policy, o.request_id,
                               to_string(o.language), o.target_tokens, a.attempt_index, a.model_id, a.tokens,
                               real(a.dispatch_time), real(a.start_time), real(a.end_time), real(a.latency),
                               a.correct ? 1 : 0);
        }
    }
    return out;
}

void write_attempt_log(std::string_view policy, std::span<const RequestOutcome> outcomes,
                       const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write attempt log: " + path.string());
    out << format_attempt_log(policy, outcomes);
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<AttemptLogRow> read_attempt_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read attempt log: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kLogVersion) throw FormatError(path.string() + ": not a v1 attempt log");
    if (!std::getline(in, line) || line != kLogHeader) throw FormatError(path.string() + ": bad attempt log header");
    std::vector<AttemptLogRow> rows;
    int lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string_view> cols;
        std::string_view rest = line;
        for (;;) {
            const auto tab = rest.find('\t');
            cols.push_back(rest.substr(0, tab));
            if (tab == std::string_view::npos) break;
            rest = rest.substr(tab + 1);
        }
        if (cols.size() != 12) throw FormatError(fmt::format("attempt log line {}: expected 12 columns", lineno));
        AttemptLogRow row;
        row.policy = std::string(cols[0]);
        row.request_id = std::string(cols[1]);
        const auto lang = parse_language(cols[2]);
        if (!lang) throw FormatError(fmt::format("attempt log line {}: bad language", lineno));
        row.language = *lang;
        row.target_tokens = parse_field<std::uint64_t>(cols[3], lineno);
        row.attempt.attempt_index = parse_field<std::uint32_t>(cols[4], lineno);
        row.attempt.model_id = std::string(cols[5]);
        row.attempt.tokens = parse_field<std::uint64_t>(cols[6], lineno);
        row.attempt.dispatch_time = parse_field<double>(cols[7], lineno);
        row.attempt.start_time = parse_field<double>(cols[8], lineno);
        row.attempt.end_time = parse_field<double>(cols[9], lineno);
        row.attempt.latency = parse_field<double>(cols[10], lineno);
        const auto c = parse_field<int>(cols[11], lineno);
        if (c != 0 && c != 1) throw FormatError(fmt::format("attempt log line {}: correct must be 0 or 1", lineno));
        row.attempt.correct = c == 1;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<RequestOutcome> outcomes_from_log(std::span<const AttemptLogRow> rows, std::uint32_t retry_cap) {
    std::vector<RequestOutcome> out;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    for (const auto& row : rows) {
        const auto key = std::make_pair(row.policy, row.request_id);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, out.size()).first;
            RequestOutcome o;
            o.request_id = row.request_id;
            o.language = row.language;
            o.target_tokens = row.target_tokens;
            out.push_back(std::move(o));
        }
        out[it->second].attempts.push_back(row.attempt);
    }
    for (auto& o : out) {
        const auto t = compute_ttca(o.attempts, retry_cap);
        o.ttca = t.ttca;
        o.first_correct = t.first_correct;
        o.censored = t.censored;
    }
    return out;
}

}  // namespace laar
