#include "laar/service.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include <httplib.h>

#include "laar/errors.hpp"

namespace laar {

using nlohmann::json;

// ---------------------------------------------------------------------------------------------
// EndpointTracker

EndpointTracker::EndpointTracker(std::vector<EndpointState> initial) : states_(std::move(initial)) {}

EndpointState& EndpointTracker::find(const std::string& model_id) {
    for (auto& s : states_) {
        if (s.model_id == model_id) return s;
    }
    throw std::out_of_range("unknown model '" + model_id + "'");
}

bool EndpointTracker::contains(const std::string& model_id) const {
    std::lock_guard lock(mutex_);
    return std::any_of(states_.begin(), states_.end(), [&](const EndpointState& s) { return s.model_id == model_id; });
}

std::optional<std::string> EndpointTracker::dispatch(const std::string& model_id, std::uint64_t tokens) {
    std::lock_guard lock(mutex_);
    find(model_id).queued_tokens += tokens;
    return std::nullopt;
}

std::optional<std::string> EndpointTracker::complete(const std::string& model_id, std::uint64_t tokens) {
    std::lock_guard lock(mutex_);
    auto& s = find(model_id);
    if (tokens > s.queued_tokens) {
        const auto had = s.queued_tokens;
        s.queued_tokens = 0;
        return fmt::format("completion of {} tokens at '{}' exceeds {} queued; clamped to 0", tokens, model_id, had);
    }
    s.queued_tokens -= tokens;
    return std::nullopt;
}

std::vector<EndpointState> EndpointTracker::snapshot() const {
    std::lock_guard lock(mutex_);
    return states_;
}

// ---------------------------------------------------------------------------------------------
// EppService

namespace {

std::vector<EndpointState> initial_states(const ClusterConfig& cfg) {
    std::vector<EndpointState> out;
    for (const auto& ep : cfg.endpoints) out.push_back(ep.initial_state);
    return out;
}

std::size_t count_code_points(std::string_view s) {
    std::size_t n = 0;
    for (const char c : s) {
        if ((static_cast<unsigned char>(c) & 0xC0U) != 0x80U) ++n;
    }
    return n;
}

}  // namespace

EppService::EppService(ClusterConfig cfg, std::vector<std::string> not_ready_reasons)
    : cfg_(std::move(cfg)), reasons_(std::move(not_ready_reasons)), tracker_(initial_states(cfg_)), router_(cfg_.policy) {
    if (cfg_.endpoints.empty()) reasons_.emplace_back("no endpoints configured");
}

std::unique_ptr<EppService> EppService::from_config_file(const std::filesystem::path& path) {
    ClusterConfig cfg = load_cluster_config(path);
    std::vector<std::string> reasons;
    for (auto& ep : cfg.endpoints) {
        const auto file = capability_path_for(cfg, ep);
        if (file.empty()) {
            reasons.push_back("no capability model configured for '" + ep.profile.model_id + "'");
            continue;
        }
        try {
            ep.profile.capability = load_model(file);
            ep.capability_path = file;
        } catch (const std::exception& e) {
            reasons.push_back(fmt::format("capability model for '{}' not loaded ({}): {}", ep.profile.model_id,
                                          file.string(), e.what()));
        }
    }
    return std::make_unique<EppService>(std::move(cfg), std::move(reasons));
}

SelectResponse EppService::handle_select(const SelectRequest& req) {
    const auto started = std::chrono::steady_clock::now();
    if (cfg_.endpoints.empty()) throw std::runtime_error("no candidates configured");
    if (req.request_id.empty()) throw BadRequest("request_id is required");
    if (req.text_sample.has_value() == req.features.has_value()) {
        throw BadRequest("exactly one of text_sample or features is required");
    }

    SelectResponse resp;
    resp.request_id = req.request_id;

    RoutingContext ctx;
    ctx.request_id = req.request_id;
    ctx.session_id = req.request_id;
    if (req.features) {
        ctx.features = make_features(req.features->language, req.features->estimated_tokens);
    } else {
        std::string_view text = *req.text_sample;
        std::string capped;
        if (count_code_points(text) > kMaxSampleChars) {
            capped = sample_text(text, kMaxSampleChars / 2);
            text = capped;
            resp.warnings.emplace_back("text_sample longer than 4096 characters; head and tail used");
        }
        ctx.features = extract_features(text);
        if (req.total_chars) {
            ctx.features = make_features(
                ctx.features.language,
                static_cast<std::uint64_t>(std::ceil(static_cast<double>(*req.total_chars) /
                                                     chars_per_token(ctx.features.language))));
        }
    }

    for (const auto& m : req.attempted_models) {
        if (!tracker_.contains(m)) {
            resp.warnings.push_back("ignoring unknown attempted model '" + m + "'");
        } else if (ctx.attempted(m)) {
            resp.warnings.push_back("duplicate attempted model '" + m + "'");
        } else {
            ctx.attempted_models.push_back(m);
        }
    }

    auto states = tracker_.snapshot();
    if (req.endpoint_states) {
        for (const auto& override_state : *req.endpoint_states) {
            auto it = std::find_if(states.begin(), states.end(),
                                   [&](const EndpointState& s) { return s.model_id == override_state.model_id; });
            if (it == states.end()) throw BadRequest("endpoint_states names unknown model '" + override_state.model_id + "'");
            it->queued_tokens = override_state.queued_tokens;
        }
    }

    std::vector<Candidate> candidates;
    candidates.reserve(cfg_.endpoints.size());
    for (std::size_t i = 0; i < cfg_.endpoints.size(); ++i) {
        candidates.push_back(Candidate{&cfg_.endpoints[i].profile, states[i]});
    }

    auto scored = score_laar(candidates, ctx, cfg_, &resp.evaluations);
    resp.candidates = std::move(scored.scores);
    resp.selected_model = cfg_.policy == PolicyKind::Laar ? std::move(scored.model_id)
                                                          : router_.select(candidates, ctx, cfg_);
    resp.attempted_models = ctx.attempted_models;
    resp.attempted_models.push_back(resp.selected_model);
    resp.decision_micros =
        std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - started).count();
    return resp;
}

std::optional<std::string> EppService::report_dispatch(const std::string& model_id, std::uint64_t tokens) {
    return tracker_.dispatch(model_id, tokens);
}

std::optional<std::string> EppService::report_complete(const std::string& model_id, std::uint64_t tokens) {
    return tracker_.complete(model_id, tokens);
}

HealthStatus EppService::healthcheck() const {
    HealthStatus s;
    s.candidates = cfg_.endpoints.size();
    s.reasons = reasons_;
    s.ready = reasons_.empty() && s.candidates > 0;
    return s;
}

// ---------------------------------------------------------------------------------------------
// JSON codecs

namespace {

template <typename T>
T field(const json& body, const char* name) {
    try {
        return body.at(name).get<T>();
    } catch (const json::exception&) {
        throw BadRequest(fmt::format("field '{}' missing or of the wrong type", name));
    }
}

json features_json(const RequestFeatures& f) {
    return {{"language", to_string(f.language)}, {"estimated_tokens", f.estimated_tokens}};
}

}  // namespace

SelectRequest parse_select_request(const json& body) {
    if (!body.is_object()) throw BadRequest("body must be a JSON object");
    SelectRequest req;
    req.request_id = field<std::string>(body, "request_id");
    if (body.contains("text_sample")) req.text_sample = field<std::string>(body, "text_sample");
    if (body.contains("total_chars")) req.total_chars = field<std::uint64_t>(body, "total_chars");
    if (body.contains("features")) {
        const auto& f = body.at("features");
        if (!f.is_object()) throw BadRequest("features must be an object");
        const auto lang = parse_language(field<std::string>(f, "language"));
        if (!lang) throw BadRequest("unknown language");
        req.features = make_features(*lang, field<std::uint64_t>(f, "estimated_tokens"));
    }
    if (body.contains("attempted_models")) req.attempted_models = field<std::vector<std::string>>(body, "attempted_models");
    if (body.contains("endpoint_states")) {
        const auto& arr = body.at("endpoint_states");
        if (!arr.is_array()) throw BadRequest("endpoint_states must be an array");
        std::vector<EndpointState> states;
        for (const auto& s : arr) {
            if (!s.is_object()) throw BadRequest("endpoint_states entries must be objects");
            states.push_back(EndpointState{field<std::string>(s, "model_id"), field<std::uint64_t>(s, "queued_tokens")});
        }
        req.endpoint_states = std::move(states);
    }
    return req;
}

json to_json(const SelectRequest& req) {
    json body = {{"request_id", req.request_id}, {"attempted_models", req.attempted_models}};
    if (req.text_sample) body["text_sample"] = *req.text_sample;
    if (req.total_chars) body["total_chars"] = *req.total_chars;
    if (req.features) body["features"] = features_json(*req.features);
    if (req.endpoint_states) {
        json arr = json::array();
        for (const auto& s : *req.endpoint_states) arr.push_back({{"model_id", s.model_id}, {"queued_tokens", s.queued_tokens}});
        body["endpoint_states"] = std::move(arr);
    }
    return body;
}

json to_json(const SelectResponse& resp) {
    json candidates = json::array();
    for (const auto& c : resp.candidates) {
        candidates.push_back({
            {"model_id", c.model_id},
            {"cost", c.excluded() ? json(nullptr) : json(c.cost)},
            {"excluded", c.excluded()},
            {"score", c.score},
            {"q", c.q},
            {"l", c.l},
        });
    }
    return {
        {"request_id", resp.request_id},
        {"selected_model", resp.selected_model},
        {"attempted_models", resp.attempted_models},
        {"candidates", std::move(candidates)},
        {"evaluations", {{"q", resp.evaluations.q_evals}, {"l", resp.evaluations.l_evals}}},
        {"decision_micros", resp.decision_micros},
        {"warnings", resp.warnings},
    };
}

SelectResponse parse_select_response(const json& body) {
    SelectResponse resp;
    resp.request_id = field<std::string>(body, "request_id");
    resp.selected_model = field<std::string>(body, "selected_model");
    resp.attempted_models = field<std::vector<std::string>>(body, "attempted_models");
    for (const auto& c : body.at("candidates")) {
        ScoredCandidate s;
        s.model_id = field<std::string>(c, "model_id");
        s.cost = c.at("cost").is_null() ? std::numeric_limits<double>::infinity() : field<double>(c, "cost");
        s.score = field<double>(c, "score");
        s.q = field<double>(c, "q");
        s.l = field<double>(c, "l");
        resp.candidates.push_back(std::move(s));
    }
    resp.evaluations.q_evals = field<std::uint64_t>(body.at("evaluations"), "q");
    resp.evaluations.l_evals = field<std::uint64_t>(body.at("evaluations"), "l");
    resp.decision_micros = field<double>(body, "decision_micros");
    resp.warnings = field<std::vector<std::string>>(body, "warnings");
    return resp;
}

json to_json(const HealthStatus& status) {
    return {{"ready", status.ready}, {"candidates", status.candidates}, {"reasons", status.reasons}};
}

// ---------------------------------------------------------------------------------------------
// HTTP

struct ServiceServer::Impl {
    EppService& service;
    httplib::Server server;
    int port = -1;

    explicit Impl(EppService& s) : service(s) {
        // httplib defaults to SO_REUSEPORT, which lets a second server share a busy port.
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
        });
        install_routes();
    }

    static void reply(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    void install_routes() {
        server.Post("/v1/select", [this](const httplib::Request& req, httplib::Response& res) {
            if (!service.healthcheck().ready) return reply(res, 503, {{"error", "service not ready"}});
            try {
                const auto body = json::parse(req.body);
                reply(res, 200, to_json(service.handle_select(parse_select_request(body))));
            } catch (const json::exception& e) {
                reply(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}});
            } catch (const BadRequest& e) {
                reply(res, 400, {{"error", e.what()}});
            } catch (const std::exception& e) {
                reply(res, 500, {{"error", e.what()}});
            }
        });

        server.Post("/v1/report", [this](const httplib::Request& req, httplib::Response& res) {
            try {
                const auto body = json::parse(req.body);
                const auto model = field<std::string>(body, "model_id");
                const auto tokens = field<std::uint64_t>(body, "tokens");
                const auto event = field<std::string>(body, "event");
                std::optional<std::string> warning;
                if (event == "dispatch") {
                    warning = service.report_dispatch(model, tokens);
                } else if (event == "complete") {
                    warning = service.report_complete(model, tokens);
                } else {
                    throw BadRequest("event must be 'dispatch' or 'complete'");
                }
                json warnings = json::array();
                if (warning) warnings.push_back(*warning);
                std::uint64_t queued = 0;
                for (const auto& s : service.snapshot()) {
                    if (s.model_id == model) queued = s.queued_tokens;
                }
                reply(res, 200, {{"model_id", model}, {"queued_tokens", queued}, {"warnings", warnings}});
            } catch (const json::exception& e) {
                reply(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}});
            } catch (const BadRequest& e) {
                reply(res, 400, {{"error", e.what()}});
            } catch (const std::out_of_range& e) {
                reply(res, 404, {{"error", e.what()}});
            }
        });

        server.Get("/v1/state", [this](const httplib::Request&, httplib::Response& res) {
            json arr = json::array();
            for (const auto& s : service.snapshot()) arr.push_back({{"model_id", s.model_id}, {"queued_tokens", s.queued_tokens}});
            reply(res, 200, {{"endpoints", arr}});
        });

        server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
            const auto status = service.healthcheck();
            reply(res, status.ready ? 200 : 503, to_json(status));
        });
    }
};

ServiceServer::ServiceServer(EppService& service) : impl_(std::make_unique<Impl>(service)) {}

ServiceServer::~ServiceServer() { stop(); }

bool ServiceServer::bind(const std::string& host, int port) {
    if (port == 0) {
        impl_->port = impl_->server.bind_to_any_port(host);
        return impl_->port > 0;
    }
    if (!impl_->server.bind_to_port(host, port)) return false;
    impl_->port = port;
    return true;
}

int ServiceServer::port() const { return impl_->port; }

void ServiceServer::serve() { impl_->server.listen_after_bind(); }

void ServiceServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

std::pair<std::string, int> parse_listen_address(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos || colon + 1 >= addr.size()) {
        throw std::invalid_argument("listen address must be host:port, got '" + addr + "'");
    }
    int port = 0;
    try {
        std::size_t used = 0;
        port = std::stoi(addr.substr(colon + 1), &used);
        if (used != addr.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw std::invalid_argument("bad port in listen address '" + addr + "'");
    }
    if (port < 0 || port > 65535) throw std::invalid_argument("port out of range in '" + addr + "'");
    std::string host = addr.substr(0, colon);
    if (host.empty()) host = "0.0.0.0";
    return {host, port};
}

}  // namespace laar
