#include "laar/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "laar/capability.hpp"
#include "laar/latency.hpp"

namespace laar {

namespace {

void require_candidates(std::span<const Candidate> candidates) {
    if (candidates.empty()) throw std::invalid_argument("empty candidate list");
}

std::vector<std::string> sorted_ids(std::span<const Candidate> candidates) {
    std::vector<std::string> ids;
    ids.reserve(candidates.size());
    for (const auto& c : candidates) ids.push_back(c.profile->model_id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace

bool RoutingContext::attempted(std::string_view model_id) const {
    return std::find(attempted_models.begin(), attempted_models.end(), model_id) != attempted_models.end();
}

void RoutingContext::record_attempt(const std::string& model_id) {
    if (!attempted(model_id)) attempted_models.push_back(model_id);
}

bool ScoredCandidate::excluded() const { return std::isinf(cost); }

double score_from_cost(double cost) { return std::isinf(cost) ? 0.0 : 1.0 / (cost + kScoreEpsilon); }

ScoredCandidate laar_cost(const ModelProfile& profile, const RequestFeatures& features, const EndpointState& state,
                          const RoutingContext& ctx, const ClusterConfig& cfg, bool exclude_attempted,
                          EvalCounters* counters) {
    RequestFeatures scoring = features;
    if (scoring.language == LanguageClass::Unknown) scoring.language = LanguageClass::English;

    ScoredCandidate out;
    out.model_id = profile.model_id;
    out.l = estimate_latency(profile, scoring, state, cfg.alpha);
    out.q = predict_q(profile.capability, scoring, cfg.epsilon_q);
    if (counters) {
        ++counters->l_evals;
        ++counters->q_evals;
    }
    out.cost = (exclude_attempted && ctx.attempted(profile.model_id)) ? std::numeric_limits<double>::infinity()
                                                                       : out.l / out.q;
    out.score = score_from_cost(out.cost);
    return out;
}

LaarSelection score_laar(std::span<const Candidate> candidates, const RoutingContext& ctx, const ClusterConfig& cfg,
                         EvalCounters* counters) {
    require_candidates(candidates);
    const bool any_unattempted = std::any_of(candidates.begin(), candidates.end(), [&](const Candidate& c) {
        return !ctx.attempted(c.profile->model_id);
    });

    LaarSelection sel;
    sel.scores.reserve(candidates.size());
    const ScoredCandidate* best = nullptr;
    for (const auto& c : candidates) {
        sel.scores.push_back(laar_cost(*c.profile, ctx.features, c.state, ctx, cfg, any_unattempted, counters));
    }
    for (const auto& s : sel.scores) {
        if (!best || s.score > best->score || (s.score == best->score && s.model_id < best->model_id)) best = &s;
    }
    sel.model_id = best->model_id;
    return sel;
}

std::string select_laar(std::span<const Candidate> candidates, const RoutingContext& ctx, const ClusterConfig& cfg) {
    return score_laar(candidates, ctx, cfg).model_id;
}

std::string select_load_aware(std::span<const Candidate> candidates, const RoutingContext&, const ClusterConfig&) {
    require_candidates(candidates);
    const Candidate* best = nullptr;
    for (const auto& c : candidates) {
        if (!best || c.state.queued_tokens < best->state.queued_tokens ||
            (c.state.queued_tokens == best->state.queued_tokens && c.profile->model_id < best->profile->model_id)) {
            best = &c;
        }
    }
    return best->profile->model_id;
}

std::string select_session_affinity(std::span<const Candidate> candidates, const RoutingContext& ctx,
                                    const ClusterConfig&) {
    require_candidates(candidates);
    if (ctx.session_id.empty()) throw std::invalid_argument("session-affinity requires a session id");
    const auto ids = sorted_ids(candidates);
    return ids[fnv1a64(ctx.session_id) % ids.size()];
}

std::string RoundRobinSelector::select(std::span<const Candidate> candidates) {
    require_candidates(candidates);
    const auto ids = sorted_ids(candidates);
    return ids[next_.fetch_add(1, std::memory_order_relaxed) % ids.size()];
}

std::string Router::select(std::span<const Candidate> candidates, const RoutingContext& ctx, const ClusterConfig& cfg,
                           EvalCounters* counters) {
    switch (kind_) {
        case PolicyKind::Laar: return score_laar(candidates, ctx, cfg, counters).model_id;
        case PolicyKind::LoadAware: return select_load_aware(candidates, ctx, cfg);
        case PolicyKind::SessionAffinity: return select_session_affinity(candidates, ctx, cfg);
        case PolicyKind::RoundRobin: return round_robin_.select(candidates);
    }
    throw std::logic_error("unhandled policy");
}

}  // namespace laar
