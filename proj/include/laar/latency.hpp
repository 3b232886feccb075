#pragma once

#include "laar/config.hpp"
#include "laar/core.hpp"

namespace laar {

/// Expected serving latency in seconds: c(m) * (T(x) + alpha * R(m)), with c the model's
/// seconds per token, T the request's estimated tokens and R the endpoint's queued tokens.
/// Throws std::invalid_argument("state/profile mismatch") when the state belongs to another model.
double estimate_latency(const ModelProfile& profile, const RequestFeatures& features, const EndpointState& state,
                        double alpha);

}  // namespace laar
