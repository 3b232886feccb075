#include "laar/latency.hpp"

#include <stdexcept>

namespace laar {

double estimate_latency(const ModelProfile& profile, const RequestFeatures& features, const EndpointState& state,
                        double alpha) {
    if (state.model_id != profile.model_id) throw std::invalid_argument("state/profile mismatch");
    if (alpha < 0.0) throw std::invalid_argument("alpha must be nonnegative");
    return profile.seconds_per_token *
           (static_cast<double>(features.estimated_tokens) + alpha * static_cast<double>(state.queued_tokens));
}

}  // namespace laar
