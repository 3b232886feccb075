#pragma once

// Per-model success-probability estimate: logistic regression over one-hot language and
// length-bucket features.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "laar/core.hpp"

namespace laar {

/// [language one-hot (4) | bucket one-hot (6) | bias]
inline constexpr std::size_t kFeatureDim = kNumLanguages + kNumBuckets + 1;
inline constexpr std::size_t kBiasSlot = kFeatureDim - 1;

using FeatureVector = std::array<double, kFeatureDim>;

struct CapabilityModel {
    FeatureVector weights{};

    bool operator==(const CapabilityModel&) const = default;
};

struct TrainingExample {
    RequestFeatures features;
    bool success = false;
};

FeatureVector encode(const RequestFeatures& features);

double sigmoid(double z);

/// max(sigmoid(w . x), epsilon_q)
double predict_q(const CapabilityModel& model, const RequestFeatures& features, double epsilon_q);

struct FitOptions {
    double l2 = 1e-4;
    double learning_rate = 0.5;
    std::uint32_t epochs = 5000;
    // Accepted for interface stability; full-batch descent from zero weights draws no randomness.
    std::uint64_t seed = 0;
    double gradient_tolerance = 1e-8;
    /// When set, receives the regularized training loss before every update.
    std::vector<double>* loss_trace = nullptr;
};

/// Full-batch gradient descent on mean logistic loss + l2 * |w|^2 (bias unpenalized).
/// Throws std::invalid_argument("no training data") on an empty set.
CapabilityModel fit(std::span<const TrainingExample> examples, const FitOptions& options = {});

/// Regularized objective that `fit` minimizes.
double training_loss(const CapabilityModel& model, std::span<const TrainingExample> examples, double l2);

/// Plain-text coefficient file: first line "v1", then kFeatureDim reals, one per line, in
/// encode() slot order. '#' starts a comment. Round trip is bit-exact.
void save_model(const CapabilityModel& model, const std::filesystem::path& path);
CapabilityModel load_model(const std::filesystem::path& path);

}  // namespace laar
