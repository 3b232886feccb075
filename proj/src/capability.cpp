#include "laar/capability.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "laar/errors.hpp"

namespace laar {

namespace {

// Examples collapse onto (language, bucket) cells; the gradient of the mean loss only depends
// on per-cell counts.
struct Cell {
    FeatureVector x{};
    double trials = 0.0;
    double successes = 0.0;
};

std::vector<Cell> compress(std::span<const TrainingExample> examples) {
    std::array<Cell, kNumLanguages * kNumBuckets> table{};
    for (const auto& ex : examples) {
        auto& cell = table[static_cast<std::size_t>(ex.features.language) * kNumBuckets +
                           static_cast<std::size_t>(ex.features.bucket)];
        cell.trials += 1.0;
        if (ex.success) cell.successes += 1.0;
    }
    std::vector<Cell> cells;
    for (std::size_t l = 0; l < kNumLanguages; ++l) {
        for (std::size_t b = 0; b < kNumBuckets; ++b) {
            auto& cell = table[l * kNumBuckets + b];
            if (cell.trials == 0.0) continue;
            RequestFeatures f;
            f.language = kAllLanguages[l];
            f.bucket = kAllBuckets[b];
            cell.x = encode(f);
            cells.push_back(cell);
        }
    }
    return cells;
}

double dot(const FeatureVector& a, const FeatureVector& b) {
    double z = 0.0;
    for (std::size_t i = 0; i < kFeatureDim; ++i) z += a[i] * b[i];
    return z;
}

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double penalty(const FeatureVector& w, double l2) {
    double s = 0.0;
    for (std::size_t i = 0; i < kBiasSlot; ++i) s += w[i] * w[i];
    return l2 * s;
}

double cell_loss(const FeatureVector& w, const std::vector<Cell>& cells, double total, double l2) {
    double loss = 0.0;
    for (const auto& c : cells) {
        const double z = dot(w, c.x);
        loss += c.successes * softplus(-z) + (c.trials - c.successes) * softplus(z);
    }
    return loss / total + penalty(w, l2);
}

}  // namespace

FeatureVector encode(const RequestFeatures& features) {
    FeatureVector x{};
    x[static_cast<std::size_t>(features.language)] = 1.0;
    x[kNumLanguages + static_cast<std::size_t>(features.bucket)] = 1.0;
    x[kBiasSlot] = 1.0;
    return x;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double predict_q(const CapabilityModel& model, const RequestFeatures& features, double epsilon_q) {
    return std::max(sigmoid(dot(model.weights, encode(features))), epsilon_q);
}

double training_loss(const CapabilityModel& model, std::span<const TrainingExample> examples, double l2) {
    const auto cells = compress(examples);
    return cell_loss(model.weights, cells, static_cast<double>(examples.size()), l2);
}

CapabilityModel fit(std::span<const TrainingExample> examples, const FitOptions& options) {
    if (examples.empty()) throw std::invalid_argument("no training data");
    if (options.l2 < 0.0) throw std::invalid_argument("l2 must be nonnegative");
    if (!(options.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");

    const auto cells = compress(examples);
    const double total = static_cast<double>(examples.size());
    CapabilityModel model;
    auto& w = model.weights;

    for (std::uint32_t epoch = 0; epoch < options.epochs; ++epoch) {
        if (options.loss_trace) options.loss_trace->push_back(cell_loss(w, cells, total, options.l2));

        FeatureVector grad{};
        for (const auto& c : cells) {
            const double residual = (c.trials * sigmoid(dot(w, c.x)) - c.successes) / total;
            for (std::size_t i = 0; i < kFeatureDim; ++i) grad[i] += residual * c.x[i];
        }
        for (std::size_t i = 0; i < kBiasSlot; ++i) grad[i] += 2.0 * options.l2 * w[i];

        double norm = 0.0;
        for (const double g : grad) norm = std::max(norm, std::abs(g));
        if (norm < options.gradient_tolerance) break;

        for (std::size_t i = 0; i < kFeatureDim; ++i) w[i] -= options.learning_rate * grad[i];
    }
    return model;
}

void save_model(const CapabilityModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write capability model: " + path.string());
    out << "v1\n";
    out << "# slots: lang[en,ja,zh,unknown] bucket[4K,8K,16K,32K,64K,over] bias\n";
    for (const double w : model.weights) {
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof buf, w);
        out.write(buf, res.ptr - buf);
        out.put('\n');
    }
    if (!out) throw IoError("write failed: " + path.string());
}

CapabilityModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read capability model: " + path.string());

    std::string line;
    bool header = false;
    std::vector<double> values;
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream tokens(line);
        std::string tok;
        while (tokens >> tok) {
            if (!header) {
                if (tok != "v1") throw FormatError(path.string() + ": unsupported layout version '" + tok + "'");
                header = true;
                continue;
            }
            double v = 0.0;
            const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || !std::isfinite(v)) {
                throw FormatError(path.string() + ": bad coefficient '" + tok + "'");
            }
            values.push_back(v);
        }
    }
    if (!header) throw FormatError(path.string() + ": missing layout version header");
    if (values.size() != kFeatureDim) {
        throw FormatError(path.string() + ": layout expects " + std::to_string(kFeatureDim) +
                          " coefficients, found " + std::to_string(values.size()));
    }
    CapabilityModel model;
    std::copy(values.begin(), values.end(), model.weights.begin());
    return model;
}

}  // namespace laar
