#pragma once

#include <span>
#include <vector>

namespace renal {

/// Weighting and numerical guards of the combined training loss
///   loss = (1 - lambda) * BCE + lambda * DICE.
struct LossConfig {
    double lambda = 0.5;
    double epsilon = 1e-6;  // soft-DICE smoothing
    double clamp = 1e-7;    // BCE probabilities are clipped to [clamp, 1 - clamp]

    /// Throws ConfigError unless 0 <= lambda <= 1, epsilon > 0, 0 < clamp < 0.5.
    void validate() const;
};

/// Sigmoid outputs and binary targets of equal, non-zero length.
struct PredictionPair {
    std::span<const double> pred;
    std::span<const double> target;

    /// Throws ValidationError on empty or mismatched arrays, predictions
    /// outside [0, 1] or targets other than 0/1.
    void validate() const;
};

struct LossResult {
    double value = 0.0;
    std::vector<double> grad;  // d value / d pred
};

/// Mean binary cross-entropy. The gradient is zero where the prediction lies
/// strictly outside [clamp, 1 - clamp].
[[nodiscard]] LossResult bce(const PredictionPair& pair, double clamp);

/// 1 - (2 sum(p t) + eps) / (sum(p) + sum(t) + eps).
[[nodiscard]] LossResult dice_loss(const PredictionPair& pair, double epsilon);

[[nodiscard]] LossResult combined_loss(const PredictionPair& pair, const LossConfig& config);

}  // namespace renal
