#include "renal/losses.hpp"

#include "renal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace renal {

void LossConfig::validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (!(clamp > 0.0 && clamp < 0.5)) throw ConfigError("clamp must lie in (0, 0.5)");
}

void PredictionPair::validate() const {
    if (pred.empty()) throw ValidationError("prediction array is empty");
    if (pred.size() != target.size()) {
        throw ValidationError("prediction and target lengths differ (" + std::to_string(pred.size()) + " vs " +
                              std::to_string(target.size()) + ")");
    }
    for (std::size_t n = 0; n < pred.size(); ++n) {
        if (!(pred[n] >= 0.0 && pred[n] <= 1.0)) {
            throw ValidationError("prediction " + std::to_string(n) + " outside [0, 1]");
        }
        if (target[n] != 0.0 && target[n] != 1.0) {
            throw ValidationError("target " + std::to_string(n) + " is not 0 or 1");
        }
    }
}

LossResult bce(const PredictionPair& pair, double clamp) {
    pair.validate();
    const std::size_t n = pair.pred.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    LossResult out{0.0, std::vector<double>(n, 0.0)};
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = pair.pred[i];
        const double t = pair.target[i];
        const double q = std::clamp(p, clamp, 1.0 - clamp);
        sum += t * std::log(q) + (1.0 - t) * std::log1p(-q);
        if (p >= clamp && p <= 1.0 - clamp) {
            out.grad[i] = -inv_n * (t / q - (1.0 - t) / (1.0 - q));
        }
    }
    out.value = -sum * inv_n;
    return out;
}

LossResult dice_loss(const PredictionPair& pair, double epsilon) {
    pair.validate();
    const std::size_t n = pair.pred.size();
    double intersection = 0.0;
    double sum_pred = 0.0;
    double sum_target = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        intersection += pair.pred[i] * pair.target[i];
        sum_pred += pair.pred[i];
        sum_target += pair.target[i];
    }
    const double num = 2.0 * intersection + epsilon;
    const double den = sum_pred + sum_target + epsilon;

    LossResult out{1.0 - num / den, std::vector<double>(n)};
    // d/dp_i of -num/den = -(2 t_i den - num) / den^2
    const double inv_den2 = 1.0 / (den * den);
    for (std::size_t i = 0; i < n; ++i) {
        out.grad[i] = -(2.0 * pair.target[i] * den - num) * inv_den2;
    }
    return out;
}

LossResult combined_loss(const PredictionPair& pair, const LossConfig& config) {
    config.validate();
    const LossResult b = bce(pair, config.clamp);
    const LossResult d = dice_loss(pair, config.epsilon);
    const double wb = 1.0 - config.lambda;
    const double wd = config.lambda;
    LossResult out{wb * b.value + wd * d.value, std::vector<double>(b.grad.size())};
    for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] = wb * b.grad[i] + wd * d.grad[i];
    return out;
}

}  // namespace renal
