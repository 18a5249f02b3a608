#include "renal/pipeline.hpp"

#include "renal/errors.hpp"
#include "renal/morphology.hpp"

namespace renal {

BinaryMask binarize(const ProbabilityVolume& prob, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("binarization threshold must lie in (0, 1)");
    BinaryMask out(prob.geometry);
    for (std::size_t n = 0; n < prob.probs.size(); ++n) out.bits[n] = prob.probs[n] >= threshold ? 1 : 0;
    return out;
}

LabelVolume merge_masks(const BinaryMask& kt, const BinaryMask& tumor) {
    require_same_geometry(kt.geometry, tumor.geometry, "merge_masks");
    LabelVolume out{kt.geometry, std::vector<std::uint8_t>(kt.bits.size(), 0)};
    for (std::size_t n = 0; n < out.labels.size(); ++n) {
        out.labels[n] = tumor.bits[n] ? 2 : kt.bits[n] ? 1 : 0;
    }
    return out;
}

LabelVolume postprocess_case(const CasePrediction& pred, const FilterConfig& config, PostprocessTrace* trace) {
    config.validate();
    require_same_geometry(pred.prob_kt.geometry, pred.prob_tumor.geometry, "postprocess_case");

    PostprocessTrace local;
    PostprocessTrace& t = trace ? *trace : local;
    t.tumor_candidates.clear();

    t.kt_binary = binarize(pred.prob_kt, config.prob_threshold);
    t.tumor_binary = binarize(pred.prob_tumor, config.prob_threshold);
    t.kt_filled = config.fill_holes ? fill_holes(t.kt_binary) : t.kt_binary;
    t.tumor_filled = config.fill_holes ? fill_holes(t.tumor_binary) : t.tumor_binary;
    t.kt_kept = keep_largest_k(label_components(t.kt_filled, config.connectivity), 2);
    t.tumor_kept = filter_tumor_components(t.tumor_filled, t.kt_kept, config, &t.tumor_candidates);
    return merge_masks(t.kt_kept, t.tumor_kept);
}

LabelVolume raw_prediction(const CasePrediction& pred, double threshold) {
    require_same_geometry(pred.prob_kt.geometry, pred.prob_tumor.geometry, "raw_prediction");
    return merge_masks(binarize(pred.prob_kt, threshold), binarize(pred.prob_tumor, threshold));
}

CasePrediction harden(const LabelVolume& labels) {
    CasePrediction out{{labels.geometry, std::vector<float>(labels.labels.size())},
                       {labels.geometry, std::vector<float>(labels.labels.size())}};
    for (std::size_t n = 0; n < labels.labels.size(); ++n) {
        out.prob_kt.probs[n] = labels.labels[n] != 0 ? 1.0f : 0.0f;
        out.prob_tumor.probs[n] = labels.labels[n] == 2 ? 1.0f : 0.0f;
    }
    return out;
}

}  // namespace renal
