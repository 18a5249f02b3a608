#pragma once

#include "renal/shape_filter.hpp"
#include "renal/volume.hpp"

#include <vector>

namespace renal {

/// Outputs of the kidney+tumor model and the tumor model, both in full-volume
/// coordinates.
struct CasePrediction {
    ProbabilityVolume prob_kt;
    ProbabilityVolume prob_tumor;
};

/// Foreground iff p >= threshold. Throws ConfigError unless threshold is in (0, 1).
[[nodiscard]] BinaryMask binarize(const ProbabilityVolume& prob, double threshold);

/// Label 2 where tumor is set, otherwise 1 where kt is set, otherwise 0.
[[nodiscard]] LabelVolume merge_masks(const BinaryMask& kt, const BinaryMask& tumor);

/// Intermediate masks of one post-processing run, for reporting and tests.
struct PostprocessTrace {
    BinaryMask kt_binary;
    BinaryMask tumor_binary;
    BinaryMask kt_filled;
    BinaryMask tumor_filled;
    BinaryMask kt_kept;
    BinaryMask tumor_kept;
    std::vector<TumorCandidate> tumor_candidates;
};

/// binarize -> fill holes -> two largest kt components -> tumor shape and
/// overlap filter -> merge.
[[nodiscard]] LabelVolume postprocess_case(const CasePrediction& pred, const FilterConfig& config,
                                           PostprocessTrace* trace = nullptr);

/// Merge of the plain binarized predictions, i.e. the result before any cleanup.
[[nodiscard]] LabelVolume raw_prediction(const CasePrediction& pred, double threshold);

/// Re-encodes a label volume as hard 0/1 probabilities.
[[nodiscard]] CasePrediction harden(const LabelVolume& labels);

}  // namespace renal
