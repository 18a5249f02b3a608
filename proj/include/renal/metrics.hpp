#pragma once

#include "renal/volume.hpp"

#include <span>
#include <string>
#include <vector>

namespace renal {

/// 2|A and B| / (|A| + |B|); 1 when both masks are empty.
[[nodiscard]] double dice(const BinaryMask& a, const BinaryMask& b);

struct CaseScore {
    std::string case_id;
    double dice_kt = 0.0;     // labels {1, 2}
    double dice_tumor = 0.0;  // label 2
};

[[nodiscard]] CaseScore evaluate_case(const std::string& case_id, const LabelVolume& pred, const LabelVolume& gt);

struct SummaryStats {
    std::size_t count = 0;
    double median = 0.0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Median averages the two middle values for even n. Throws ValidationError
/// on an empty input.
[[nodiscard]] SummaryStats summarize(std::span<const double> values);

struct ScoreSummary {
    SummaryStats dice_kt;
    SummaryStats dice_tumor;
};

[[nodiscard]] ScoreSummary aggregate(std::span<const CaseScore> scores);

/// One row of the evaluation report: scores before and after post-processing.
struct ReportRow {
    std::string case_id;
    CaseScore pre;
    CaseScore post;
};

/// CSV with header case_id,dice_kt_pre,dice_tumor_pre,dice_kt_post,dice_tumor_post.
[[nodiscard]] std::string report_csv(std::span<const ReportRow> rows);
/// {"cases": n, "<column>": {"median", "mean", "min", "max"}, ...}
[[nodiscard]] std::string report_summary_json(std::span<const ReportRow> rows);

}  // namespace renal
