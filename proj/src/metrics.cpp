#include "renal/metrics.hpp"

#include "renal/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <numeric>

namespace renal {

namespace {

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

nlohmann::ordered_json stats_json(const SummaryStats& s) {
    return {{"median", s.median}, {"mean", s.mean}, {"min", s.min}, {"max", s.max}};
}

}  // namespace

double dice(const BinaryMask& a, const BinaryMask& b) {
    require_same_geometry(a.geometry, b.geometry, "dice");
    std::size_t na = 0, nb = 0, both = 0;
    for (std::size_t n = 0; n < a.bits.size(); ++n) {
        const bool x = a.bits[n] != 0;
        const bool y = b.bits[n] != 0;
        na += x;
        nb += y;
        both += x && y;
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

CaseScore evaluate_case(const std::string& case_id, const LabelVolume& pred, const LabelVolume& gt) {
    require_same_geometry(pred.geometry, gt.geometry, "evaluate_case");
    return {case_id, dice(kidney_tumor_mask(pred), kidney_tumor_mask(gt)), dice(tumor_mask(pred), tumor_mask(gt))};
}

SummaryStats summarize(std::span<const double> values) {
    if (values.empty()) throw ValidationError("cannot aggregate an empty score list");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    SummaryStats s;
    s.count = n;
    s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
    s.min = sorted.front();
    s.max = sorted.back();
    return s;
}

ScoreSummary aggregate(std::span<const CaseScore> scores) {
    std::vector<double> kt, tumor;
    for (const auto& s : scores) {
        kt.push_back(s.dice_kt);
        tumor.push_back(s.dice_tumor);
    }
    return {summarize(kt), summarize(tumor)};
}

std::string report_csv(std::span<const ReportRow> rows) {
    std::string out = "case_id,dice_kt_pre,dice_tumor_pre,dice_kt_post,dice_tumor_post\n";
    for (const auto& r : rows) {
        out += r.case_id + "," + shortest(r.pre.dice_kt) + "," + shortest(r.pre.dice_tumor) + "," +
               shortest(r.post.dice_kt) + "," + shortest(r.post.dice_tumor) + "\n";
    }
    return out;
}

std::string report_summary_json(std::span<const ReportRow> rows) {
    std::vector<CaseScore> pre, post;
    for (const auto& r : rows) {
        pre.push_back(r.pre);
        post.push_back(r.post);
    }
    const ScoreSummary a = aggregate(pre);
    const ScoreSummary b = aggregate(post);
    const nlohmann::ordered_json doc = {
        {"cases", rows.size()},
        {"dice_kt_pre", stats_json(a.dice_kt)},
        {"dice_tumor_pre", stats_json(a.dice_tumor)},
        {"dice_kt_post", stats_json(b.dice_kt)},
        {"dice_tumor_post", stats_json(b.dice_tumor)},
    };
    return doc.dump(2) + "\n";
}

}  // namespace renal
