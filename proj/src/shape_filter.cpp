#include "renal/shape_filter.hpp"

#include "renal/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace renal {

namespace {

constexpr int kMaxSweeps = 64;
// A second eigenvalue at or below this fraction of the first counts as a line.
constexpr double kCollinearTolerance = 1e-12;

double off_diagonal_norm(const SymmetricMatrix3& a) {
    return std::sqrt(2.0 * (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2]));
}

}  // namespace

std::array<double, 3> jacobi_eigenvalues(const SymmetricMatrix3& m) {
    SymmetricMatrix3 a = m;
    const double trace = std::abs(a[0][0] + a[1][1] + a[2][2]);
    const double tolerance = 1e-12 * trace;

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        const double off = off_diagonal_norm(a);
        if (off == 0.0 || off < tolerance) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                if (a[p][q] == 0.0) continue;
                // Rotation angle chosen to annihilate a[p][q] (Golub & Van Loan, sym.schur2).
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                const double app = a[p][p];
                const double aqq = a[q][q];
                const double apq = a[p][q];
                a[p][p] = app - t * apq;
                a[q][q] = aqq + t * apq;
                a[p][q] = a[q][p] = 0.0;
                const int r = 3 - p - q;
                const double arp = a[r][p];
                const double arq = a[r][q];
                a[r][p] = a[p][r] = c * arp - s * arq;
                a[r][q] = a[q][r] = s * arp + c * arq;
            }
        }
    }

    std::array<double, 3> ev{a[0][0], a[1][1], a[2][2]};
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

ShapeMeasurement covariance_eigenvalues(std::span<const std::size_t> voxels, const VolumeGeometry& geometry,
                                        std::size_t min_voxels, CoordinateFrame frame) {
    ShapeMeasurement out;
    if (voxels.empty() || voxels.size() < min_voxels) {
        out.status = ShapeStatus::degenerate;
        return out;
    }

    const std::array<double, 3> scale =
        frame == CoordinateFrame::physical ? geometry.spacing : std::array<double, 3>{1.0, 1.0, 1.0};
    auto coords = [&](std::size_t idx) {
        const VoxelIndex v = geometry.index(idx);
        return std::array<double, 3>{static_cast<double>(v.i) * scale[0], static_cast<double>(v.j) * scale[1],
                                     static_cast<double>(v.k) * scale[2]};
    };

    const auto n = static_cast<double>(voxels.size());
    std::array<double, 3> mean{};
    for (const auto idx : voxels) {
        const auto p = coords(idx);
        for (int a = 0; a < 3; ++a) mean[a] += p[a];
    }
    for (auto& m : mean) m /= n;

    SymmetricMatrix3 cov{};
    for (const auto idx : voxels) {
        const auto p = coords(idx);
        const std::array<double, 3> d{p[0] - mean[0], p[1] - mean[1], p[2] - mean[2]};
        for (int r = 0; r < 3; ++r) {
            for (int c = r; c < 3; ++c) cov[r][c] += d[r] * d[c];
        }
    }
    for (int r = 0; r < 3; ++r) {
        for (int c = r; c < 3; ++c) {
            cov[r][c] /= n;
            cov[c][r] = cov[r][c];
        }
    }

    auto ev = jacobi_eigenvalues(cov);
    for (auto& e : ev) e = std::max(e, 0.0);
    out.shape.eigenvalues = ev;
    if (ev[1] <= kCollinearTolerance * ev[0] || ev[1] == 0.0) {
        out.status = ShapeStatus::collinear;
        out.shape.ratio = HUGE_VAL;
    } else {
        out.shape.ratio = ev[0] / ev[1];
    }
    return out;
}

void ShapeStats::validate() const {
    if (!(ratio_lo >= 1.0 && ratio_lo <= ratio_hi)) {
        throw ConfigError("shape stats need 1 <= ratio_lo <= ratio_hi");
    }
    if (!(percentile_lo >= 0.0 && percentile_lo <= percentile_hi && percentile_hi <= 100.0)) {
        throw ConfigError("shape stats percentiles must satisfy 0 <= lo <= hi <= 100");
    }
}

double percentile_linear(std::span<const double> sorted, double p) {
    const double pos = static_cast<double>(sorted.size() - 1) * p / 100.0;
    const auto below = static_cast<std::size_t>(std::floor(pos));
    if (below + 1 >= sorted.size()) return sorted.back();
    const double frac = pos - static_cast<double>(below);
    return sorted[below] + frac * (sorted[below + 1] - sorted[below]);
}

ShapeStats fit_ratio_range(std::span<const double> ratios, double p_lo, double p_hi) {
    if (ratios.size() < 2) {
        throw FitError("at least 2 ratios are needed to fit a range, got " + std::to_string(ratios.size()));
    }
    if (!(p_lo >= 0.0 && p_lo <= p_hi && p_hi <= 100.0)) {
        throw ConfigError("percentiles must satisfy 0 <= p_lo <= p_hi <= 100");
    }
    std::vector<double> sorted(ratios.begin(), ratios.end());
    std::sort(sorted.begin(), sorted.end());

    ShapeStats stats;
    stats.ratio_lo = percentile_linear(sorted, p_lo);
    stats.ratio_hi = percentile_linear(sorted, p_hi);
    stats.percentile_lo = p_lo;
    stats.percentile_hi = p_hi;
    stats.sample_count = sorted.size();
    return stats;
}

void FilterConfig::validate() const {
    stats.validate();
    if (!(overlap_threshold >= 0.0 && overlap_threshold <= 1.0)) {
        throw ConfigError("overlap threshold must lie in [0, 1]");
    }
    if (!(prob_threshold > 0.0 && prob_threshold < 1.0)) {
        throw ConfigError("probability threshold must lie in (0, 1)");
    }
}

BinaryMask filter_tumor_components(const BinaryMask& tumor_mask, const BinaryMask& kt_mask, const FilterConfig& config,
                                   std::vector<TumorCandidate>* report) {
    require_same_geometry(tumor_mask.geometry, kt_mask.geometry, "filter_tumor_components");
    const ComponentTable table = label_components(tumor_mask, config.connectivity);

    BinaryMask out(tumor_mask.geometry);
    for (const auto& comp : table.components) {
        TumorCandidate cand;
        cand.component_id = comp.id;
        cand.voxel_count = comp.voxel_count;
        cand.measurement = covariance_eigenvalues(comp.voxels, tumor_mask.geometry,
                                                  std::max<std::size_t>(config.min_component_voxels, 1), config.frame);
        cand.overlap = overlap_fraction(comp.voxels, kt_mask);
        const double ratio = cand.measurement.shape.ratio;
        cand.kept = cand.measurement.status == ShapeStatus::ok && ratio >= config.stats.ratio_lo &&
                    ratio <= config.stats.ratio_hi && cand.overlap >= config.overlap_threshold;
        if (cand.kept) {
            for (const auto idx : comp.voxels) out.bits[idx] = 1;
        }
        if (report) report->push_back(cand);
    }
    return out;
}

std::vector<double> tumor_ratios(const LabelVolume& labels, const FilterConfig& config) {
    std::vector<double> ratios;
    const ComponentTable table = label_components(tumor_mask(labels), config.connectivity);
    for (const auto& comp : table.components) {
        const auto m = covariance_eigenvalues(comp.voxels, labels.geometry,
                                              std::max<std::size_t>(config.min_component_voxels, 1), config.frame);
        if (m.status == ShapeStatus::ok) ratios.push_back(m.shape.ratio);
    }
    return ratios;
}

std::string shape_stats_to_json(const ShapeStats& stats) {
    const nlohmann::ordered_json doc = {
        {"ratio_lo", stats.ratio_lo},
        {"ratio_hi", stats.ratio_hi},
        {"percentile_lo", stats.percentile_lo},
        {"percentile_hi", stats.percentile_hi},
        {"sample_count", stats.sample_count},
    };
    return doc.dump(2) + "\n";
}

ShapeStats shape_stats_from_json(const std::string& text) {
    ShapeStats stats;
    try {
        const auto doc = nlohmann::json::parse(text);
        for (const auto& [key, value] : doc.items()) {
            if (key == "ratio_lo") stats.ratio_lo = value.get<double>();
            else if (key == "ratio_hi") stats.ratio_hi = value.get<double>();
            else if (key == "percentile_lo") stats.percentile_lo = value.get<double>();
            else if (key == "percentile_hi") stats.percentile_hi = value.get<double>();
            else if (key == "sample_count") stats.sample_count = value.get<std::size_t>();
            else throw ValidationError("unknown shape stats key '" + key + "'");
        }
        if (!doc.contains("ratio_lo") || !doc.contains("ratio_hi")) {
            throw ValidationError("shape stats need ratio_lo and ratio_hi");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("shape stats: ") + e.what());
    }
    stats.validate();
    return stats;
}

void write_shape_stats(const std::filesystem::path& path, const ShapeStats& stats) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << shape_stats_to_json(stats);
    if (!out) throw IoError("failed writing " + path.string());
}

ShapeStats read_shape_stats(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return shape_stats_from_json(buf.str());
}

}  // namespace renal
