#pragma once

#include "renal/morphology.hpp"
#include "renal/volume.hpp"

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace renal {

using SymmetricMatrix3 = std::array<std::array<double, 3>, 3>;

/// Eigenvalues of a symmetric 3x3 matrix by cyclic Jacobi rotations, sorted
/// descending. Sweeps stop once the off-diagonal Frobenius norm drops below
/// 1e-12 * |trace| (or reaches zero).
[[nodiscard]] std::array<double, 3> jacobi_eigenvalues(const SymmetricMatrix3& m);

/// Principal variances of a component, in mm^2 (or voxel^2).
struct ComponentShape {
    std::array<double, 3> eigenvalues{};  // descending, non-negative
    double ratio = 0.0;                   // eigenvalues[0] / eigenvalues[1]
};

enum class ShapeStatus {
    ok,
    degenerate,  // fewer voxels than the configured minimum
    collinear,   // second eigenvalue vanishes, ratio is unbounded
};

struct ShapeMeasurement {
    ShapeStatus status = ShapeStatus::ok;
    ComponentShape shape;
};

enum class CoordinateFrame { physical, voxel };

/// Population covariance (normalised by n) of the voxel centres about their
/// centroid and its eigen-decomposition. Physical coordinates are
/// (i*sx, j*sy, k*sz).
[[nodiscard]] ShapeMeasurement covariance_eigenvalues(std::span<const std::size_t> voxels,
                                                      const VolumeGeometry& geometry, std::size_t min_voxels = 4,
                                                      CoordinateFrame frame = CoordinateFrame::physical);

/// Accepted elongation-ratio interval and how it was obtained.
struct ShapeStats {
    double ratio_lo = 1.07;
    double ratio_hi = 2.8;
    double percentile_lo = 5.0;
    double percentile_hi = 95.0;
    std::size_t sample_count = 0;

    void validate() const;
    friend bool operator==(const ShapeStats&, const ShapeStats&) = default;
};

/// Percentile by linear interpolation at rank position (n - 1) * p / 100 of
/// the ascending order statistics.
[[nodiscard]] double percentile_linear(std::span<const double> sorted_ascending, double p);

/// Throws FitError for fewer than two ratios, ConfigError for percentiles
/// outside [0, 100] or p_lo > p_hi.
[[nodiscard]] ShapeStats fit_ratio_range(std::span<const double> ratios, double p_lo = 5.0, double p_hi = 95.0);

struct FilterConfig {
    ShapeStats stats;
    double overlap_threshold = 0.95;
    std::size_t min_component_voxels = 20;
    double prob_threshold = 0.5;
    Connectivity connectivity = Connectivity::twenty_six;
    bool fill_holes = true;
    CoordinateFrame frame = CoordinateFrame::physical;

    void validate() const;
};

/// Per-component decision made by the tumor filter.
struct TumorCandidate {
    std::size_t component_id = 0;
    std::size_t voxel_count = 0;
    ShapeMeasurement measurement;
    double overlap = 0.0;
    bool kept = false;
};

/// Keeps a tumor component iff it has at least min_component_voxels voxels,
/// its elongation ratio lies in [ratio_lo, ratio_hi] and at least
/// overlap_threshold of it lies inside `kt_mask`.
[[nodiscard]] BinaryMask filter_tumor_components(const BinaryMask& tumor_mask, const BinaryMask& kt_mask,
                                                 const FilterConfig& config,
                                                 std::vector<TumorCandidate>* report = nullptr);

/// Elongation ratios of every measurable tumor component in a label volume.
[[nodiscard]] std::vector<double> tumor_ratios(const LabelVolume& labels, const FilterConfig& config);

/// {"ratio_lo", "ratio_hi", "percentile_lo", "percentile_hi", "sample_count"}
[[nodiscard]] std::string shape_stats_to_json(const ShapeStats& stats);
[[nodiscard]] ShapeStats shape_stats_from_json(const std::string& text);
void write_shape_stats(const std::filesystem::path& path, const ShapeStats& stats);
[[nodiscard]] ShapeStats read_shape_stats(const std::filesystem::path& path);

}  // namespace renal
