#pragma once

#include "renal/pipeline.hpp"
#include "renal/volume.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace renal {

/// Axis-aligned ellipsoid in millimetres. The generator snaps centres to voxel centres.
struct Ellipsoid {
    std::array<double, 3> center_mm{};
    std::array<double, 3> semi_axes_mm{1.0, 1.0, 1.0};
};

/// Linear indices of voxels whose centre lies inside (or on) the ellipsoid.
[[nodiscard]] std::vector<std::size_t> voxelize(const Ellipsoid& e, const VolumeGeometry& geometry);

struct PhantomSpec {
    std::uint64_t seed = 1;
    VolumeGeometry geometry{{112, 96, 96}, {1.0, 1.0, 1.0}};

    /// Nominal kidney semi-axes; each kidney is scaled by U(0.9, 1.1) per axis.
    std::array<double, 3> kidney_semi_axes_mm{12.0, 15.0, 24.0};
    /// Centre-to-centre distance of the mirrored kidneys along x.
    double kidney_separation_mm = 56.0;
    /// Uniform jitter applied to each kidney centre on every axis.
    double center_jitter_mm = 3.0;

    /// Tumor semi-axes are (b, b, b * sqrt(ratio)) with b ~ U(min, max); the
    /// tumor sits on the lateral surface of the first kidney.
    double tumor_minor_axis_min_mm = 8.0;
    double tumor_minor_axis_max_mm = 9.5;
    double tumor_ratio_target = 2.0;

    std::size_t spurious_blob_count = 3;
    double spurious_radius_min_mm = 3.0;
    double spurious_radius_max_mm = 5.0;
    double cavity_radius_mm = 3.0;
    double sphere_fp_radius_mm = 5.0;
    std::array<double, 3> outside_blob_semi_axes_mm{6.0, 4.0, 4.0};
    /// Minimum voxel gap between placed artifacts and anything else.
    std::int64_t clearance_voxels = 4;
};

/// Where each injected failure mode ended up.
struct PhantomArtifacts {
    std::array<Ellipsoid, 2> kidneys;
    Ellipsoid tumor;
    std::vector<std::vector<std::size_t>> spurious_blobs;  // prob_kt, distant from the kidneys
    std::vector<std::size_t> cavity;                       // prob_kt hole inside the first kidney
    std::vector<std::size_t> sphere_fp;                    // prob_tumor sphere inside the second kidney
    std::vector<std::size_t> outside_blob;                 // prob_tumor elongated blob outside both kidneys
};

struct Phantom {
    LabelVolume gt;
    CasePrediction pred;
    PhantomArtifacts artifacts;
};

/// Deterministic in `spec`. Throws ConstructionError when the ellipsoids do
/// not fit or artifacts cannot be placed with the requested clearance.
[[nodiscard]] Phantom generate_phantom(const PhantomSpec& spec);

/// Synthetic int16 CT: soft tissue around 40 HU, kidney 150 HU, tumor 90 HU,
/// uniform noise of +-20 HU.
[[nodiscard]] RawVolume synthesize_ct(const LabelVolume& gt, std::uint64_t seed);

}  // namespace renal
