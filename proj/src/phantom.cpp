#include "renal/phantom.hpp"

#include "renal/errors.hpp"
#include "renal/rng.hpp"

#include <algorithm>
#include <cmath>

namespace renal {

namespace {

constexpr float kInsideBase = 0.6f;
constexpr float kInsideSpan = 0.35f;
constexpr float kOutsideSpan = 0.4f;
constexpr double kBackgroundNoise = 0.2;
constexpr float kArtifactProbability = 0.9f;
constexpr int kMaxPlacementAttempts = 2000;

Ellipsoid snapped(const VolumeGeometry& g, std::array<double, 3> center, std::array<double, 3> axes) {
    for (int a = 0; a < 3; ++a) center[a] = std::round(center[a] / g.spacing[a]) * g.spacing[a];
    return {center, axes};
}

bool fits(const Ellipsoid& e, const VolumeGeometry& g, double margin_voxels = 1.0) {
    for (int a = 0; a < 3; ++a) {
        const double lo = e.center_mm[a] - e.semi_axes_mm[a];
        const double hi = e.center_mm[a] + e.semi_axes_mm[a];
        if (lo < margin_voxels * g.spacing[a] ||
            hi > (static_cast<double>(g.dims[a] - 1) - margin_voxels) * g.spacing[a]) {
            return false;
        }
    }
    return true;
}

/// 3x3x3 mean of a 0/1 indicator.
std::vector<float> box_blur(const std::vector<std::uint8_t>& indicator, const VolumeGeometry& g) {
    std::vector<float> out(indicator.size(), 0.0f);
    for (std::int64_t k = 0; k < g.dims[2]; ++k) {
        for (std::int64_t j = 0; j < g.dims[1]; ++j) {
            for (std::int64_t i = 0; i < g.dims[0]; ++i) {
                int sum = 0;
                for (int dk = -1; dk <= 1; ++dk) {
                    for (int dj = -1; dj <= 1; ++dj) {
                        for (int di = -1; di <= 1; ++di) {
                            if (g.contains(i + di, j + dj, k + dk)) sum += indicator[g.linear(i + di, j + dj, k + dk)];
                        }
                    }
                }
                out[g.linear(i, j, k)] = static_cast<float>(sum) / 27.0f;
            }
        }
    }
    return out;
}

/// Soft probabilities whose 0.5 threshold reproduces `indicator` exactly.
std::vector<float> soften(const std::vector<std::uint8_t>& indicator, const VolumeGeometry& g, Xoshiro256& rng) {
    const auto blur = box_blur(indicator, g);
    std::vector<float> out(indicator.size());
    for (std::size_t n = 0; n < out.size(); ++n) {
        if (indicator[n]) {
            out[n] = kInsideBase + kInsideSpan * blur[n];
        } else if (blur[n] > 0.0f) {
            out[n] = kOutsideSpan * blur[n];
        } else {
            out[n] = static_cast<float>(rng.uniform(0.0, kBackgroundNoise));
        }
    }
    return out;
}

class Occupancy {
public:
    Occupancy(const VolumeGeometry& g, std::int64_t clearance) : g_(g), clearance_(clearance), bits_(g.voxel_count(), 0) {}

    void mark(const std::vector<std::size_t>& voxels) {
        for (const auto idx : voxels) bits_[idx] = 1;
    }

    [[nodiscard]] bool clear(const std::vector<std::size_t>& voxels) const {
        for (const auto idx : voxels) {
            const VoxelIndex v = g_.index(idx);
            for (std::int64_t dk = -clearance_; dk <= clearance_; ++dk) {
                for (std::int64_t dj = -clearance_; dj <= clearance_; ++dj) {
                    for (std::int64_t di = -clearance_; di <= clearance_; ++di) {
                        if (g_.contains(v.i + di, v.j + dj, v.k + dk) && bits_[g_.linear(v.i + di, v.j + dj, v.k + dk)]) {
                            return false;
                        }
                    }
                }
            }
        }
        return true;
    }

private:
    VolumeGeometry g_;
    std::int64_t clearance_;
    std::vector<std::uint8_t> bits_;
};

std::vector<std::size_t> place_clear(const std::array<double, 3>& semi_axes, const VolumeGeometry& g,
                                     Occupancy& occupied, Xoshiro256& rng, const char* what) {
    for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
        std::array<double, 3> center{};
        for (int a = 0; a < 3; ++a) {
            const double lo = semi_axes[a] + g.spacing[a];
            const double hi = static_cast<double>(g.dims[a] - 2) * g.spacing[a] - semi_axes[a];
            if (hi <= lo) throw ConstructionError(std::string(what) + " does not fit inside the volume");
            center[a] = rng.uniform(lo, hi);
        }
        const Ellipsoid e = snapped(g, center, semi_axes);
        if (!fits(e, g)) continue;
        auto voxels = voxelize(e, g);
        if (voxels.empty() || !occupied.clear(voxels)) continue;
        occupied.mark(voxels);
        return voxels;
    }
    throw ConstructionError(std::string("could not place ") + what + " with the requested clearance");
}

}  // namespace

std::vector<std::size_t> voxelize(const Ellipsoid& e, const VolumeGeometry& g) {
    std::array<std::int64_t, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
        lo[a] = std::max<std::int64_t>(0, static_cast<std::int64_t>(
                                              std::floor((e.center_mm[a] - e.semi_axes_mm[a]) / g.spacing[a])));
        hi[a] = std::min<std::int64_t>(g.dims[a] - 1, static_cast<std::int64_t>(std::ceil(
                                                          (e.center_mm[a] + e.semi_axes_mm[a]) / g.spacing[a])));
    }
    std::vector<std::size_t> out;
    for (std::int64_t k = lo[2]; k <= hi[2]; ++k) {
        for (std::int64_t j = lo[1]; j <= hi[1]; ++j) {
            for (std::int64_t i = lo[0]; i <= hi[0]; ++i) {
                const double x = (static_cast<double>(i) * g.spacing[0] - e.center_mm[0]) / e.semi_axes_mm[0];
                const double y = (static_cast<double>(j) * g.spacing[1] - e.center_mm[1]) / e.semi_axes_mm[1];
                const double z = (static_cast<double>(k) * g.spacing[2] - e.center_mm[2]) / e.semi_axes_mm[2];
                if (x * x + y * y + z * z <= 1.0) out.push_back(g.linear(i, j, k));
            }
        }
    }
    return out;
}

Phantom generate_phantom(const PhantomSpec& spec) {
    const auto& g = spec.geometry;
    g.validate();
    if (!(spec.tumor_ratio_target >= 1.0)) throw ConstructionError("tumor ratio target must be >= 1");
    if (!(spec.tumor_minor_axis_min_mm > 0.0 && spec.tumor_minor_axis_min_mm <= spec.tumor_minor_axis_max_mm)) {
        throw ConstructionError("invalid tumor minor axis range");
    }
    if (!(spec.spurious_radius_min_mm > 0.0 && spec.spurious_radius_min_mm <= spec.spurious_radius_max_mm)) {
        throw ConstructionError("invalid spurious blob radius range");
    }

    Xoshiro256 rng(spec.seed);
    Phantom ph;
    auto& art = ph.artifacts;

    const std::array<double, 3> mid{static_cast<double>(g.dims[0] - 1) * g.spacing[0] / 2.0,
                                    static_cast<double>(g.dims[1] - 1) * g.spacing[1] / 2.0,
                                    static_cast<double>(g.dims[2] - 1) * g.spacing[2] / 2.0};
    for (int side = 0; side < 2; ++side) {
        std::array<double, 3> center = mid;
        center[0] += (side == 0 ? -0.5 : 0.5) * spec.kidney_separation_mm;
        std::array<double, 3> axes{};
        for (int a = 0; a < 3; ++a) {
            center[a] += rng.uniform(-spec.center_jitter_mm, spec.center_jitter_mm);
            axes[a] = spec.kidney_semi_axes_mm[a] * rng.uniform(0.9, 1.1);
        }
        art.kidneys[side] = snapped(g, center, axes);
        if (!fits(art.kidneys[side], g)) throw ConstructionError("kidney does not fit inside the volume");
    }

    const double minor = rng.uniform(spec.tumor_minor_axis_min_mm, spec.tumor_minor_axis_max_mm);
    const double major = minor * std::sqrt(spec.tumor_ratio_target);
    std::array<double, 3> tumor_center = art.kidneys[0].center_mm;
    tumor_center[0] -= art.kidneys[0].semi_axes_mm[0];
    tumor_center[2] += rng.uniform(-0.25, 0.25) * art.kidneys[0].semi_axes_mm[2];
    art.tumor = snapped(g, tumor_center, {minor, minor, major});
    if (!fits(art.tumor, g)) throw ConstructionError("tumor does not fit inside the volume");

    const std::size_t n = g.voxel_count();
    ph.gt = LabelVolume{g, std::vector<std::uint8_t>(n, 0)};
    std::vector<std::uint8_t> kidney_bits(n, 0), tumor_bits(n, 0);
    for (const auto& kidney : art.kidneys) {
        for (const auto idx : voxelize(kidney, g)) kidney_bits[idx] = 1;
    }
    const auto tumor_voxels = voxelize(art.tumor, g);
    for (const auto idx : tumor_voxels) tumor_bits[idx] = 1;
    bool attached = false;
    for (std::size_t idx = 0; idx < n; ++idx) {
        attached = attached || (kidney_bits[idx] && tumor_bits[idx]);
        ph.gt.labels[idx] = tumor_bits[idx] ? 2 : kidney_bits[idx] ? 1 : 0;
    }
    if (!attached) throw ConstructionError("tumor does not intersect a kidney");
    std::vector<std::uint8_t> kt_bits(n, 0);
    for (std::size_t idx = 0; idx < n; ++idx) kt_bits[idx] = ph.gt.labels[idx] != 0;

    ph.pred.prob_kt = {g, soften(kt_bits, g, rng)};
    ph.pred.prob_tumor = {g, soften(tumor_bits, g, rng)};

    Occupancy occupied(g, spec.clearance_voxels);
    occupied.mark([&] {
        std::vector<std::size_t> v;
        for (std::size_t idx = 0; idx < n; ++idx) {
            if (kt_bits[idx]) v.push_back(idx);
        }
        return v;
    }());

    for (std::size_t b = 0; b < spec.spurious_blob_count; ++b) {
        const double r = rng.uniform(spec.spurious_radius_min_mm, spec.spurious_radius_max_mm);
        auto voxels = place_clear({r, r, r}, g, occupied, rng, "spurious blob");
        for (const auto idx : voxels) ph.pred.prob_kt.probs[idx] = kArtifactProbability;
        art.spurious_blobs.push_back(std::move(voxels));
    }

    art.outside_blob = place_clear(spec.outside_blob_semi_axes_mm, g, occupied, rng, "outside tumor blob");
    for (const auto idx : art.outside_blob) ph.pred.prob_tumor.probs[idx] = kArtifactProbability;

    // Cavity on the medial side of the first kidney, away from the tumor.
    std::array<double, 3> cavity_center = art.kidneys[0].center_mm;
    cavity_center[0] += 0.35 * art.kidneys[0].semi_axes_mm[0];
    const Ellipsoid cavity = snapped(g, cavity_center, {spec.cavity_radius_mm, spec.cavity_radius_mm,
                                                        spec.cavity_radius_mm});
    art.cavity = voxelize(cavity, g);
    for (const auto idx : art.cavity) {
        if (ph.gt.labels[idx] != 1) throw ConstructionError("cavity is not enclosed by the kidney");
        ph.pred.prob_kt.probs[idx] = static_cast<float>(rng.uniform(0.0, kBackgroundNoise));
    }

    const double rs = spec.sphere_fp_radius_mm;
    art.sphere_fp = voxelize(snapped(g, art.kidneys[1].center_mm, {rs, rs, rs}), g);
    for (const auto idx : art.sphere_fp) {
        if (ph.gt.labels[idx] != 1) throw ConstructionError("sphere false positive leaves the second kidney");
        ph.pred.prob_tumor.probs[idx] = kArtifactProbability;
    }
    return ph;
}

RawVolume synthesize_ct(const LabelVolume& gt, std::uint64_t seed) {
    Xoshiro256 rng(seed ^ 0x5eedc7ULL);
    std::vector<std::int16_t> hu(gt.labels.size());
    for (std::size_t n = 0; n < hu.size(); ++n) {
        const double base = gt.labels[n] == 2 ? 90.0 : gt.labels[n] == 1 ? 150.0 : 40.0;
        hu[n] = static_cast<std::int16_t>(std::lround(base + rng.uniform(-20.0, 20.0)));
    }
    return {gt.geometry, std::move(hu)};
}

}  // namespace renal
