#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace renal {

struct VoxelIndex {
    std::int64_t i = 0;
    std::int64_t j = 0;
    std::int64_t k = 0;

    friend bool operator==(const VoxelIndex&, const VoxelIndex&) = default;
};

/// Voxel grid extent plus physical spacing in millimetres.
///
/// Samples are stored x-fastest (NIfTI order): linear = i + nx * (j + ny * k).
struct VolumeGeometry {
    std::array<std::int64_t, 3> dims{1, 1, 1};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};

    /// Throws ValidationError unless all dims >= 1 and all spacings > 0.
    void validate() const;

    [[nodiscard]] std::size_t voxel_count() const noexcept {
        return static_cast<std::size_t>(dims[0] * dims[1] * dims[2]);
    }
    [[nodiscard]] std::size_t linear(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept {
        return static_cast<std::size_t>(i + dims[0] * (j + dims[1] * k));
    }
    [[nodiscard]] std::size_t linear(const VoxelIndex& v) const noexcept { return linear(v.i, v.j, v.k); }
    [[nodiscard]] VoxelIndex index(std::size_t linear) const noexcept {
        const auto l = static_cast<std::int64_t>(linear);
        return {l % dims[0], (l / dims[0]) % dims[1], l / (dims[0] * dims[1])};
    }
    [[nodiscard]] bool contains(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept {
        return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
    }
    /// Physical position of the voxel centre, (i*sx, j*sy, k*sz).
    [[nodiscard]] std::array<double, 3> position(std::size_t linear) const noexcept {
        const VoxelIndex v = index(linear);
        return {static_cast<double>(v.i) * spacing[0], static_cast<double>(v.j) * spacing[1],
                static_cast<double>(v.k) * spacing[2]};
    }

    friend bool operator==(const VolumeGeometry&, const VolumeGeometry&) = default;
};

/// Throws ValidationError naming `what` if the two geometries differ.
void require_same_geometry(const VolumeGeometry& a, const VolumeGeometry& b, const char* what);

enum class SampleKind { uint8, int16, float32 };

[[nodiscard]] const char* to_string(SampleKind kind) noexcept;

using SampleArray = std::variant<std::vector<std::uint8_t>, std::vector<std::int16_t>, std::vector<float>>;

/// Untyped volume exactly as stored on disk.
struct RawVolume {
    VolumeGeometry geometry;
    SampleArray samples;

    [[nodiscard]] SampleKind kind() const noexcept;
    [[nodiscard]] std::size_t sample_count() const noexcept;
};

/// Labels 0 (background), 1 (kidney), 2 (tumor).
struct LabelVolume {
    VolumeGeometry geometry;
    std::vector<std::uint8_t> labels;

    friend bool operator==(const LabelVolume&, const LabelVolume&) = default;
};

struct BinaryMask {
    VolumeGeometry geometry;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    explicit BinaryMask(const VolumeGeometry& g) : geometry(g), bits(g.voxel_count(), 0) {}

    [[nodiscard]] std::size_t count() const noexcept;
    [[nodiscard]] bool operator[](std::size_t idx) const noexcept { return bits[idx] != 0; }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Sigmoid outputs in [0, 1].
struct ProbabilityVolume {
    VolumeGeometry geometry;
    std::vector<float> probs;
};

/// CT intensities (or any scalar image) promoted to float.
struct ImageVolume {
    VolumeGeometry geometry;
    std::vector<float> values;
};

/// Validates every sample is exactly 0, 1 or 2. Throws ValidationError
/// naming the first offending voxel.
[[nodiscard]] LabelVolume as_label_volume(const RawVolume& raw);
/// Validates every sample lies in [0, 1] (NaN rejected).
[[nodiscard]] ProbabilityVolume as_probability_volume(const RawVolume& raw);
/// Lossless for all three sample kinds.
[[nodiscard]] ImageVolume as_image_volume(const RawVolume& raw);

[[nodiscard]] RawVolume to_raw(const LabelVolume& v);
[[nodiscard]] RawVolume to_raw(const BinaryMask& m);
[[nodiscard]] RawVolume to_raw(const ProbabilityVolume& v);

/// Indicator of label in {1, 2}.
[[nodiscard]] BinaryMask kidney_tumor_mask(const LabelVolume& v);
/// Indicator of label == 2.
[[nodiscard]] BinaryMask tumor_mask(const LabelVolume& v);

}  // namespace renal
