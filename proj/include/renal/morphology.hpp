#pragma once

#include "renal/volume.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace renal {

enum class Connectivity { six = 6, eighteen = 18, twenty_six = 26 };

/// Throws ConfigError for anything other than 6, 18 or 26.
[[nodiscard]] Connectivity connectivity_from_int(int n);

/// Neighbour offsets (di, dj, dk) for the given connectivity, excluding the origin.
[[nodiscard]] std::vector<std::array<int, 3>> neighbor_offsets(Connectivity c);

struct Component {
    std::size_t id = 0;  // 1-based rank in the table ordering
    std::size_t voxel_count = 0;
    std::vector<std::size_t> voxels;  // linear indices, ascending
    std::array<double, 3> centroid_mm{};
    VoxelIndex bbox_min;
    VoxelIndex bbox_max;
};

/// Connected components of a mask, largest first; equal sizes are ordered
/// by their smallest linear voxel index.
struct ComponentTable {
    VolumeGeometry geometry;
    Connectivity connectivity = Connectivity::twenty_six;
    std::vector<Component> components;

    [[nodiscard]] std::size_t size() const noexcept { return components.size(); }
    [[nodiscard]] bool empty() const noexcept { return components.empty(); }
};

[[nodiscard]] ComponentTable label_components(const BinaryMask& mask,
                                              Connectivity connectivity = Connectivity::twenty_six);

/// Mask of the first k components of the table.
[[nodiscard]] BinaryMask keep_largest_k(const ComponentTable& table, std::size_t k);

/// Sets every background voxel that is not 6-connected to the volume border.
[[nodiscard]] BinaryMask fill_holes(const BinaryMask& mask);

/// |voxels in reference| / |voxels|. Throws ValidationError for an empty list.
[[nodiscard]] double overlap_fraction(std::span<const std::size_t> voxels, const BinaryMask& reference);

}  // namespace renal
