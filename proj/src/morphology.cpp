#include "renal/morphology.hpp"

#include "renal/errors.hpp"

#include <algorithm>
#include <numeric>

namespace renal {

namespace {

class DisjointSet {
public:
    explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    // The smaller root wins, so a root is always the set's smallest member.
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
    }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace

Connectivity connectivity_from_int(int n) {
    switch (n) {
        case 6: return Connectivity::six;
        case 18: return Connectivity::eighteen;
        case 26: return Connectivity::twenty_six;
        default: throw ConfigError("connectivity must be 6, 18 or 26, got " + std::to_string(n));
    }
}

std::vector<std::array<int, 3>> neighbor_offsets(Connectivity c) {
    const int max_nonzero = c == Connectivity::six ? 1 : c == Connectivity::eighteen ? 2 : 3;
    std::vector<std::array<int, 3>> out;
    for (int dk = -1; dk <= 1; ++dk) {
        for (int dj = -1; dj <= 1; ++dj) {
            for (int di = -1; di <= 1; ++di) {
                const int nonzero = (di != 0) + (dj != 0) + (dk != 0);
                if (nonzero > 0 && nonzero <= max_nonzero) out.push_back({di, dj, dk});
            }
        }
    }
    return out;
}

ComponentTable label_components(const BinaryMask& mask, Connectivity connectivity) {
    const auto& g = mask.geometry;
    ComponentTable table{g, connectivity, {}};
    const std::size_t n = g.voxel_count();

    // Only neighbours preceding the voxel in scan order; the other half is
    // covered when those neighbours are visited.
    std::vector<std::array<int, 3>> backward;
    for (const auto& o : neighbor_offsets(connectivity)) {
        if (o[2] < 0 || (o[2] == 0 && (o[1] < 0 || (o[1] == 0 && o[0] < 0)))) backward.push_back(o);
    }

    DisjointSet sets(n);
    for (std::int64_t k = 0; k < g.dims[2]; ++k) {
        for (std::int64_t j = 0; j < g.dims[1]; ++j) {
            for (std::int64_t i = 0; i < g.dims[0]; ++i) {
                const std::size_t idx = g.linear(i, j, k);
                if (!mask.bits[idx]) continue;
                for (const auto& o : backward) {
                    const std::int64_t ni = i + o[0], nj = j + o[1], nk = k + o[2];
                    if (!g.contains(ni, nj, nk)) continue;
                    const std::size_t nidx = g.linear(ni, nj, nk);
                    if (mask.bits[nidx]) sets.unite(idx, nidx);
                }
            }
        }
    }

    // Roots are minimal members, so first-visit order is already sorted by
    // minimum linear index.
    std::vector<std::size_t> slot_of_root(n, SIZE_MAX);
    for (std::size_t idx = 0; idx < n; ++idx) {
        if (!mask.bits[idx]) continue;
        const std::size_t root = sets.find(idx);
        if (slot_of_root[root] == SIZE_MAX) {
            slot_of_root[root] = table.components.size();
            Component c;
            c.bbox_min = c.bbox_max = g.index(idx);
            table.components.push_back(std::move(c));
        }
        Component& c = table.components[slot_of_root[root]];
        c.voxels.push_back(idx);
        const VoxelIndex v = g.index(idx);
        c.bbox_min = {std::min(c.bbox_min.i, v.i), std::min(c.bbox_min.j, v.j), std::min(c.bbox_min.k, v.k)};
        c.bbox_max = {std::max(c.bbox_max.i, v.i), std::max(c.bbox_max.j, v.j), std::max(c.bbox_max.k, v.k)};
    }

    for (auto& c : table.components) {
        c.voxel_count = c.voxels.size();
        std::array<double, 3> sum{};
        for (const auto idx : c.voxels) {
            const auto p = g.position(idx);
            for (int a = 0; a < 3; ++a) sum[a] += p[a];
        }
        for (int a = 0; a < 3; ++a) c.centroid_mm[a] = sum[a] / static_cast<double>(c.voxel_count);
    }

    std::stable_sort(table.components.begin(), table.components.end(),
                     [](const Component& a, const Component& b) { return a.voxel_count > b.voxel_count; });
    for (std::size_t r = 0; r < table.components.size(); ++r) table.components[r].id = r + 1;
    return table;
}

BinaryMask keep_largest_k(const ComponentTable& table, std::size_t k) {
    BinaryMask out(table.geometry);
    const std::size_t keep = std::min(k, table.components.size());
    for (std::size_t r = 0; r < keep; ++r) {
        for (const auto idx : table.components[r].voxels) out.bits[idx] = 1;
    }
    return out;
}

BinaryMask fill_holes(const BinaryMask& mask) {
    const auto& g = mask.geometry;
    const std::size_t n = g.voxel_count();
    std::vector<std::uint8_t> reached(n, 0);
    std::vector<std::size_t> stack;

    auto seed = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
        const std::size_t idx = g.linear(i, j, k);
        if (!mask.bits[idx] && !reached[idx]) {
            reached[idx] = 1;
            stack.push_back(idx);
        }
    };
    for (std::int64_t k = 0; k < g.dims[2]; ++k) {
        for (std::int64_t j = 0; j < g.dims[1]; ++j) {
            for (std::int64_t i = 0; i < g.dims[0]; ++i) {
                const bool border = i == 0 || j == 0 || k == 0 || i == g.dims[0] - 1 || j == g.dims[1] - 1 ||
                                    k == g.dims[2] - 1;
                if (border) seed(i, j, k);
            }
        }
    }

    const auto offsets = neighbor_offsets(Connectivity::six);
    while (!stack.empty()) {
        const std::size_t idx = stack.back();
        stack.pop_back();
        const VoxelIndex v = g.index(idx);
        for (const auto& o : offsets) {
            const std::int64_t ni = v.i + o[0], nj = v.j + o[1], nk = v.k + o[2];
            if (g.contains(ni, nj, nk)) seed(ni, nj, nk);
        }
    }

    BinaryMask out(g);
    for (std::size_t idx = 0; idx < n; ++idx) out.bits[idx] = reached[idx] ? 0 : 1;
    return out;
}

double overlap_fraction(std::span<const std::size_t> voxels, const BinaryMask& reference) {
    if (voxels.empty()) throw ValidationError("overlap_fraction of an empty voxel list");
    std::size_t inside = 0;
    for (const auto idx : voxels) {
        if (idx >= reference.bits.size()) throw ValidationError("voxel index outside the reference mask");
        inside += reference.bits[idx] ? 1 : 0;
    }
    return static_cast<double>(inside) / static_cast<double>(voxels.size());
}

}  // namespace renal
