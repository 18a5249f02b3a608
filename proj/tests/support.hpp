#pragma once

// Test-only oracles and generators. Nothing here calls into the code paths
// it is used to check.

#include "renal/rng.hpp"
#include "renal/volume.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

namespace testing {

inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("renal_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline renal::BinaryMask random_mask(const renal::VolumeGeometry& g, double density, renal::Xoshiro256& rng) {
    renal::BinaryMask m(g);
    for (auto& b : m.bits) b = rng.uniform() < density ? 1 : 0;
    return m;
}

/// Union of random solid balls, each containing a carved ball-shaped cavity.
inline renal::BinaryMask random_blobs_with_cavities(const renal::VolumeGeometry& g, renal::Xoshiro256& rng,
                                                    int blobs = 3) {
    renal::BinaryMask m(g);
    for (int b = 0; b < blobs; ++b) {
        const double r = rng.uniform(3.0, 6.0);
        std::array<double, 3> c{};
        for (int a = 0; a < 3; ++a) c[a] = rng.uniform(1.0, static_cast<double>(g.dims[a] - 2));
        const double cavity = rng.uniform(0.8, r - 1.8);
        for (std::int64_t k = 0; k < g.dims[2]; ++k)
            for (std::int64_t j = 0; j < g.dims[1]; ++j)
                for (std::int64_t i = 0; i < g.dims[0]; ++i) {
                    const double d2 = (i - c[0]) * (i - c[0]) + (j - c[1]) * (j - c[1]) + (k - c[2]) * (k - c[2]);
                    if (d2 <= r * r) m.bits[g.linear(i, j, k)] = 1;
                }
        for (std::int64_t k = 0; k < g.dims[2]; ++k)
            for (std::int64_t j = 0; j < g.dims[1]; ++j)
                for (std::int64_t i = 0; i < g.dims[0]; ++i) {
                    const double d2 = (i - c[0]) * (i - c[0]) + (j - c[1]) * (j - c[1]) + (k - c[2]) * (k - c[2]);
                    if (d2 <= cavity * cavity) m.bits[g.linear(i, j, k)] = 0;
                }
    }
    return m;
}

inline bool adjacent(const std::array<std::int64_t, 3>& d, int connectivity) {
    const auto ad = [](std::int64_t v) { return v < 0 ? -v : v; };
    if (ad(d[0]) > 1 || ad(d[1]) > 1 || ad(d[2]) > 1) return false;
    const int nz = (d[0] != 0) + (d[1] != 0) + (d[2] != 0);
    if (nz == 0) return false;
    if (connectivity == 6) return nz == 1;
    if (connectivity == 18) return nz <= 2;
    return true;
}

/// BFS flood fill per seed over voxels selected by `value`; returns a label per
/// voxel (0 = not selected) numbered in order of first discovery.
inline std::vector<int> bfs_labels(const renal::VolumeGeometry& g, const std::vector<std::uint8_t>& bits,
                                   std::uint8_t value, int connectivity) {
    std::vector<int> label(bits.size(), 0);
    int next = 0;
    for (std::size_t s = 0; s < bits.size(); ++s) {
        if (bits[s] != value || label[s] != 0) continue;
        label[s] = ++next;
        std::queue<std::size_t> q;
        q.push(s);
        while (!q.empty()) {
            const auto v = g.index(q.front());
            q.pop();
            for (std::int64_t dk = -1; dk <= 1; ++dk)
                for (std::int64_t dj = -1; dj <= 1; ++dj)
                    for (std::int64_t di = -1; di <= 1; ++di) {
                        if (!adjacent({di, dj, dk}, connectivity)) continue;
                        if (!g.contains(v.i + di, v.j + dj, v.k + dk)) continue;
                        const auto n = g.linear(v.i + di, v.j + dj, v.k + dk);
                        if (bits[n] == value && label[n] == 0) {
                            label[n] = next;
                            q.push(n);
                        }
                    }
        }
    }
    return label;
}

/// Partition as a set of voxel sets, independent of numbering.
inline std::set<std::vector<std::size_t>> partition_of(const std::vector<int>& labels) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t n = 0; n < labels.size(); ++n)
        if (labels[n] > 0) groups[labels[n]].push_back(n);
    std::set<std::vector<std::size_t>> out;
    for (auto& [_, v] : groups) out.insert(v);
    return out;
}

/// Background components (6-connected) that touch no border voxel.
inline int enclosed_background_components(const renal::BinaryMask& m) {
    const auto& g = m.geometry;
    const auto labels = bfs_labels(g, m.bits, 0, 6);
    std::set<int> touching, all;
    for (std::size_t n = 0; n < labels.size(); ++n) {
        if (labels[n] == 0) continue;
        all.insert(labels[n]);
        const auto v = g.index(n);
        if (v.i == 0 || v.j == 0 || v.k == 0 || v.i == g.dims[0] - 1 || v.j == g.dims[1] - 1 || v.k == g.dims[2] - 1)
            touching.insert(labels[n]);
    }
    return static_cast<int>(all.size() - touching.size());
}

/// Central difference of f at x along coordinate i.
template <typename F>
double central_difference(F&& f, std::vector<double> x, std::size_t i, double h) {
    const double p = x[i];
    x[i] = p + h;
    const double up = f(x);
    x[i] = p - h;
    const double down = f(x);
    return (up - down) / (2.0 * h);
}

inline double relative_error(double a, double b) {
    const double scale = std::max({a < 0 ? -a : a, b < 0 ? -b : b, 1e-12});
    return (a > b ? a - b : b - a) / scale;
}

/// Brute-force population covariance of voxel centres in mm (direct double loop).
inline std::array<std::array<double, 3>, 3> voxel_covariance(const std::vector<std::size_t>& voxels,
                                                            const renal::VolumeGeometry& g) {
    std::array<double, 3> mean{};
    for (auto idx : voxels) {
        const auto v = g.index(idx);
        mean[0] += v.i * g.spacing[0];
        mean[1] += v.j * g.spacing[1];
        mean[2] += v.k * g.spacing[2];
    }
    for (auto& m : mean) m /= static_cast<double>(voxels.size());
    std::array<std::array<double, 3>, 3> c{};
    for (auto idx : voxels) {
        const auto v = g.index(idx);
        const double d[3] = {v.i * g.spacing[0] - mean[0], v.j * g.spacing[1] - mean[1], v.k * g.spacing[2] - mean[2]};
        for (int r = 0; r < 3; ++r)
            for (int s = 0; s < 3; ++s) c[r][s] += d[r] * d[s];
    }
    for (auto& row : c)
        for (auto& x : row) x /= static_cast<double>(voxels.size());
    return c;
}

/// Closed-form (trigonometric) eigenvalues of a symmetric 3x3 matrix, descending.
inline std::array<double, 3> closed_form_eigenvalues(const std::array<std::array<double, 3>, 3>& a) {
    const double p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    const double q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    const double p2 = (a[0][0] - q) * (a[0][0] - q) + (a[1][1] - q) * (a[1][1] - q) + (a[2][2] - q) * (a[2][2] - q) +
                      2.0 * p1;
    if (p2 == 0.0) return {q, q, q};
    const double p = std::sqrt(p2 / 6.0);
    std::array<std::array<double, 3>, 3> b{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) b[r][c] = (a[r][c] - (r == c ? q : 0.0)) / p;
    const double det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) -
                       b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0]) +
                       b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    const double r = std::clamp(det / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double pi = std::acos(-1.0);
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * pi / 3.0);
    return {e1, 3.0 * q - e1 - e3, e3};
}

/// Voxel centres inside an axis-aligned ellipsoid centred on voxel (ci, cj, ck).
inline std::vector<std::size_t> ellipsoid_voxels(const renal::VolumeGeometry& g, std::array<std::int64_t, 3> c,
                                                 std::array<double, 3> semi_mm) {
    std::vector<std::size_t> out;
    for (std::int64_t k = 0; k < g.dims[2]; ++k)
        for (std::int64_t j = 0; j < g.dims[1]; ++j)
            for (std::int64_t i = 0; i < g.dims[0]; ++i) {
                const double x = (i - c[0]) * g.spacing[0] / semi_mm[0];
                const double y = (j - c[1]) * g.spacing[1] / semi_mm[1];
                const double z = (k - c[2]) * g.spacing[2] / semi_mm[2];
                if (x * x + y * y + z * z <= 1.0) out.push_back(g.linear(i, j, k));
            }
    return out;
}

}  // namespace testing
