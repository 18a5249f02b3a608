#pragma once

#include "renal/volume.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace renal {

/// Row-major 2D grid; row r of an axial slice is the y index, column c the x index.
template <typename T>
struct Grid2 {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<T> values;

    Grid2() = default;
    Grid2(std::size_t h, std::size_t w, T fill = T{}) : height(h), width(w), values(h * w, fill) {}
    Grid2(std::size_t h, std::size_t w, std::vector<T> v) : height(h), width(w), values(std::move(v)) {}

    [[nodiscard]] const T& at(std::size_t r, std::size_t c) const { return values[r * width + c]; }
    [[nodiscard]] T& at(std::size_t r, std::size_t c) { return values[r * width + c]; }

    friend bool operator==(const Grid2&, const Grid2&) = default;
};

using ImageSlice = Grid2<float>;
using LabelSlice = Grid2<std::uint8_t>;

struct CaseSplit {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    std::uint64_t seed = 0;
    double test_fraction = 0.1;
};

/// Shuffles `case_ids` (Fisher-Yates driven by Xoshiro256(seed)) and moves the
/// last round(test_fraction * n) ids to the test set. `test_count` overrides
/// the rounded count when given.
///
/// Throws ConfigError for a fraction outside (0, 1) or a count above n, and
/// ValidationError for empty or duplicated ids.
[[nodiscard]] CaseSplit split_cases(const std::vector<std::string>& case_ids, double test_fraction, std::uint64_t seed,
                                    std::optional<std::size_t> test_count = std::nullopt);

struct SliceRecord {
    std::string case_id;
    std::int64_t slice_index = 0;
    ImageSlice image;
    LabelSlice mask;
    bool has_kidney = false;
    bool has_tumor = false;
};

/// One record per axial index z, ascending. Throws ValidationError when the
/// image and label geometries differ.
[[nodiscard]] std::vector<SliceRecord> extract_slices(const std::string& case_id, const ImageVolume& image,
                                                      const LabelVolume& labels);

/// 1 where the label is kidney or tumor.
[[nodiscard]] LabelSlice remap_for_kidney_model(const LabelSlice& mask);
/// 1 where the label is tumor.
[[nodiscard]] LabelSlice remap_for_tumor_model(const LabelSlice& mask);

/// Nearest-neighbour resampling with the pixel-centre convention:
/// out(i, j) = in(floor((i + 0.5) * H / out_h), floor((j + 0.5) * W / out_w)).
template <typename T>
[[nodiscard]] Grid2<T> resize_nearest(const Grid2<T>& grid, std::size_t out_h, std::size_t out_w);

/// Rows floor(H/2) .. H-1. Throws ValidationError when H < 2.
template <typename T>
[[nodiscard]] Grid2<T> lower_half(const Grid2<T>& grid);

enum class ModelTarget { kidney_model, tumor_model };

[[nodiscard]] std::vector<SliceRecord> filter_positive(const std::vector<SliceRecord>& records, ModelTarget target);

enum class LowerHalfMode { rows, volume_z };

/// Input sizes of the two networks.
inline constexpr std::size_t kKidneyInputHeight = 256;
inline constexpr std::size_t kKidneyInputWidth = 256;
inline constexpr std::size_t kTumorInputHeight = 128;
inline constexpr std::size_t kTumorInputWidth = 256;

/// Full training-sample preparation for one model: positive filtering, label
/// remapping, cropping (tumor model) and resizing to the network input size.
///
/// In LowerHalfMode::volume_z the tumor model keeps slices with
/// z >= floor(nz / 2) and resizes the whole slice instead of cropping rows.
[[nodiscard]] std::vector<SliceRecord> prepare_model_samples(const std::vector<SliceRecord>& records,
                                                             ModelTarget target, LowerHalfMode mode,
                                                             std::int64_t volume_depth);

// -- template definitions ----------------------------------------------------

template <typename T>
Grid2<T> resize_nearest(const Grid2<T>& grid, std::size_t out_h, std::size_t out_w) {
    Grid2<T> out(out_h, out_w);
    for (std::size_t i = 0; i < out_h; ++i) {
        // (2i + 1) * H / (2 out_h) is floor((i + 0.5) * H / out_h) in exact integer arithmetic.
        const std::size_t src_r = ((2 * i + 1) * grid.height) / (2 * out_h);
        for (std::size_t j = 0; j < out_w; ++j) {
            const std::size_t src_c = ((2 * j + 1) * grid.width) / (2 * out_w);
            out.at(i, j) = grid.at(src_r, src_c);
        }
    }
    return out;
}

void require_lower_half_height(std::size_t height);

template <typename T>
Grid2<T> lower_half(const Grid2<T>& grid) {
    require_lower_half_height(grid.height);
    const std::size_t first = grid.height / 2;
    Grid2<T> out(grid.height - first, grid.width);
    std::copy(grid.values.begin() + static_cast<std::ptrdiff_t>(first * grid.width), grid.values.end(),
              out.values.begin());
    return out;
}

}  // namespace renal
