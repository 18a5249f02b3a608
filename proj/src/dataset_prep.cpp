#include "renal/dataset_prep.hpp"

#include "renal/errors.hpp"
#include "renal/rng.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace renal {

CaseSplit split_cases(const std::vector<std::string>& case_ids, double test_fraction, std::uint64_t seed,
                      std::optional<std::size_t> test_count) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test fraction must lie in (0, 1), got " + std::to_string(test_fraction));
    }
    if (case_ids.empty()) throw ValidationError("cannot split an empty case list");
    std::unordered_set<std::string> seen;
    for (const auto& id : case_ids) {
        if (!seen.insert(id).second) throw ValidationError("duplicate case id '" + id + "'");
    }

    const std::size_t n = case_ids.size();
    const std::size_t n_test =
        test_count ? *test_count : static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    if (n_test > n) {
        throw ConfigError("test count " + std::to_string(n_test) + " exceeds case count " + std::to_string(n));
    }

    std::vector<std::string> shuffled = case_ids;
    Xoshiro256 rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_index(i + 1));
        std::swap(shuffled[i], shuffled[j]);
    }

    CaseSplit split;
    split.seed = seed;
    split.test_fraction = test_fraction;
    split.train_ids.assign(shuffled.begin(), shuffled.end() - static_cast<std::ptrdiff_t>(n_test));
    split.test_ids.assign(shuffled.end() - static_cast<std::ptrdiff_t>(n_test), shuffled.end());
    return split;
}

std::vector<SliceRecord> extract_slices(const std::string& case_id, const ImageVolume& image,
                                        const LabelVolume& labels) {
    require_same_geometry(image.geometry, labels.geometry, "extract_slices");
    const auto& g = labels.geometry;
    const auto nx = static_cast<std::size_t>(g.dims[0]);
    const auto ny = static_cast<std::size_t>(g.dims[1]);
    const std::size_t plane = nx * ny;

    std::vector<SliceRecord> records;
    records.reserve(static_cast<std::size_t>(g.dims[2]));
    for (std::int64_t z = 0; z < g.dims[2]; ++z) {
        const auto begin = static_cast<std::ptrdiff_t>(static_cast<std::size_t>(z) * plane);
        const auto end = begin + static_cast<std::ptrdiff_t>(plane);
        SliceRecord rec;
        rec.case_id = case_id;
        rec.slice_index = z;
        rec.image = ImageSlice(ny, nx, std::vector<float>(image.values.begin() + begin, image.values.begin() + end));
        rec.mask = LabelSlice(ny, nx,
                              std::vector<std::uint8_t>(labels.labels.begin() + begin, labels.labels.begin() + end));
        for (const auto label : rec.mask.values) {
            rec.has_kidney = rec.has_kidney || label == 1 || label == 2;
            rec.has_tumor = rec.has_tumor || label == 2;
        }
        records.push_back(std::move(rec));
    }
    return records;
}

LabelSlice remap_for_kidney_model(const LabelSlice& mask) {
    LabelSlice out(mask.height, mask.width);
    std::transform(mask.values.begin(), mask.values.end(), out.values.begin(),
                   [](std::uint8_t v) -> std::uint8_t { return v == 1 || v == 2 ? 1 : 0; });
    return out;
}

LabelSlice remap_for_tumor_model(const LabelSlice& mask) {
    LabelSlice out(mask.height, mask.width);
    std::transform(mask.values.begin(), mask.values.end(), out.values.begin(),
                   [](std::uint8_t v) -> std::uint8_t { return v == 2 ? 1 : 0; });
    return out;
}

void require_lower_half_height(std::size_t height) {
    if (height < 2) throw ValidationError("lower_half needs at least 2 rows, got " + std::to_string(height));
}

std::vector<SliceRecord> filter_positive(const std::vector<SliceRecord>& records, ModelTarget target) {
    std::vector<SliceRecord> out;
    for (const auto& rec : records) {
        const bool keep = target == ModelTarget::kidney_model ? rec.has_kidney : rec.has_tumor;
        if (keep) out.push_back(rec);
    }
    return out;
}

std::vector<SliceRecord> prepare_model_samples(const std::vector<SliceRecord>& records, ModelTarget target,
                                               LowerHalfMode mode, std::int64_t volume_depth) {
    std::vector<SliceRecord> out;
    for (auto rec : filter_positive(records, target)) {
        if (target == ModelTarget::kidney_model) {
            rec.image = resize_nearest(rec.image, kKidneyInputHeight, kKidneyInputWidth);
            rec.mask = resize_nearest(remap_for_kidney_model(rec.mask), kKidneyInputHeight, kKidneyInputWidth);
        } else if (mode == LowerHalfMode::rows) {
            rec.image = resize_nearest(lower_half(rec.image), kTumorInputHeight, kTumorInputWidth);
            rec.mask = resize_nearest(lower_half(remap_for_tumor_model(rec.mask)), kTumorInputHeight, kTumorInputWidth);
        } else {
            if (rec.slice_index < volume_depth / 2) continue;
            rec.image = resize_nearest(rec.image, kTumorInputHeight, kTumorInputWidth);
            rec.mask = resize_nearest(remap_for_tumor_model(rec.mask), kTumorInputHeight, kTumorInputWidth);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace renal
