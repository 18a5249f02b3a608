#pragma once

#include "renal/dataset_prep.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace renal {

/// Writes each record under `root/<case_id>/` as
///   z0007_image.raw  float32 little-endian, row-major
///   z0007_mask.raw   uint8, row-major
///   z0007.json       {case_id, z, height, width, sample_kind, mask_kind, flags}
/// Returns the sidecar paths in record order.
std::vector<std::filesystem::path> write_slice_store(const std::filesystem::path& root,
                                                     const std::vector<SliceRecord>& records);

/// Loads one record from its JSON sidecar.
[[nodiscard]] SliceRecord read_slice_record(const std::filesystem::path& sidecar);

/// Split file: {"seed", "test_fraction", "train_ids", "test_ids"}.
void write_split(const std::filesystem::path& path, const CaseSplit& split);
[[nodiscard]] CaseSplit read_split(const std::filesystem::path& path);
[[nodiscard]] std::string split_to_json(const CaseSplit& split);

}  // namespace renal
