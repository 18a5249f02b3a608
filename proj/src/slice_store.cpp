#include "renal/slice_store.hpp"

#include "renal/errors.hpp"
#include "renal/volume_io.hpp"

#include <json.hpp>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace renal {

namespace {

using nlohmann::json;

std::string slice_stem(std::int64_t z) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "z%04lld", static_cast<long long>(z));
    return buf;
}

std::vector<std::byte> float_payload(const std::vector<float>& values) {
    static_assert(std::endian::native == std::endian::little, "slice store assumes a little-endian host");
    std::vector<std::byte> out(values.size() * sizeof(float));
    std::memcpy(out.data(), values.data(), out.size());
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

json parse_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

}  // namespace

std::vector<std::filesystem::path> write_slice_store(const std::filesystem::path& root,
                                                     const std::vector<SliceRecord>& records) {
    std::vector<std::filesystem::path> sidecars;
    for (const auto& rec : records) {
        const auto dir = root / rec.case_id;
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

        const std::string stem = slice_stem(rec.slice_index);
        write_file(dir / (stem + "_image.raw"), float_payload(rec.image.values));
        write_file(dir / (stem + "_mask.raw"), std::as_bytes(std::span(rec.mask.values)));

        json meta = {
            {"case_id", rec.case_id},
            {"z", rec.slice_index},
            {"height", rec.image.height},
            {"width", rec.image.width},
            {"sample_kind", "float32"},
            {"mask_kind", "uint8"},
            {"flags", {{"has_kidney", rec.has_kidney}, {"has_tumor", rec.has_tumor}}},
            {"image_file", stem + "_image.raw"},
            {"mask_file", stem + "_mask.raw"},
        };
        const auto sidecar = dir / (stem + ".json");
        write_text(sidecar, meta.dump(2) + "\n");
        sidecars.push_back(sidecar);
    }
    return sidecars;
}

SliceRecord read_slice_record(const std::filesystem::path& sidecar) {
    const json meta = parse_json_file(sidecar);
    SliceRecord rec;
    try {
        rec.case_id = meta.at("case_id").get<std::string>();
        rec.slice_index = meta.at("z").get<std::int64_t>();
        const auto h = meta.at("height").get<std::size_t>();
        const auto w = meta.at("width").get<std::size_t>();
        rec.has_kidney = meta.at("flags").at("has_kidney").get<bool>();
        rec.has_tumor = meta.at("flags").at("has_tumor").get<bool>();

        const auto dir = sidecar.parent_path();
        const auto image_bytes = read_file(dir / meta.at("image_file").get<std::string>());
        const auto mask_bytes = read_file(dir / meta.at("mask_file").get<std::string>());
        if (image_bytes.size() != h * w * sizeof(float) || mask_bytes.size() != h * w) {
            throw CorruptionError(sidecar.string() + ": payload size does not match " + std::to_string(h) + "x" +
                                  std::to_string(w));
        }
        rec.image = ImageSlice(h, w);
        std::memcpy(rec.image.values.data(), image_bytes.data(), image_bytes.size());
        rec.mask = LabelSlice(h, w);
        std::memcpy(rec.mask.values.data(), mask_bytes.data(), mask_bytes.size());
    } catch (const json::exception& e) {
        throw ValidationError(sidecar.string() + ": " + e.what());
    }
    return rec;
}

std::string split_to_json(const CaseSplit& split) {
    const json doc = {
        {"seed", split.seed},
        {"test_fraction", split.test_fraction},
        {"train_ids", split.train_ids},
        {"test_ids", split.test_ids},
    };
    return doc.dump(2) + "\n";
}

void write_split(const std::filesystem::path& path, const CaseSplit& split) { write_text(path, split_to_json(split)); }

CaseSplit read_split(const std::filesystem::path& path) {
    const json doc = parse_json_file(path);
    CaseSplit split;
    try {
        split.seed = doc.at("seed").get<std::uint64_t>();
        split.test_fraction = doc.at("test_fraction").get<double>();
        split.train_ids = doc.at("train_ids").get<std::vector<std::string>>();
        split.test_ids = doc.at("test_ids").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return split;
}

}  // namespace renal
