#include "renal/volume.hpp"

#include "renal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace renal {

void VolumeGeometry::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (dims[a] < 1) {
            throw ValidationError("dimension " + std::to_string(a) + " must be >= 1, got " +
                                  std::to_string(dims[a]));
        }
        if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) {
            throw ValidationError("spacing " + std::to_string(a) + " must be positive and finite");
        }
    }
}

void require_same_geometry(const VolumeGeometry& a, const VolumeGeometry& b, const char* what) {
    if (a == b) return;
    std::ostringstream os;
    os << what << ": geometry mismatch (" << a.dims[0] << "x" << a.dims[1] << "x" << a.dims[2] << " vs "
       << b.dims[0] << "x" << b.dims[1] << "x" << b.dims[2] << ")";
    if (a.dims == b.dims) os << " in spacing";
    throw ValidationError(os.str());
}

const char* to_string(SampleKind kind) noexcept {
    switch (kind) {
        case SampleKind::uint8: return "uint8";
        case SampleKind::int16: return "int16";
        case SampleKind::float32: return "float32";
    }
    return "unknown";
}

SampleKind RawVolume::kind() const noexcept {
    return static_cast<SampleKind>(samples.index());
}

std::size_t RawVolume::sample_count() const noexcept {
    return std::visit([](const auto& v) { return v.size(); }, samples);
}

std::size_t BinaryMask::count() const noexcept {
    return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

namespace {

void require_sample_count(const RawVolume& raw) {
    if (raw.sample_count() != raw.geometry.voxel_count()) {
        throw ValidationError("sample count " + std::to_string(raw.sample_count()) + " does not match geometry (" +
                              std::to_string(raw.geometry.voxel_count()) + " voxels)");
    }
}

template <typename T>
std::string describe(T value) {
    std::ostringstream os;
    os.precision(9);
    os << +value;
    return os.str();
}

}  // namespace

LabelVolume as_label_volume(const RawVolume& raw) {
    require_sample_count(raw);
    LabelVolume out{raw.geometry, std::vector<std::uint8_t>(raw.sample_count())};
    std::visit(
        [&](const auto& samples) {
            for (std::size_t n = 0; n < samples.size(); ++n) {
                const auto s = samples[n];
                if (!(s == 0 || s == 1 || s == 2)) {
                    throw ValidationError("label volume: voxel " + std::to_string(n) + " has value " + describe(s) +
                                          ", expected 0, 1 or 2");
                }
                out.labels[n] = static_cast<std::uint8_t>(s);
            }
        },
        raw.samples);
    return out;
}

ProbabilityVolume as_probability_volume(const RawVolume& raw) {
    require_sample_count(raw);
    ProbabilityVolume out{raw.geometry, std::vector<float>(raw.sample_count())};
    std::visit(
        [&](const auto& samples) {
            for (std::size_t n = 0; n < samples.size(); ++n) {
                const auto s = samples[n];
                if (!(s >= 0 && s <= 1)) {
                    throw ValidationError("probability volume: voxel " + std::to_string(n) + " has value " +
                                          describe(s) + ", expected [0, 1]");
                }
                out.probs[n] = static_cast<float>(s);
            }
        },
        raw.samples);
    return out;
}

ImageVolume as_image_volume(const RawVolume& raw) {
    require_sample_count(raw);
    ImageVolume out{raw.geometry, {}};
    std::visit([&](const auto& samples) { out.values.assign(samples.begin(), samples.end()); }, raw.samples);
    return out;
}

RawVolume to_raw(const LabelVolume& v) { return {v.geometry, v.labels}; }
RawVolume to_raw(const BinaryMask& m) { return {m.geometry, m.bits}; }
RawVolume to_raw(const ProbabilityVolume& v) { return {v.geometry, v.probs}; }

BinaryMask kidney_tumor_mask(const LabelVolume& v) {
    BinaryMask m(v.geometry);
    for (std::size_t n = 0; n < v.labels.size(); ++n) m.bits[n] = v.labels[n] != 0 ? 1 : 0;
    return m;
}

BinaryMask tumor_mask(const LabelVolume& v) {
    BinaryMask m(v.geometry);
    for (std::size_t n = 0; n < v.labels.size(); ++n) m.bits[n] = v.labels[n] == 2 ? 1 : 0;
    return m;
}

}  // namespace renal
