#include "renal/volume_io.hpp"

#include "renal/errors.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace renal {

namespace {

// Field offsets inside the 348-byte NIfTI-1 header.
constexpr std::size_t kOffSizeofHdr = 0;
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffXyztUnits = 123;
constexpr std::size_t kOffQformCode = 252;
constexpr std::size_t kOffSformCode = 254;
constexpr std::size_t kOffSrowX = 280;
constexpr std::size_t kOffMagic = 344;

constexpr char kMagic[4] = {'n', '+', '1', '\0'};

template <typename T>
T byteswap(T value) noexcept {
    auto bytes = std::bit_cast<std::array<std::byte, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
}

class HeaderReader {
public:
    HeaderReader(std::span<const std::byte> bytes, bool swap) : bytes_(bytes), swap_(swap) {}

    template <typename T>
    T get(std::size_t offset) const {
        T value;
        std::memcpy(&value, bytes_.data() + offset, sizeof(T));
        return swap_ ? byteswap(value) : value;
    }

private:
    std::span<const std::byte> bytes_;
    bool swap_;
};

template <typename T>
void put_le(std::vector<std::byte>& out, std::size_t offset, T value) {
    if constexpr (std::endian::native == std::endian::big) value = byteswap(value);
    std::memcpy(out.data() + offset, &value, sizeof(T));
}

std::size_t sample_size(SampleKind kind) {
    switch (kind) {
        case SampleKind::uint8: return 1;
        case SampleKind::int16: return 2;
        case SampleKind::float32: return 4;
    }
    return 0;
}

std::int16_t datatype_code(SampleKind kind) {
    switch (kind) {
        case SampleKind::uint8: return kDtUint8;
        case SampleKind::int16: return kDtInt16;
        case SampleKind::float32: return kDtFloat32;
    }
    return 0;
}

template <typename T>
std::vector<T> decode_samples(std::span<const std::byte> payload, std::size_t count, bool swap) {
    std::vector<T> out(count);
    std::memcpy(out.data(), payload.data(), count * sizeof(T));
    if (swap && sizeof(T) > 1) {
        for (auto& v : out) v = byteswap(v);
    }
    return out;
}

bool ends_with_gz(const std::filesystem::path& path) {
    const std::string name = path.filename().string();
    return name.size() >= 3 && name.compare(name.size() - 3, 3, ".gz") == 0;
}

}  // namespace

RawVolume decode_nifti(std::span<const std::byte> bytes) {
    if (bytes.size() < kNiftiHeaderSize) {
        throw CorruptionError("truncated NIfTI header: " + std::to_string(bytes.size()) + " of 348 bytes");
    }

    const bool native_big = std::endian::native == std::endian::big;
    bool swap = native_big;
    if (HeaderReader(bytes, swap).get<std::int32_t>(kOffSizeofHdr) != 348) {
        swap = !swap;
        if (HeaderReader(bytes, swap).get<std::int32_t>(kOffSizeofHdr) != 348) {
            throw FormatError("not a NIfTI-1 file (sizeof_hdr != 348)");
        }
    }
    if (std::memcmp(bytes.data() + kOffMagic, kMagic, 4) != 0) {
        throw FormatError("not a single-file NIfTI-1 image (magic is not \"n+1\")");
    }

    const HeaderReader h(bytes, swap);
    const auto ndim = h.get<std::int16_t>(kOffDim);
    if (ndim < 1 || ndim > 7) throw FormatError("invalid dim[0] = " + std::to_string(ndim));

    VolumeGeometry geometry;
    for (int a = 0; a < 7; ++a) {
        const std::int64_t extent = a < ndim ? h.get<std::int16_t>(kOffDim + 2 * (a + 1)) : 1;
        if (extent < 1) throw FormatError("invalid dim[" + std::to_string(a + 1) + "] = " + std::to_string(extent));
        if (a < 3) {
            geometry.dims[a] = extent;
        } else if (extent != 1) {
            throw UnsupportedError("only 3D volumes are supported (dim[" + std::to_string(a + 1) +
                                   "] = " + std::to_string(extent) + ")");
        }
    }
    for (int a = 0; a < 3; ++a) {
        const double s = a < ndim ? h.get<float>(kOffPixdim + 4 * (a + 1)) : 1.0f;
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw FormatError("invalid pixdim[" + std::to_string(a + 1) + "]");
        }
        geometry.spacing[a] = s;
    }

    SampleKind kind;
    switch (const auto code = h.get<std::int16_t>(kOffDatatype)) {
        case kDtUint8: kind = SampleKind::uint8; break;
        case kDtInt16: kind = SampleKind::int16; break;
        case kDtFloat32: kind = SampleKind::float32; break;
        default: throw UnsupportedError("unsupported NIfTI datatype code " + std::to_string(code));
    }

    const float vox_offset = h.get<float>(kOffVoxOffset);
    if (!(vox_offset >= static_cast<float>(kNiftiHeaderSize)) || vox_offset != std::floor(vox_offset) ||
        vox_offset > static_cast<float>(std::numeric_limits<std::int32_t>::max())) {
        throw FormatError("invalid vox_offset " + std::to_string(vox_offset));
    }
    const auto offset = static_cast<std::size_t>(vox_offset);
    const std::size_t count = geometry.voxel_count();
    const std::size_t need = count * sample_size(kind);
    if (bytes.size() < offset || bytes.size() - offset < need) {
        throw CorruptionError("truncated payload: expected " + std::to_string(need) + " bytes at offset " +
                              std::to_string(offset) + ", file has " + std::to_string(bytes.size()));
    }

    const auto payload = bytes.subspan(offset, need);
    RawVolume out{geometry, {}};
    switch (kind) {
        case SampleKind::uint8: out.samples = decode_samples<std::uint8_t>(payload, count, swap); break;
        case SampleKind::int16: out.samples = decode_samples<std::int16_t>(payload, count, swap); break;
        case SampleKind::float32: out.samples = decode_samples<float>(payload, count, swap); break;
    }
    return out;
}

std::vector<std::byte> encode_nifti(const RawVolume& volume) {
    volume.geometry.validate();
    for (auto d : volume.geometry.dims) {
        if (d > std::numeric_limits<std::int16_t>::max()) {
            throw UnsupportedError("dimension " + std::to_string(d) + " exceeds the NIfTI-1 limit");
        }
    }
    const std::size_t count = volume.geometry.voxel_count();
    if (volume.sample_count() != count) {
        throw ValidationError("sample count " + std::to_string(volume.sample_count()) + " does not match geometry (" +
                              std::to_string(count) + " voxels)");
    }
    const SampleKind kind = volume.kind();
    const std::size_t bytes_per = sample_size(kind);

    std::vector<std::byte> out(kNiftiDataOffset + count * bytes_per, std::byte{0});
    put_le<std::int32_t>(out, kOffSizeofHdr, 348);
    put_le<std::int16_t>(out, kOffDim, 3);
    for (int a = 0; a < 7; ++a) {
        put_le<std::int16_t>(out, kOffDim + 2 * (a + 1), a < 3 ? static_cast<std::int16_t>(volume.geometry.dims[a]) : 1);
    }
    put_le<std::int16_t>(out, kOffDatatype, datatype_code(kind));
    put_le<std::int16_t>(out, kOffBitpix, static_cast<std::int16_t>(8 * bytes_per));
    put_le<float>(out, kOffPixdim, 1.0f);
    for (int a = 0; a < 3; ++a) {
        put_le<float>(out, kOffPixdim + 4 * (a + 1), static_cast<float>(volume.geometry.spacing[a]));
    }
    put_le<float>(out, kOffVoxOffset, static_cast<float>(kNiftiDataOffset));
    put_le<float>(out, kOffSclSlope, 1.0f);
    out[kOffXyztUnits] = std::byte{2};  // millimetres
    put_le<std::int16_t>(out, kOffQformCode, 0);
    put_le<std::int16_t>(out, kOffSformCode, 1);
    for (int row = 0; row < 3; ++row) {
        put_le<float>(out, kOffSrowX + 16 * row + 4 * row, static_cast<float>(volume.geometry.spacing[row]));
    }
    std::memcpy(out.data() + kOffMagic, kMagic, 4);

    std::byte* payload = out.data() + kNiftiDataOffset;
    std::visit(
        [&](const auto& samples) {
            using T = typename std::decay_t<decltype(samples)>::value_type;
            for (std::size_t n = 0; n < samples.size(); ++n) {
                T v = samples[n];
                if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) v = byteswap(v);
                std::memcpy(payload + n * sizeof(T), &v, sizeof(T));
            }
        },
        volume.samples);
    return out;
}

bool is_gzip(std::span<const std::byte> bytes) noexcept {
    return bytes.size() >= 2 && bytes[0] == std::byte{0x1f} && bytes[1] == std::byte{0x8b};
}

std::vector<std::byte> gzip_compress(std::span<const std::byte> bytes) {
    z_stream zs{};
    // windowBits 15 + 16 selects the gzip wrapper; zlib writes mtime 0 so output is reproducible.
    if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
        throw IoError("deflateInit2 failed");
    }
    std::vector<std::byte> out(deflateBound(&zs, static_cast<uLong>(bytes.size())) + 32);
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<std::byte*>(bytes.data()));
    zs.avail_in = static_cast<uInt>(bytes.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    const auto written = zs.total_out;
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw IoError("gzip compression failed");
    out.resize(written);
    return out;
}

std::vector<std::byte> gzip_decompress(std::span<const std::byte> bytes) {
    std::vector<std::byte> out;
    std::vector<std::byte> chunk(1 << 16);
    std::size_t consumed = 0;
    // Concatenated gzip members decode to the concatenation of their contents.
    while (consumed < bytes.size()) {
        z_stream zs{};
        if (inflateInit2(&zs, 15 + 32) != Z_OK) throw CorruptionError("inflateInit2 failed");
        zs.next_in = reinterpret_cast<Bytef*>(const_cast<std::byte*>(bytes.data() + consumed));
        zs.avail_in = static_cast<uInt>(bytes.size() - consumed);
        int rc = Z_OK;
        while (rc != Z_STREAM_END) {
            zs.next_out = reinterpret_cast<Bytef*>(chunk.data());
            zs.avail_out = static_cast<uInt>(chunk.size());
            rc = inflate(&zs, Z_NO_FLUSH);
            if (rc != Z_OK && rc != Z_STREAM_END) {
                inflateEnd(&zs);
                throw CorruptionError(rc == Z_BUF_ERROR ? "truncated gzip stream" : "damaged gzip stream");
            }
            out.insert(out.end(), chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(chunk.size() - zs.avail_out));
            if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
                inflateEnd(&zs);
                throw CorruptionError("truncated gzip stream");
            }
        }
        consumed = bytes.size() - zs.avail_in;
        inflateEnd(&zs);
        if (consumed < bytes.size() && !is_gzip(bytes.subspan(consumed))) break;  // trailing padding
    }
    return out;
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    in.seekg(0, std::ios::end);
    const auto size = in.tellg();
    if (size < 0) throw IoError("cannot determine size of " + path.string());
    in.seekg(0, std::ios::beg);
    std::vector<std::byte> bytes(static_cast<std::size_t>(size));
    if (!in.read(reinterpret_cast<char*>(bytes.data()), size)) throw IoError("failed reading " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

RawVolume read_volume(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    if (is_gzip(bytes)) return decode_nifti(gzip_decompress(bytes));
    return decode_nifti(bytes);
}

void write_volume(const RawVolume& volume, const std::filesystem::path& path, Compression compression) {
    const auto encoded = encode_nifti(volume);
    const bool gz = compression == Compression::gzip || (compression == Compression::automatic && ends_with_gz(path));
    if (gz) {
        write_file(path, gzip_compress(encoded));
    } else {
        write_file(path, encoded);
    }
}

}  // namespace renal
