#pragma once

#include "renal/volume.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace renal {

/// Size of the NIfTI-1 header block.
inline constexpr std::size_t kNiftiHeaderSize = 348;
/// Header plus the four-byte extension flag; where written payloads start.
inline constexpr std::size_t kNiftiDataOffset = 352;

/// NIfTI-1 datatype codes for the supported sample kinds.
enum NiftiDatatype : std::int16_t {
    kDtUint8 = 2,
    kDtInt16 = 4,
    kDtFloat32 = 16,
};

enum class Compression { automatic, none, gzip };

/// Reads a single-file NIfTI-1 volume ("n+1"), gzip-compressed or not.
///
/// Compression is detected from the leading bytes 0x1f 0x8b. Byte order is
/// taken from the sizeof_hdr field. Only 3D uint8/int16/float32 data is
/// accepted; the orientation fields are ignored.
///
/// Throws IoError, FormatError, UnsupportedError or CorruptionError.
[[nodiscard]] RawVolume read_volume(const std::filesystem::path& path);

/// Writes little-endian NIfTI-1 with the payload at offset 352. With
/// Compression::automatic the output is gzipped iff the name ends in ".gz".
void write_volume(const RawVolume& volume, const std::filesystem::path& path,
                  Compression compression = Compression::automatic);

/// In-memory decoding of an uncompressed NIfTI-1 image.
[[nodiscard]] RawVolume decode_nifti(std::span<const std::byte> bytes);
[[nodiscard]] std::vector<std::byte> encode_nifti(const RawVolume& volume);

[[nodiscard]] bool is_gzip(std::span<const std::byte> bytes) noexcept;
[[nodiscard]] std::vector<std::byte> gzip_compress(std::span<const std::byte> bytes);
/// Throws CorruptionError on a truncated or damaged stream.
[[nodiscard]] std::vector<std::byte> gzip_decompress(std::span<const std::byte> bytes);

[[nodiscard]] std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

}  // namespace renal
