#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "monodtf/core.hpp"

namespace monodtf {

/// TensorBlob layout, all little-endian:
///   "DTF1" | rank:u32 | dims:u32[rank] | payload:f32[prod(dims)] (row-major)
inline constexpr char kBlobMagic[4] = {'D', 'T', 'F', '1'};

std::vector<std::uint8_t> encode_blob(const Tensor& tensor);
Tensor decode_blob(std::span<const std::uint8_t> bytes);

void blob_write(const Tensor& tensor, const std::filesystem::path& path);
Tensor blob_read(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace monodtf
