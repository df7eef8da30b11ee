#include "monodtf/tensor_blob.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace monodtf {

namespace {

constexpr std::size_t kMaxRank = 64;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace

std::vector<std::uint8_t> encode_blob(const Tensor& tensor) {
  require_finite(tensor.data(), "tensor");
  if (tensor.rank() > kMaxRank) throw Error(ErrorCode::DimOverflow, "tensor rank exceeds 64");
  std::vector<std::uint8_t> out;
  out.reserve(8 + 4 * tensor.rank() + 4 * tensor.size());
  out.insert(out.end(), std::begin(kBlobMagic), std::end(kBlobMagic));
  put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
  for (auto d : tensor.shape()) {
    if (d > std::numeric_limits<std::uint32_t>::max()) throw Error(ErrorCode::DimOverflow, "dimension exceeds u32");
    put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (float v : tensor.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_blob(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kBlobMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, "missing DTF1 magic");
  }
  if (bytes.size() < 8) throw Error(ErrorCode::TruncatedPayload, "header ends before rank field");
  const std::uint32_t rank = get_u32(bytes.data() + 4);
  if (rank > kMaxRank) throw Error(ErrorCode::DimOverflow, "rank exceeds 64");
  const std::size_t header = 8 + 4 * static_cast<std::size_t>(rank);
  if (bytes.size() < header) throw Error(ErrorCode::TruncatedPayload, "header ends before dims");

  Tensor::Shape shape(rank);
  std::size_t count = 1;
  for (std::uint32_t a = 0; a < rank; ++a) {
    shape[a] = get_u32(bytes.data() + 8 + 4 * a);
    if (shape[a] != 0 && count > std::numeric_limits<std::size_t>::max() / 4 / shape[a]) {
      throw Error(ErrorCode::DimOverflow, "element count overflows");
    }
    count *= shape[a];
  }
  const std::size_t payload = bytes.size() - header;
  if (payload != count * 4) {
    throw Error(ErrorCode::TruncatedPayload, "payload holds " + std::to_string(payload) + " bytes, expected " +
                                                 std::to_string(count * 4));
  }
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) data[i] = std::bit_cast<float>(get_u32(bytes.data() + header + 4 * i));
  return Tensor(std::move(shape), std::move(data));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoError, "failed reading " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

void blob_write(const Tensor& tensor, const std::filesystem::path& path) {
  write_file_bytes(path, encode_blob(tensor));
}

Tensor blob_read(const std::filesystem::path& path) { return decode_blob(read_file_bytes(path)); }

}  // namespace monodtf
