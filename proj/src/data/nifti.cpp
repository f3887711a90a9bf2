#include "tabnet/data/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>

#include "tabnet/error.hpp"

namespace tabnet::data {
namespace {

constexpr int kHeaderSize = 348;
constexpr int kVoxOffset = 352;

// Field offsets in the NIfTI-1 header.
constexpr int kOffDim = 40;
constexpr int kOffDatatype = 70;
constexpr int kOffBitpix = 72;
constexpr int kOffPixdim = 76;
constexpr int kOffVoxOffset = 108;
constexpr int kOffSclSlope = 112;
constexpr int kOffSclInter = 116;
constexpr int kOffQform = 252;
constexpr int kOffMagic = 344;

std::vector<unsigned char> read_all(const std::string& path) {
  if (!std::filesystem::exists(path)) throw ParseError("NIfTI file not found: " + path);
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) throw ParseError("cannot open " + path);
  std::unique_ptr<gzFile_s, int (*)(gzFile)> guard(f, gzclose);
  std::vector<unsigned char> out;
  unsigned char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) out.insert(out.end(), buf, buf + n);
  if (n < 0) throw ParseError("corrupt compressed stream in " + path);
  return out;
}

template <typename T>
T get(const std::vector<unsigned char>& b, std::size_t off, bool swap) {
  T v;
  unsigned char tmp[sizeof(T)];
  std::memcpy(tmp, b.data() + off, sizeof(T));
  if (swap) std::reverse(tmp, tmp + sizeof(T));
  std::memcpy(&v, tmp, sizeof(T));
  return v;
}

template <typename T>
void put(std::vector<unsigned char>& b, std::size_t off, T v) {
  std::memcpy(b.data() + off, &v, sizeof(T));
}

int bytes_per_voxel(NiftiType t) {
  switch (t) {
    case NiftiType::kUint8:
    case NiftiType::kInt8: return 1;
    case NiftiType::kInt16:
    case NiftiType::kUint16: return 2;
    case NiftiType::kInt32:
    case NiftiType::kFloat32: return 4;
    case NiftiType::kFloat64: return 8;
  }
  return 0;
}

bool known_type(std::int16_t code) {
  switch (code) {
    case 2: case 4: case 8: case 16: case 64: case 256: case 512: return true;
    default: return false;
  }
}

double decode(const std::vector<unsigned char>& b, std::size_t off, NiftiType t, bool swap) {
  switch (t) {
    case NiftiType::kUint8: return b[off];
    case NiftiType::kInt8: return static_cast<std::int8_t>(b[off]);
    case NiftiType::kInt16: return get<std::int16_t>(b, off, swap);
    case NiftiType::kUint16: return get<std::uint16_t>(b, off, swap);
    case NiftiType::kInt32: return get<std::int32_t>(b, off, swap);
    case NiftiType::kFloat32: return get<float>(b, off, swap);
    case NiftiType::kFloat64: return get<double>(b, off, swap);
  }
  return 0.0;
}

void encode(std::vector<unsigned char>& b, std::size_t off, NiftiType t, double v) {
  switch (t) {
    case NiftiType::kUint8: b[off] = static_cast<unsigned char>(std::lround(v)); break;
    case NiftiType::kInt8: b[off] = static_cast<unsigned char>(static_cast<std::int8_t>(std::lround(v))); break;
    case NiftiType::kInt16: put(b, off, static_cast<std::int16_t>(std::lround(v))); break;
    case NiftiType::kUint16: put(b, off, static_cast<std::uint16_t>(std::lround(v))); break;
    case NiftiType::kInt32: put(b, off, static_cast<std::int32_t>(std::lround(v))); break;
    case NiftiType::kFloat32: put(b, off, static_cast<float>(v)); break;
    case NiftiType::kFloat64: put(b, off, v); break;
  }
}

}  // namespace

std::string Volume::shape_str() const {
  return std::to_string(nx) + "x" + std::to_string(ny) + "x" + std::to_string(nz);
}

Volume read_nifti(const std::string& path) {
  const auto b = read_all(path);
  if (b.size() < kHeaderSize) throw ParseError(path + ": truncated NIfTI header");
  bool swap = false;
  if (get<std::int32_t>(b, 0, false) != kHeaderSize) {
    if (get<std::int32_t>(b, 0, true) != kHeaderSize) throw ParseError(path + ": not a NIfTI-1 file");
    swap = true;
  }
  if (std::memcmp(b.data() + kOffMagic, "n+1", 4) != 0)
    throw ParseError(path + ": only single-file NIfTI-1 (n+1) is supported");
  std::int16_t dim[8];
  for (int i = 0; i < 8; ++i) dim[i] = get<std::int16_t>(b, kOffDim + 2 * i, swap);
  if (dim[0] < 2 || dim[0] > 7) throw ParseError(path + ": bad dimension count " + std::to_string(dim[0]));
  for (int i = 4; i <= dim[0]; ++i)
    if (dim[i] != 1) throw ParseError(path + ": only 2-D/3-D volumes are supported");
  const auto code = get<std::int16_t>(b, kOffDatatype, swap);
  if (!known_type(code)) throw ParseError(path + ": unsupported datatype " + std::to_string(code));
  const auto type = static_cast<NiftiType>(code);
  Volume v;
  v.nx = dim[1];
  v.ny = dim[2];
  v.nz = dim[0] >= 3 ? dim[3] : 1;
  if (v.nx < 1 || v.ny < 1 || v.nz < 1) throw ParseError(path + ": empty volume");
  for (int i = 0; i < 3; ++i) v.spacing[i] = get<float>(b, kOffPixdim + 4 * (i + 1), swap);
  const auto offset = static_cast<std::size_t>(get<float>(b, kOffVoxOffset, swap));
  double slope = get<float>(b, kOffSclSlope, swap);
  const double inter = get<float>(b, kOffSclInter, swap);
  if (slope == 0.0 || !std::isfinite(slope)) slope = 1.0;
  const std::size_t count = static_cast<std::size_t>(v.nx) * v.ny * v.nz;
  const int bpv = bytes_per_voxel(type);
  if (offset < kHeaderSize || b.size() < offset + count * bpv)
    throw ParseError(path + ": voxel data truncated (" + v.shape_str() + ")");
  v.data.resize(count);
  for (std::size_t q = 0; q < count; ++q)
    v.data[q] = decode(b, offset + q * bpv, type, swap) * slope + (std::isfinite(inter) ? inter : 0.0);
  return v;
}

void write_nifti(const std::string& path, const Volume& volume, NiftiType type) {
  const std::size_t count = static_cast<std::size_t>(volume.nx) * volume.ny * volume.nz;
  if (volume.data.size() != count) throw ShapeMismatch("write_nifti: data size does not match " + volume.shape_str());
  const int bpv = bytes_per_voxel(type);
  std::vector<unsigned char> b(kVoxOffset + count * bpv, 0);
  put<std::int32_t>(b, 0, kHeaderSize);
  const std::int16_t dim[8] = {3, static_cast<std::int16_t>(volume.nx), static_cast<std::int16_t>(volume.ny),
                               static_cast<std::int16_t>(volume.nz), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) put(b, kOffDim + 2 * i, dim[i]);
  put(b, kOffDatatype, static_cast<std::int16_t>(type));
  put(b, kOffBitpix, static_cast<std::int16_t>(8 * bpv));
  const float pixdim[8] = {1.0f, volume.spacing[0], volume.spacing[1], volume.spacing[2], 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) put(b, kOffPixdim + 4 * i, pixdim[i]);
  put(b, kOffVoxOffset, static_cast<float>(kVoxOffset));
  put(b, kOffSclSlope, 1.0f);
  put(b, kOffSclInter, 0.0f);
  put<std::int16_t>(b, kOffQform, 0);
  std::memcpy(b.data() + kOffMagic, "n+1", 4);
  for (std::size_t q = 0; q < count; ++q) encode(b, kVoxOffset + q * bpv, type, volume.data[q]);

  const bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  if (gz) {
    // gzopen writes no file name or timestamp into the gzip header.
    gzFile f = gzopen(path.c_str(), "wb6");
    if (f == nullptr) throw Error("cannot write " + path);
    const int written = gzwrite(f, b.data(), static_cast<unsigned>(b.size()));
    if (gzclose(f) != Z_OK || written != static_cast<int>(b.size())) throw Error("failed writing " + path);
  } else {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    if (!out) throw Error("failed writing " + path);
  }
}

}  // namespace tabnet::data
