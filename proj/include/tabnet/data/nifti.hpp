#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace tabnet::data {

/// On-disk voxel types we read and write.
enum class NiftiType : std::int16_t {
  kUint8 = 2,
  kInt16 = 4,
  kInt32 = 8,
  kFloat32 = 16,
  kFloat64 = 64,
  kInt8 = 256,
  kUint16 = 512,
};

/// A 3-D NIfTI-1 volume with x varying fastest. Voxel values are
/// stored as double after scl_slope/scl_inter have been applied.
struct Volume {
  int nx = 0;
  int ny = 0;
  int nz = 0;
  std::array<float, 3> spacing{1.0f, 1.0f, 1.0f};
  std::vector<double> data;

  double& at(int x, int y, int z) {
    return data[(static_cast<std::size_t>(z) * ny + y) * nx + x];
  }
  double at(int x, int y, int z) const {
    return data[(static_cast<std::size_t>(z) * ny + y) * nx + x];
  }
  bool same_geometry(const Volume& o) const { return nx == o.nx && ny == o.ny && nz == o.nz; }
  std::string shape_str() const;
};

/// Reads .nii or .nii.gz (gzip detected from content). 2-D files load
/// with nz = 1; a trailing time axis of length 1 is accepted. Throws
/// ParseError on malformed input.
Volume read_nifti(const std::string& path);

/// Writes single-file NIfTI-1; gzip when the path ends in ".gz".
/// Output bytes depend only on the volume and type.
void write_nifti(const std::string& path, const Volume& volume, NiftiType type);

}  // namespace tabnet::data
