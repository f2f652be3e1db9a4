#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "leangate/binary_io.hpp"
#include "leangate/errors.hpp"
#include "leangate/geometry.hpp"

namespace leangate {

struct PixelCoord {
  int row = 0;
  int col = 0;
  auto operator<=>(const PixelCoord&) const = default;
};

/// Dense row-major H x W grid.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, const T& fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int r, int c) const { return static_cast<std::size_t>(r) * cols_ + c; }
  std::size_t index(PixelCoord p) const { return index(p.row, p.col); }
  PixelCoord coord(std::size_t idx) const {
    return {static_cast<int>(idx / cols_), static_cast<int>(idx % cols_)};
  }
  bool contains(PixelCoord p) const {
    return p.row >= 0 && p.col >= 0 && p.row < rows_ && p.col < cols_;
  }

  T& operator()(int r, int c) { return data_[index(r, c)]; }
  const T& operator()(int r, int c) const { return data_[index(r, c)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  bool operator==(const Grid&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

/// One frame as the teacher sees it: pointmap P, confidence C in [0,1],
/// quality Q >= 0 and the set of pixels with defined geometry.
struct PointMapFrame {
  std::uint32_t id = 0;
  Grid<Vec3> points;
  Grid<double> confidence;
  Grid<double> quality;
  Grid<std::uint8_t> valid;

  PointMapFrame() = default;
  PointMapFrame(std::uint32_t frame_id, int rows, int cols)
      : id(frame_id),
        points(rows, cols, Vec3::Zero()),
        confidence(rows, cols, 0.0),
        quality(rows, cols, 0.0),
        valid(rows, cols, 0) {}

  int rows() const { return points.rows(); }
  int cols() const { return points.cols(); }
  std::size_t pixel_count() const { return points.size(); }
  bool is_valid(std::size_t idx) const { return valid[idx] != 0; }

  std::size_t valid_count() const {
    std::size_t n = 0;
    for (auto v : valid) n += v != 0;
    return n;
  }

  bool same_resolution(const PointMapFrame& other) const {
    return rows() == other.rows() && cols() == other.cols();
  }

  /// Checks the frame invariants; throws DataError on violation.
  void validate() const {
    if (rows() < 1 || cols() < 1) throw DataError("pointmap frame: empty grid");
    if (confidence.rows() != rows() || confidence.cols() != cols() || quality.rows() != rows() ||
        quality.cols() != cols() || valid.rows() != rows() || valid.cols() != cols()) {
      throw DataError("pointmap frame: channel size mismatch");
    }
    for (std::size_t i = 0; i < pixel_count(); ++i) {
      if (!(confidence[i] >= 0.0 && confidence[i] <= 1.0)) {
        throw DataError("pointmap frame: confidence outside [0,1]");
      }
      if (!(quality[i] >= 0.0)) throw DataError("pointmap frame: negative quality");
      if (valid[i] && !points[i].allFinite()) {
        throw DataError("pointmap frame: non-finite point at valid pixel");
      }
    }
  }

  /// Copy with every point mapped through `pose` (validity and maps unchanged).
  PointMapFrame transformed(const SE3Pose& pose) const {
    PointMapFrame out = *this;
    for (std::size_t i = 0; i < pixel_count(); ++i) {
      if (valid[i]) out.points[i] = pose.apply(points[i]);
    }
    return out;
  }
};

// PMAP v1: "PMAP", u32 H, u32 W, then H*W records of
// (f32 x, f32 y, f32 z, f32 c, f32 q, u8 valid), row-major, little-endian.

inline void write_pmap(std::ostream& os, const PointMapFrame& frame) {
  io::write_magic(os, "PMAP");
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(frame.rows()));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(frame.cols()));
  for (std::size_t i = 0; i < frame.pixel_count(); ++i) {
    const Vec3& p = frame.points[i];
    io::write_le<float>(os, static_cast<float>(p.x()));
    io::write_le<float>(os, static_cast<float>(p.y()));
    io::write_le<float>(os, static_cast<float>(p.z()));
    io::write_le<float>(os, static_cast<float>(frame.confidence[i]));
    io::write_le<float>(os, static_cast<float>(frame.quality[i]));
    io::write_le<std::uint8_t>(os, frame.valid[i] ? 1 : 0);
  }
}

inline PointMapFrame read_pmap(std::istream& is, std::uint32_t frame_id = 0) {
  io::expect_magic(is, "PMAP", "PMAP");
  const auto rows = io::read_le<std::uint32_t>(is, "PMAP");
  const auto cols = io::read_le<std::uint32_t>(is, "PMAP");
  if (rows == 0 || cols == 0 || rows > 65536 || cols > 65536) {
    throw DataError("PMAP: invalid dimensions");
  }
  PointMapFrame frame(frame_id, static_cast<int>(rows), static_cast<int>(cols));
  for (std::size_t i = 0; i < frame.pixel_count(); ++i) {
    const float x = io::read_le<float>(is, "PMAP");
    const float y = io::read_le<float>(is, "PMAP");
    const float z = io::read_le<float>(is, "PMAP");
    frame.points[i] = Vec3(x, y, z);
    frame.confidence[i] = io::read_le<float>(is, "PMAP");
    frame.quality[i] = io::read_le<float>(is, "PMAP");
    frame.valid[i] = io::read_le<std::uint8_t>(is, "PMAP") != 0 ? 1 : 0;
  }
  frame.validate();
  return frame;
}

inline void save_pmap(const std::filesystem::path& path, const PointMapFrame& frame) {
  std::ostringstream os(std::ios::binary);
  write_pmap(os, frame);
  io::write_file_atomic(path, os.str());
}

inline PointMapFrame load_pmap(const std::filesystem::path& path, std::uint32_t frame_id = 0) {
  std::istringstream is(io::read_file(path), std::ios::binary);
  return read_pmap(is, frame_id);
}

}  // namespace leangate
