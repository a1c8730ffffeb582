#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "jadce/types.hpp"

// Raw array containers: 64-bit floats, little-endian, row-major; complex
// arrays interleave (re, im) per entry. Manifests are JSON next to the blobs.

namespace jadce {

using json = nlohmann::ordered_json;

static_assert(std::endian::native == std::endian::little,
              "blob containers assume a little-endian host");

inline void write_f64_blob(const std::filesystem::path& path, const Mat& m) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for write: " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      f.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

inline Mat read_f64_blob(const std::filesystem::path& path, Eigen::Index rows,
                         Eigen::Index cols) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for read: " + path.string());
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      double v;
      f.read(reinterpret_cast<char*>(&v), sizeof(v));
      if (!f) throw std::runtime_error("short read: " + path.string());
      m(i, j) = v;
    }
  return m;
}

inline void write_cf64_blob(const std::filesystem::path& path, const CMat& m) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for write: " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double re = m(i, j).real(), im = m(i, j).imag();
      f.write(reinterpret_cast<const char*>(&re), sizeof(re));
      f.write(reinterpret_cast<const char*>(&im), sizeof(im));
    }
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

inline CMat read_cf64_blob(const std::filesystem::path& path, Eigen::Index rows,
                           Eigen::Index cols) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for read: " + path.string());
  CMat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      double re, im;
      f.read(reinterpret_cast<char*>(&re), sizeof(re));
      f.read(reinterpret_cast<char*>(&im), sizeof(im));
      if (!f) throw std::runtime_error("short read: " + path.string());
      m(i, j) = cplx(re, im);
    }
  return m;
}

// FNV-1a over the row-major f64 bytes of a matrix; used to key cached
// artifacts derived from a specific matrix.
inline uint64_t fnv1a_hash(const Mat& m) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      unsigned char bytes[sizeof(v)];
      std::memcpy(bytes, &v, sizeof(v));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
      }
    }
  return h;
}

inline std::string hash_hex(uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return s;
}

}  // namespace jadce
