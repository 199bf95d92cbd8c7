#ifndef TREECUT_PNM_HPP
#define TREECUT_PNM_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "treecut/errors.hpp"
#include "treecut/image.hpp"

namespace treecut {

namespace detail {

// Reads the next PNM header token, skipping whitespace and # comments.
inline std::string next_pnm_token(std::istream& in, const std::string& path) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) continue;
    tok.push_back(static_cast<char>(c));
    while ((c = in.peek()) != EOF && !std::isspace(c) && c != '#')
      tok.push_back(static_cast<char>(in.get()));
    return tok;
  }
  throw ValidationError(path + ": truncated PNM header");
}

inline int next_pnm_int(std::istream& in, const std::string& path) {
  const std::string tok = next_pnm_token(in, path);
  try {
    std::size_t pos = 0;
    const int v = std::stoi(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(path + ": malformed PNM header field '" + tok + "'");
  }
}

}  // namespace detail

// Binary PPM (P6), 8 bits per channel; channels are scaled to [0,1] as v/255.
inline Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  if (detail::next_pnm_token(in, path) != "P6")
    throw ValidationError(path + ": not a binary PPM (expected P6)");
  Image img;
  img.width = detail::next_pnm_int(in, path);
  img.height = detail::next_pnm_int(in, path);
  const int maxval = detail::next_pnm_int(in, path);
  if (img.width < 1 || img.height < 1)
    throw ValidationError(path + ": non-positive PPM dimensions");
  if (maxval != 255)
    throw ValidationError(path + ": unsupported PPM maxval " + std::to_string(maxval));
  in.get();  // single whitespace separating header from raster
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  std::vector<unsigned char> raw(n * 3);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw ValidationError(path + ": truncated PPM raster");
  img.pixels.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    img.pixels[i] = {raw[3 * i] / 255.0, raw[3 * i + 1] / 255.0, raw[3 * i + 2] / 255.0};
  return img;
}

inline void write_ppm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw;
  raw.reserve(img.pixels.size() * 3);
  for (const Color& c : img.pixels)
    for (double v : c) {
      const double clamped = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
      raw.push_back(static_cast<unsigned char>(std::lround(clamped * 255.0)));
    }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError(path + ": write failed");
}

struct GrayMap {
  int width = 0;
  int height = 0;
  std::vector<int> values;
};

// 16-bit PGM (P5, big-endian samples); gray value = label id.
inline GrayMap read_pgm16(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  if (detail::next_pnm_token(in, path) != "P5")
    throw ValidationError(path + ": not a binary PGM (expected P5)");
  GrayMap map;
  map.width = detail::next_pnm_int(in, path);
  map.height = detail::next_pnm_int(in, path);
  const int maxval = detail::next_pnm_int(in, path);
  if (map.width < 1 || map.height < 1)
    throw ValidationError(path + ": non-positive PGM dimensions");
  if (maxval < 1 || maxval > 65535)
    throw ValidationError(path + ": unsupported PGM maxval " + std::to_string(maxval));
  in.get();
  const std::size_t n = static_cast<std::size_t>(map.width) * map.height;
  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(n * bytes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw ValidationError(path + ": truncated PGM raster");
  map.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    map.values[i] = bytes == 2 ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
  return map;
}

inline void write_pgm16(const std::string& path, int width, int height,
                        std::span<const int> values) {
  if (values.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("write_pgm16: value array does not match dimensions");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << "P5\n" << width << " " << height << "\n65535\n";
  std::vector<unsigned char> raw;
  raw.reserve(values.size() * 2);
  for (int v : values) {
    if (v < 0 || v > 65535)
      throw std::invalid_argument("write_pgm16: label " + std::to_string(v) +
                                  " outside 0..65535");
    raw.push_back(static_cast<unsigned char>(v >> 8));
    raw.push_back(static_cast<unsigned char>(v & 0xff));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError(path + ": write failed");
}

inline void write_superpixels(const std::string& path, const SuperpixelMap& sp) {
  write_pgm16(path, sp.width, sp.height, sp.labels);
}

inline void write_segmentation(const std::string& path, const Segmentation& seg) {
  write_pgm16(path, seg.width, seg.height, seg.labels);
}

inline Segmentation read_segmentation(const std::string& path) {
  const GrayMap map = read_pgm16(path);
  return Segmentation::from_labels(map.width, map.height, map.values);
}

}  // namespace treecut

#endif
