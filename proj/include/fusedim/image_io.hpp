#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "fusedim/error.hpp"
#include "fusedim/image.hpp"

namespace fusedim {

namespace detail {

// netpbm header token: skips whitespace and '#' comments
inline std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
    } else if (!std::isspace(ch)) {
      tok.push_back(static_cast<char>(ch));
      while ((ch = in.peek()) != EOF && !std::isspace(ch) && ch != '#')
        tok.push_back(static_cast<char>(in.get()));
      return tok;
    }
  }
  throw IoFailure("unexpected end of PNM header");
}

inline long pnm_number(std::istream& in) {
  const std::string tok = pnm_token(in);
  try {
    return std::stol(tok);
  } catch (...) {
    throw IoFailure("bad PNM header field '" + tok + "'");
  }
}

}  // namespace detail

/// Binary PGM (P5). 16-bit samples are big-endian per the netpbm convention.
inline void save_pgm(const std::filesystem::path& path, const Image8& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << "P5\n" << img.cols() << " " << img.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data().data()),
            static_cast<std::streamsize>(img.data().size()));
  if (!out) throw IoFailure("write failed: " + path.string());
}

inline void save_pgm(const std::filesystem::path& path, const Image16& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << "P5\n" << img.cols() << " " << img.rows() << "\n65535\n";
  std::string buf(img.data().size() * 2, '\0');
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    buf[2 * i] = static_cast<char>(img.data()[i] >> 8);
    buf[2 * i + 1] = static_cast<char>(img.data()[i] & 0xFF);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoFailure("write failed: " + path.string());
}

inline int pgm_maxval(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  if (detail::pnm_token(in) != "P5") throw IoFailure(path.string() + ": not a binary PGM");
  detail::pnm_number(in);
  detail::pnm_number(in);
  return static_cast<int>(detail::pnm_number(in));
}

inline Image8 load_pgm8(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  if (detail::pnm_token(in) != "P5") throw IoFailure(path.string() + ": not a binary PGM");
  const long cols = detail::pnm_number(in);
  const long rows = detail::pnm_number(in);
  const long maxval = detail::pnm_number(in);
  if (maxval < 1 || maxval > 255) throw IoFailure(path.string() + ": not an 8-bit PGM");
  in.get();  // single whitespace before raster
  std::vector<std::uint8_t> data(static_cast<std::size_t>(rows) * cols);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (in.gcount() != static_cast<std::streamsize>(data.size()))
    throw IoFailure(path.string() + ": truncated raster");
  return Image8(static_cast<int>(rows), static_cast<int>(cols), std::move(data));
}

inline Image16 load_pgm16(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  if (detail::pnm_token(in) != "P5") throw IoFailure(path.string() + ": not a binary PGM");
  const long cols = detail::pnm_number(in);
  const long rows = detail::pnm_number(in);
  const long maxval = detail::pnm_number(in);
  if (maxval < 256 || maxval > 65535) throw IoFailure(path.string() + ": not a 16-bit PGM");
  in.get();
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  std::string buf(n * 2, '\0');
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw IoFailure(path.string() + ": truncated raster");
  std::vector<std::uint16_t> data(n);
  for (std::size_t i = 0; i < n; ++i)
    data[i] = static_cast<std::uint16_t>((static_cast<unsigned char>(buf[2 * i]) << 8) |
                                         static_cast<unsigned char>(buf[2 * i + 1]));
  return Image16(static_cast<int>(rows), static_cast<int>(cols), std::move(data));
}

/// PPM (P6) read, converted to luma via integer (299R + 587G + 114B)/1000.
inline Image8 load_ppm_luma(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  if (detail::pnm_token(in) != "P6") throw IoFailure(path.string() + ": not a binary PPM");
  const long cols = detail::pnm_number(in);
  const long rows = detail::pnm_number(in);
  const long maxval = detail::pnm_number(in);
  if (maxval != 255) throw IoFailure(path.string() + ": only 8-bit PPM supported");
  in.get();
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  std::string buf(n * 3, '\0');
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw IoFailure(path.string() + ": truncated raster");
  std::vector<std::uint8_t> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned r = static_cast<unsigned char>(buf[3 * i]);
    const unsigned g = static_cast<unsigned char>(buf[3 * i + 1]);
    const unsigned b = static_cast<unsigned char>(buf[3 * i + 2]);
    data[i] = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b) / 1000);
  }
  return Image8(static_cast<int>(rows), static_cast<int>(cols), std::move(data));
}

}  // namespace fusedim
