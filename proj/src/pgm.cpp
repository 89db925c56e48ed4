#include "noisylab/pgm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace noisylab {
namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& is, const std::string& source) {
  std::string tok;
  int ch;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      while ((ch = is.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) {
        return tok;
      }
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  if (tok.empty()) {
    throw DataError(source + ": truncated PGM header");
  }
  return tok;
}

int header_int(std::istream& is, const std::string& source) {
  const std::string tok = header_token(is, source);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) {
      throw std::invalid_argument(tok);
    }
    return v;
  } catch (const std::exception&) {
    throw DataError(source + ": bad PGM header value '" + tok + "'");
  }
}

}  // namespace

PgmImage read_pgm(const std::filesystem::path& path) {
  const std::string source = path.string();
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw DataError("cannot read " + source);
  }
  if (header_token(is, source) != "P5") {
    throw DataError(source + ": only binary PGM (P5) is supported");
  }
  const int width = header_int(is, source);
  const int height = header_int(is, source);
  const int maxval = header_int(is, source);
  if (width < 1 || height < 1 || maxval < 1 || maxval > 65535) {
    throw DataError(source + ": invalid PGM dimensions or maxval");
  }
  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(static_cast<std::size_t>(width) * height * bytes);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (is.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw DataError(source + ": truncated PGM pixel data");
  }
  PgmImage out;
  out.maxval = maxval;
  out.pixels.resize(height, width);
  std::size_t k = 0;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      unsigned v = raw[k++];
      if (bytes == 2) {
        v = (v << 8) | raw[k++];
      }
      out.pixels(r, c) = static_cast<double>(v);
    }
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const GrayImage<double>& pixels, int maxval) {
  if (maxval < 1 || maxval > 65535) {
    throw DataError("PGM maxval must be in [1, 65535]");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw DataError("cannot write " + path.string());
  }
  os << "P5\n" << pixels.cols() << ' ' << pixels.rows() << '\n' << maxval << '\n';
  const bool wide = maxval > 255;
  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(pixels.size()) * (wide ? 2 : 1));
  for (Eigen::Index r = 0; r < pixels.rows(); ++r) {
    for (Eigen::Index c = 0; c < pixels.cols(); ++c) {
      const double v = std::round(pixels(r, c));
      if (!(v >= 0.0 && v <= maxval)) {
        throw DataError("pixel value outside [0, maxval] while writing " + path.string());
      }
      const auto u = static_cast<unsigned>(v);
      if (wide) {
        raw.push_back(static_cast<unsigned char>(u >> 8));
      }
      raw.push_back(static_cast<unsigned char>(u & 0xff));
    }
  }
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

void write_pgm_unit16(const std::filesystem::path& path, const GrayImage<double>& unit) {
  write_pgm(path, (unit.max(0.0).min(1.0) * 65535.0).eval(), 65535);
}

}  // namespace noisylab
