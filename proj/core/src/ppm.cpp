#include "lmpgan/ppm.hpp"

#include <cmath>
#include <fstream>

#include "lmpgan/errors.hpp"

namespace lmpgan {

namespace {

unsigned char to_byte(double v) {
  const double scaled = std::round(255.0 * (v + 1.0) / 2.0);
  if (scaled <= 0.0) return 0;
  if (scaled >= 255.0) return 255;
  return static_cast<unsigned char>(scaled);
}

}  // namespace

void write_frame_ppm(const std::string& path, const MarketFrame& frame) {
  const std::size_t rows = frame.values.dim(0);
  const std::size_t cols = frame.values.dim(1);
  const std::size_t ch = frame.values.dim(2);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << "P6\n" << cols << " " << rows << "\n255\n";
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      unsigned char rgb[3];
      for (std::size_t c = 0; c < 3; ++c) {
        const std::size_t src = c < ch ? c : ch - 1;
        rgb[c] = to_byte(frame.values.at3(i, j, src));
      }
      out.write(reinterpret_cast<const char*>(rgb), 3);
    }
  }
}

void write_correlation_ppm(const std::string& path, const CorrelationMatrix& matrix) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << "P6\n" << matrix.k << " " << matrix.k << "\n255\n";
  for (int i = 0; i < matrix.k; ++i) {
    for (int j = 0; j < matrix.k; ++j) {
      const double v = matrix.at(i, j);
      const unsigned char g = std::isnan(v) ? 128 : to_byte(v);
      unsigned char rgb[3] = {g, g, g};
      out.write(reinterpret_cast<const char*>(rgb), 3);
    }
  }
}

}  // namespace lmpgan
