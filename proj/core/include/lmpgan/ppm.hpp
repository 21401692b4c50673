#pragma once

#include <string>

#include "lmpgan/evaluation.hpp"
#include "lmpgan/market_data.hpp"

namespace lmpgan {

// Binary PPM (P6), one pixel per zone cell. Normalized values map
// [-1, 1] -> [0, 255] via round(255 * (v + 1) / 2), clamped. With fewer
// than 3 channels the last available channel is repeated.
void write_frame_ppm(const std::string& path, const MarketFrame& frame);

// Grayscale heatmap of a correlation matrix with the same value mapping;
// undefined entries render as mid-gray.
void write_correlation_ppm(const std::string& path, const CorrelationMatrix& matrix);

}  // namespace lmpgan
