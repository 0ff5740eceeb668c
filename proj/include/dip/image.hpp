#pragma once

#include <span>
#include <string>

#include "dip/types.hpp"

namespace dip::image {

/// Linear map of [0, max] onto 0..255 with rounding; values outside are
/// clamped. max <= 0 gives black.
unsigned char to_byte(double value, double max);

/// Binary P5 graymap, one pixel per matrix entry. Row 0 of `image` becomes
/// the bottom image row, so frequency increases upward.
std::string encode_pgm(const Matrix& image);

/// Binary P6 pixmap from three equally sized channels (R, G, B), each
/// scaled by its own maximum.
std::string encode_ppm(std::span<const Matrix> channels);

}  // namespace dip::image
