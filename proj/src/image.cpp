#include "dip/image.hpp"

#include <algorithm>
#include <cmath>

#include "dip/error.hpp"

namespace dip::image {

unsigned char to_byte(double value, double max) {
  if (!(max > 0.0)) return 0;
  const double scaled = std::round(std::clamp(value / max, 0.0, 1.0) * 255.0);
  return static_cast<unsigned char>(scaled);
}

namespace {

std::string header(const char* magic, Eigen::Index width, Eigen::Index height) {
  return std::string(magic) + "\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
}

}  // namespace

std::string encode_pgm(const Matrix& image) {
  const double max = image.size() ? image.maxCoeff() : 0.0;
  std::string out = header("P5", image.cols(), image.rows());
  for (Eigen::Index r = image.rows(); r-- > 0;) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) out.push_back(static_cast<char>(to_byte(image(r, c), max)));
  }
  return out;
}

std::string encode_ppm(std::span<const Matrix> channels) {
  if (channels.size() != 3) throw ShapeError("RGB export needs exactly 3 channels");
  const auto rows = channels[0].rows();
  const auto cols = channels[0].cols();
  double max[3];
  for (std::size_t k = 0; k < 3; ++k) {
    if (channels[k].rows() != rows || channels[k].cols() != cols) {
      throw ShapeError("RGB export channels differ in shape");
    }
    max[k] = channels[k].size() ? channels[k].maxCoeff() : 0.0;
  }
  std::string out = header("P6", cols, rows);
  for (Eigen::Index r = rows; r-- > 0;) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (std::size_t k = 0; k < 3; ++k) out.push_back(static_cast<char>(to_byte(channels[k](r, c), max[k])));
    }
  }
  return out;
}

}  // namespace dip::image
