#pragma once

#include <complex>

#include <Eigen/Core>

namespace dip {

/// Dense real matrix, row-major so that each channel (row) of a
/// channels x samples record is contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexMatrix =
    Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace dip
