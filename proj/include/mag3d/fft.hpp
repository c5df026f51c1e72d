#pragma once

#include "mag3d/types.hpp"

// Thin FFTW wrappers. Forward transforms are unscaled; inverse transforms
// divide by the element count. Plan creation is serialized internally, so
// the functions are safe to call from multiple threads.
namespace mag3d::fft {

// Independent length-T DFT down each column of a T x D matrix.
MatrixXcd fft_cols(const MatrixXcd& x);
MatrixXcd ifft_cols(const MatrixXcd& x);

// Full 2D DFT of an H x W array.
ArrayXXcd fft2(const ArrayXXcd& x);
ArrayXXcd ifft2(const ArrayXXcd& x);

}  // namespace mag3d::fft
