#pragma once

#include <string>

#include "mlbpgd/grid_vector.hpp"

namespace mlbpgd {

// Reads a plain (P2) or binary (P5) PGM image, maxval up to 65535, and
// scales samples to [0,1]. Only square images fit the solver grids.
// Malformed input throws FormatError naming the byte offset.
GridVector load_pgm(const std::string& path);

// Writes a binary PGM with maxval 255. Values are clamped to [0,1] and
// quantized as floor(255 v + 0.5), so 0.5 maps to 128.
void save_pgm(const GridVector& x, const std::string& path);

} // namespace mlbpgd
