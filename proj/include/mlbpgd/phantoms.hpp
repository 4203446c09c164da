#pragma once

#include "mlbpgd/grid_vector.hpp"

namespace mlbpgd {

// Deterministic synthetic inputs, all with strictly positive backgrounds so
// forward data stays inside the Kullback-Leibler domains.

// Lunar-surface lookalike: a broad mound plus rimmed craters.
GridVector crater_field(int side);

// Concentric discs of alternating intensity inside (0,1).
GridVector nested_discs(int side);

// Low-resolution sprite made of solid blocks.
GridVector blocky_sprite(int side);

} // namespace mlbpgd
