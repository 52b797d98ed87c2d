#pragma once

#include <cstdint>
#include <span>

#include "cmclab/grid.hpp"

namespace cmclab {

// Fast sweeping (first-order Godunov upwind, 2^d sweep orderings) for the
// unsigned distance. Nodes with frozen[i] != 0 keep |phi[i]|; all others are
// recomputed. The sign of the input is restored at the end.
ScalarField fast_sweep(const ScalarField& phi, std::span<const std::uint8_t> frozen, int max_rounds = 6);

// Re-distance a level-set function: nodes adjacent to a sign change are set to
// phi/|grad phi| and frozen, then everything else is swept.
ScalarField redistance(const ScalarField& phi);

// Nodes with a face neighbour of opposite sign (phi < 0 vs phi >= 0).
std::vector<std::uint8_t> interface_nodes(const ScalarField& phi);

}  // namespace cmclab
