#pragma once

// Spectral analysis of periodic Jacobi operators on the half lattice with a
// finitely supported perturbation: band structure, Jost solutions, the full
// catalogue of spectral states (bound, antibound, resonances, virtual and
// collision states), norming constants, and reconstruction of the
// perturbation from scattering data.

#include "errors.hpp"     // exception taxonomy
#include "linalg.hpp"     // dense solves and least squares
#include "poly.hpp"       // polynomial arithmetic and root finding
#include "background.hpp" // periodic background: bands, Weyl functions
#include "jost.hpp"       // perturbed Jost solutions and the state polynomial
#include "states.hpp"     // state location/classification, norming constants
#include "inverse.hpp"    // reconstruction from scattering data
#include "oracle.hpp"     // independent cross-checks (finite sections, identities)
#include "io.hpp"         // JSON input/output
