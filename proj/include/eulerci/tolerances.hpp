#pragma once

// Central tolerance hierarchy used across the library.
//
// Three tiers, loosest to tightest:
//   * membership  — set-membership decisions made on assembled states
//                   (constraint-set residuals, hull boundaries, segment
//                   endpoints).  Assembly involves products of state
//                   components, so this tier absorbs accumulated rounding.
//   * identity    — algebraic identities between scalar expressions that
//                   are exact in real arithmetic.
//   * linalg      — residuals of small dense linear-algebra kernels
//                   (eigen/kernel solves) on well-scaled inputs.
//
// Functions take an explicit tolerance where the caller is expected to make
// a policy decision; these constants are the defaults used throughout.

namespace eulerci::tol {

inline constexpr double membership = 1e-8;
inline constexpr double identity = 1e-9;
inline constexpr double linalg = 1e-12;

// Relative gap under which the smallest singular value of the cone matrix
// counts as zero (rank decision for wave-cone membership).
inline constexpr double cone_rank_rel = 1e-10;

// Flux defects |m - (e+p)v| at or below this norm are treated as the
// classical (defect-free) case.
inline constexpr double flux_degenerate = 1e-9;

}  // namespace eulerci::tol
