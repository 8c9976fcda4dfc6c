#pragma once

#include "socse/ocp.hpp"

namespace socse {

/// Scalar benchmark with an active control box:
///   min 1/2 int_0^1 (x^2 + u^2) dt,  x' = -x + u,
///   0.2 <= x <= 1,  -0.3 <= u <= -0.1,  x(0) = 1.
OcpProblem academic_problem();

}  // namespace socse
