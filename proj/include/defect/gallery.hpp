#pragma once

#include "defect/types.hpp"

namespace defect {

/// Grcar matrix of order n: 1 on the diagonal and the first three
/// superdiagonals, -1 on the first subdiagonal.
RMatrix grcar(int n);

/// The 5x5 complex test matrix used by the worked complex-distance example.
CMatrix example1();

}  // namespace defect
