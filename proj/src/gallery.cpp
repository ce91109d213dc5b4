#include "defect/gallery.hpp"

namespace defect {

RMatrix grcar(int n) {
  if (n < 2) throw ParseError("grcar: order must be >= 2");
  RMatrix A = RMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j <= i + 3 && j < n; ++j) A(i, j) = 1.0;
    if (i + 1 < n) A(i + 1, i) = -1.0;
  }
  return A;
}

CMatrix example1() {
  const Complex I(0.0, 1.0);
  CMatrix A(5, 5);
  A << 0.0, 1.0 + I, 2.0 + I, 1.0 + 2.0 * I, 1.0,
      -1.0, -1.0 - I, 1.0 - I, -I, 0.0,
      1.0 - I, -1.0 - 2.0 * I, 1.0 + 2.0 * I, -2.0 * I, 0.0,
      1.0 - 2.0 * I, 1.0 - I, -1.0 + 2.0 * I, -1.0 - I, 0.0,
      1.0, -1.0 - I, 2.0 * I, -1.0 - I, -2.0 * I;
  return A;
}

}  // namespace defect
