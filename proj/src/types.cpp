#include "defect/types.hpp"

namespace defect {

const char* StructureMode::name() const {
  switch (kind) {
    case ComplexFull: return "complex";
    case RealFull: return "real";
    case ComplexPattern: return "pattern-complex";
    case RealPattern: return "pattern-real";
  }
  return "?";
}

StructureMode StructureMode::parse(const std::string& name, Mask pattern_if_needed) {
  if (name == "complex") return complex_full();
  if (name == "real") return real_full();
  if (name == "pattern-complex") return complex_pattern(std::move(pattern_if_needed));
  if (name == "pattern-real") return real_pattern(std::move(pattern_if_needed));
  throw ParseError("unknown structure mode: " + name);
}

Mask nonzero_pattern(const CMatrix& A, double tol) {
  return A.array().abs() > tol;
}

bool is_real(const CMatrix& A, double tol) {
  return (A.imag().array().abs() <= tol).all();
}

CMatrix apply_mask(const CMatrix& Z, const Mask& m) {
  return Z.cwiseProduct(m.cast<Complex>().matrix());
}

CMatrix apply_structure(const CMatrix& Z, const StructureMode& mode) {
  CMatrix out = mode.real() ? complexify(Z.real()) : Z;
  if (mode.patterned()) out = apply_mask(out, mode.pattern);
  return out;
}

void check_finite(const CMatrix& M, const char* what) {
  if (!M.allFinite()) throw NonFinite(std::string(what) + ": non-finite entries");
}

}  // namespace defect
