#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace defect {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Admissible perturbation class of the nearness problem.
struct StructureMode {
  enum Kind { ComplexFull, RealFull, ComplexPattern, RealPattern };
  Kind kind = ComplexFull;
  Mask pattern;  // allowed entries, pattern kinds only

  bool real() const { return kind == RealFull || kind == RealPattern; }
  bool patterned() const { return kind == ComplexPattern || kind == RealPattern; }
  const char* name() const;

  static StructureMode complex_full() { return {ComplexFull, {}}; }
  static StructureMode real_full() { return {RealFull, {}}; }
  static StructureMode complex_pattern(Mask m) { return {ComplexPattern, std::move(m)}; }
  static StructureMode real_pattern(Mask m) { return {RealPattern, std::move(m)}; }
  static StructureMode parse(const std::string& name, Mask pattern_if_needed);
};

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFinite : Error { using Error::Error; };
struct DegenerateSpectrum : Error { using Error::Error; };
struct SingularShift : Error { using Error::Error; };
struct SingularCapacitance : Error { using Error::Error; };
struct IllConditionedT : Error { using Error::Error; };
struct RankCollapse : Error { using Error::Error; };
struct NotStationary : Error { using Error::Error; };
struct DegenerateDerivative : Error { using Error::Error; };
struct InnerNotConverged : Error { using Error::Error; };
struct BracketExhausted : Error { using Error::Error; };
struct MaxOuterIterations : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct UnsupportedFormat : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };

/// Boolean mask of entries with |a_ij| > tol.
Mask nonzero_pattern(const CMatrix& A, double tol = 0.0);

bool is_real(const CMatrix& A, double tol = 0.0);

inline CMatrix complexify(const RMatrix& A) {
  return A.cast<Complex>();
}

/// Entrywise projection onto a sparsity pattern (off-mask entries zeroed).
CMatrix apply_mask(const CMatrix& Z, const Mask& m);

/// Orthogonal projection of Z onto the admissible set of `mode`
/// (real part and/or mask, both entrywise).
CMatrix apply_structure(const CMatrix& Z, const StructureMode& mode);

void check_finite(const CMatrix& M, const char* what);

}  // namespace defect
