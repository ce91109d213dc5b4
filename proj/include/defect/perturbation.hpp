#pragma once

#include "defect/linalg.hpp"
#include "defect/types.hpp"

namespace defect {

/// Unit-Frobenius-norm perturbation in one of three representations:
/// dense, low-rank factored U T V^H, or dense-with-sparsity-mask.
/// Real-structured perturbations keep exactly-zero imaginary parts
/// (factored ones are stored in real arithmetic).
struct Perturbation {
  enum class Rep { Dense, Factored, Pattern };

  Rep rep = Rep::Dense;
  bool real = false;

  CMatrix dense;  // Dense / Pattern payload
  Mask mask;      // Pattern only

  CMatrix U, T, V;     // Factored, complex path
  RMatrix Ur, Tr, Vr;  // Factored, real path

  static Perturbation dense_full(CMatrix E, bool real_entries);
  static Perturbation pattern(CMatrix E, Mask mask, bool real_entries);
  static Perturbation factored(RankFactors f);
  static Perturbation factored(RankFactorsReal f);

  Eigen::Index n() const;
  int k() const;  // factored rank, 0 otherwise
  CMatrix to_dense() const;
  double norm() const;
  void renormalize();
};

}  // namespace defect
