#include "defect/perturbation.hpp"

namespace defect {

Perturbation Perturbation::dense_full(CMatrix E, bool real_entries) {
  Perturbation p;
  p.rep = Rep::Dense;
  p.real = real_entries;
  p.dense = real_entries ? complexify(E.real()) : std::move(E);
  return p;
}

Perturbation Perturbation::pattern(CMatrix E, Mask mask, bool real_entries) {
  Perturbation p;
  p.rep = Rep::Pattern;
  p.real = real_entries;
  p.dense = apply_mask(real_entries ? complexify(E.real()) : E, mask);
  p.mask = std::move(mask);
  return p;
}

Perturbation Perturbation::factored(RankFactors f) {
  Perturbation p;
  p.rep = Rep::Factored;
  p.real = false;
  p.U = std::move(f.U);
  p.T = std::move(f.T);
  p.V = std::move(f.V);
  return p;
}

Perturbation Perturbation::factored(RankFactorsReal f) {
  Perturbation p;
  p.rep = Rep::Factored;
  p.real = true;
  p.Ur = std::move(f.U);
  p.Tr = std::move(f.T);
  p.Vr = std::move(f.V);
  return p;
}

Eigen::Index Perturbation::n() const {
  if (rep == Rep::Factored) return real ? Ur.rows() : U.rows();
  return dense.rows();
}

int Perturbation::k() const {
  if (rep != Rep::Factored) return 0;
  return static_cast<int>(real ? Ur.cols() : U.cols());
}

CMatrix Perturbation::to_dense() const {
  if (rep == Rep::Factored)
    return real ? complexify(Ur * Tr * Vr.transpose()) : CMatrix(U * T * V.adjoint());
  return dense;
}

double Perturbation::norm() const {
  if (rep == Rep::Factored) return real ? Tr.norm() : T.norm();  // U, V orthonormal
  return dense.norm();
}

void Perturbation::renormalize() {
  double nf = norm();
  if (!(nf > 0)) throw NonFinite("perturbation has zero norm");
  if (rep == Rep::Factored) {
    if (real)
      Tr /= nf;
    else
      T /= nf;
  } else {
    dense /= nf;
  }
}

}  // namespace defect
