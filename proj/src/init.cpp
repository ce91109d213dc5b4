#include "defect/init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "defect/util.hpp"

namespace defect {
namespace {

// Worst-case first-order movement of lambda under unit-Frobenius real
// perturbations: the largest eigenvalue of the 2x2 Gram matrix of
// (Re N, Im N), N = conj(y) x^T, optionally restricted to a mask.
double real_rate_numerator(const CVector& x, const CVector& y, const Mask* mask) {
  CMatrix nmat = y.conjugate() * x.transpose();
  if (mask) nmat = apply_mask(nmat, *mask);
  RMatrix re = nmat.real(), im = nmat.imag();
  double g11 = re.squaredNorm();
  double g22 = im.squaredNorm();
  double g12 = re.cwiseProduct(im).sum();
  double tr = g11 + g22;
  double disc = std::sqrt(std::max((g11 - g22) * (g11 - g22) + 4.0 * g12 * g12, 0.0));
  return std::sqrt(std::max(0.5 * (tr + disc), 0.0));
}

double pattern_fraction(const CVector& x, const CVector& y, const Mask& mask) {
  CMatrix g = x * y.adjoint();
  return apply_mask(g, mask).norm() / g.norm();
}

bool nearly_real(Complex z, double scale) { return std::abs(z.imag()) <= 1e-10 * scale; }

}  // namespace

std::vector<double> condition_rates(const std::vector<EigenTriple>& triples,
                                    const StructureMode& mode) {
  std::vector<double> rates;
  rates.reserve(triples.size());
  for (const auto& t : triples) {
    if (!(t.r > 0)) throw DegenerateSpectrum("condition_rates: defective input eigenvalue");
    double p = 0;
    switch (mode.kind) {
      case StructureMode::ComplexFull:
        p = 1.0 / t.r;
        break;
      case StructureMode::ComplexPattern:
        p = pattern_fraction(t.x, t.y, mode.pattern) / t.r;
        break;
      case StructureMode::RealFull:
        p = real_rate_numerator(t.x, t.y, nullptr) / t.r;
        break;
      case StructureMode::RealPattern:
        p = real_rate_numerator(t.x, t.y, &mode.pattern) / t.r;
        break;
    }
    rates.push_back(p);
  }
  return rates;
}

std::vector<CoalescenceCandidate> ranked_candidates(const std::vector<EigenTriple>& triples,
                                                    const StructureMode& mode) {
  if (triples.size() < 2) throw Error("candidate: need at least two eigenvalues");
  std::vector<double> p = condition_rates(triples, mode);
  std::vector<CoalescenceCandidate> all;
  for (size_t j = 0; j < triples.size(); ++j) {
    for (size_t k = j + 1; k < triples.size(); ++k) {
      CoalescenceCandidate c;
      c.lambda_j = triples[j].lambda;
      c.lambda_k = triples[k].lambda;
      c.p_j = p[j];
      c.p_k = p[k];
      c.score = std::abs(c.lambda_j - c.lambda_k) / (c.p_j + c.p_k);
      c.z0 = (c.p_j * c.lambda_k + c.p_k * c.lambda_j) / (c.p_j + c.p_k);
      all.push_back(c);
    }
  }
  std::sort(all.begin(), all.end(), [](const CoalescenceCandidate& a, const CoalescenceCandidate& b) {
    if (std::abs(a.score - b.score) > 1e-9 * std::max(a.score, b.score))
      return a.score < b.score;
    // deterministic order among symmetric (conjugate-mirrored) ties
    double ia = a.lambda_j.imag() + a.lambda_k.imag(), ib = b.lambda_j.imag() + b.lambda_k.imag();
    if (ia != ib) return ia < ib;
    return a.lambda_j.real() + a.lambda_k.real() < b.lambda_j.real() + b.lambda_k.real();
  });
  return all;
}

CoalescenceCandidate candidate(const std::vector<EigenTriple>& triples,
                               const StructureMode& mode) {
  return ranked_candidates(triples, mode).front();
}

CoalescenceCandidate candidate(const CMatrix& A, const StructureMode& mode) {
  return candidate(eig_pairs(A), mode);
}

UpperBoundResult upper_bound(const CMatrix& A, const StructureMode& mode,
                             bool permissive_pattern) {
  std::vector<EigenTriple> triples = eig_pairs(A);
  const size_t n = triples.size();
  const double scale = std::max(A.norm(), 1.0);
  const double inf = std::numeric_limits<double>::infinity();

  double min_gap = inf;
  auto complex_bound = [&] {
    double b = inf;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        double gap = std::abs(triples[i].lambda - triples[j].lambda);
        min_gap = std::min(min_gap, gap);
        b = std::min(b, gap / triples[i].r);
      }
    return b;
  };

  auto real_bound = [&] {
    double b = inf;
    // real-real and conjugate-pair coalescence: plain gap / (y^H x)
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        bool both_real = nearly_real(triples[i].lambda, scale) && nearly_real(triples[j].lambda, scale);
        bool conj_pair =
            std::abs(triples[i].lambda - std::conj(triples[j].lambda)) <= 1e-10 * scale;
        if (!both_real && !conj_pair) continue;
        b = std::min(b, std::abs(triples[i].lambda - triples[j].lambda) / triples[i].r);
      }
    // double coalescence of two non-conjugate complex pairs, on the
    // de-conjugated index set (positive imaginary part representatives)
    std::vector<size_t> up;
    for (size_t i = 0; i < n; ++i)
      if (triples[i].lambda.imag() > 1e-10 * scale) up.push_back(i);
    for (size_t a = 0; a < up.size(); ++a)
      for (size_t c = 0; c < up.size(); ++c) {
        if (a == c) continue;
        double dre = std::abs((triples[up[a]].lambda - triples[up[c]].lambda).real());
        if (dre <= 1e-14 * scale) continue;  // same real part: no horizontal contact
        b = std::min(b, 2.0 * dre / triples[up[a]].r);
      }
    return b;
  };

  UpperBoundResult out;
  switch (mode.kind) {
    case StructureMode::ComplexFull:
      out.bound = out.hint = complex_bound();
      break;
    case StructureMode::RealFull:
      out.bound = out.hint = real_bound();
      break;
    case StructureMode::ComplexPattern:
      out.hint = complex_bound();
      out.bound = permissive_pattern ? out.hint : inf;
      break;
    case StructureMode::RealPattern:
      out.hint = real_bound();
      out.bound = permissive_pattern ? out.hint : inf;
      break;
  }
  if (std::isfinite(out.hint) && std::isfinite(min_gap) && out.hint > min_gap)
    logf(LogLevel::Debug, "upper bound %g exceeds the raw eigenvalue gap %g", out.hint, min_gap);
  return out;
}

}  // namespace defect
