#pragma once

#include <vector>

#include "defect/linalg.hpp"
#include "defect/types.hpp"

namespace defect {

/// First-order growth rate of each eigenvalue under unit-Frobenius
/// perturbations of the admissible class (Wilkinson condition number in the
/// complex case; worst-case real rate in the real case; mask-restricted
/// variants for pattern structures).
std::vector<double> condition_rates(const std::vector<EigenTriple>& triples,
                                    const StructureMode& mode);

struct CoalescenceCandidate {
  Complex lambda_j, lambda_k;
  double p_j = 0, p_k = 0;
  Complex z0;        // weighted disk-contact point on [lambda_j, lambda_k]
  double score = 0;  // |lambda_j - lambda_k| / (p_j + p_k)
};

/// The eigenvalue pair most likely to coalesce first, by the disk model.
CoalescenceCandidate candidate(const CMatrix& A, const StructureMode& mode);
CoalescenceCandidate candidate(const std::vector<EigenTriple>& triples,
                               const StructureMode& mode);

/// All pairs ordered by ascending score (for fan-out over several starts).
std::vector<CoalescenceCandidate> ranked_candidates(const std::vector<EigenTriple>& triples,
                                                    const StructureMode& mode);

struct UpperBoundResult {
  double bound = 0;  // +inf sentinel in pattern modes unless permissive
  double hint = 0;   // the corresponding full-mode value
};

/// A-priori upper bound for the bracket: gap / (y^H x) over eigenvalue pairs,
/// with the doubled-real-part variant for non-conjugate complex pairs in the
/// real case.
UpperBoundResult upper_bound(const CMatrix& A, const StructureMode& mode,
                             bool permissive_pattern = false);

}  // namespace defect
