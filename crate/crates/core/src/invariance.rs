//! Swap unitaries and numerical witnesses of invariance for expansions.
//!
//! Two implications are checked: a unitary fixing a microstate leaves its
//! counting weight and its eigen-classification unchanged; and exchanging
//! two equal-norm microstates fixes the parent and maps the expansion onto a
//! permutation of itself, so every microstate keeps the weight `1/n`.

use serde::{Deserialize, Serialize};

use crate::expansion::{classify, classify_state, ClassCounts, EquiampExpansion};
use crate::hilbert::{apply_unitary, diff_norm, Projector, StateVector, Unitary};
use crate::{tolerance, Error, Result, C64};

/// One named check with its worst residual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckVerdict {
    pub check: String,
    pub pass: bool,
    pub max_residual: f64,
}

impl CheckVerdict {
    fn new(check: &str, max_residual: f64, tol: f64) -> Self {
        Self {
            check: check.to_string(),
            pass: max_residual <= tol,
            max_residual,
        }
    }
}

/// Unitary exchanging the rays of orthogonal `phi` and `eta`:
/// `φ ↦ η·‖φ‖/‖η‖`, `η ↦ φ·‖η‖/‖φ‖`, identity on the complement.
pub fn swap_unitary(phi: &StateVector, eta: &StateVector) -> Result<Unitary> {
    phi.same_space(eta)?;
    let np = phi.checked_norm_sqr()?.sqrt();
    let ne = eta.checked_norm_sqr()?.sqrt();
    let overlap = phi.inner(eta)?.norm() / (np * ne);
    if overlap > tolerance::ORTH {
        return Err(Error::NotOrthogonal { overlap });
    }
    let u: Vec<C64> = phi.amplitudes().iter().map(|c| c / np).collect();
    let v: Vec<C64> = eta.amplitudes().iter().map(|c| c / ne).collect();
    let one = C64::new(1.0, 0.0);
    Unitary::identity_plus_outer(
        phi.dim(),
        &[(-one, &u, &u), (-one, &v, &v), (one, &v, &u), (one, &u, &v)],
    )
}

/// Expansion transported by `u`: `{U ξ_j}` as an expansion of `U ψ`,
/// validated.
pub fn transform_expansion(e: &EquiampExpansion, u: &Unitary) -> Result<EquiampExpansion> {
    let parent = apply_unitary(u, e.parent())?;
    let microstates = e
        .microstates()
        .iter()
        .map(|m| apply_unitary(u, m))
        .collect::<Result<Vec<_>>>()?;
    EquiampExpansion::new(parent, microstates)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub fixed: usize,
    pub n: usize,
    /// `‖Uψ − ψ‖ / ‖ψ‖`, informational.
    pub parent_displacement: f64,
    pub checks: Vec<CheckVerdict>,
}

impl InvarianceReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Checks the consequences of `U ξ_fixed = ξ_fixed` for the expansion `e`
/// of `psi`. `projectors` are probed for the classification check; those
/// not fixing `U ξ_fixed` are skipped.
pub fn invariance_check(
    psi: &StateVector,
    e: &EquiampExpansion,
    u: &Unitary,
    fixed: usize,
    projectors: &[Projector],
) -> Result<InvarianceReport> {
    psi.same_space(e.parent())?;
    let target = e.microstate(fixed)?;
    let r = e.common_norm();
    let moved = apply_unitary(u, target)?;
    let residual = diff_norm(moved.amplitudes(), target.amplitudes());
    if residual > tolerance::ORTH * r {
        return Err(Error::UnitaryDoesNotFixTarget {
            residual: residual / r,
        });
    }

    let mut checks = Vec::new();
    let transported = transform_expansion(e, u);
    let expansion_residual = match &transported {
        Ok(t) => t.residuals().max(),
        Err(_) => f64::INFINITY,
    };
    checks.push(CheckVerdict::new(
        "transported_expansion_valid",
        expansion_residual,
        tolerance::EXPANSION,
    ));

    // Weight of the fixed microstate: 1/n before, and the fraction of
    // transported microstates equal to it after.
    let n = e.n();
    let weight_residual = match &transported {
        Ok(t) => {
            let hits = t
                .microstates()
                .iter()
                .filter(|m| diff_norm(m.amplitudes(), target.amplitudes()) <= tolerance::ORTH * r)
                .count();
            ((hits as f64 - 1.0) / n as f64).abs()
        }
        Err(_) => f64::INFINITY,
    };
    checks.push(CheckVerdict::new(
        "fixed_microstate_weight",
        weight_residual,
        0.0,
    ));

    let mut mismatches = 0usize;
    for p in projectors {
        let image = p.apply(&moved)?;
        if diff_norm(image.amplitudes(), moved.amplitudes()) > tolerance::CLASSIFY * r {
            continue;
        }
        if classify_state(target, p)? != classify_state(&moved, p)? {
            mismatches += 1;
        }
    }
    checks.push(CheckVerdict::new(
        "fixed_microstate_class",
        mismatches as f64,
        0.0,
    ));

    let moved_psi = apply_unitary(u, psi)?;
    let parent_displacement = diff_norm(moved_psi.amplitudes(), psi.amplitudes()) / psi.norm();
    Ok(InvarianceReport {
        fixed,
        n,
        parent_displacement,
        checks,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryWitness {
    pub i: usize,
    pub j: usize,
    pub checks: Vec<CheckVerdict>,
}

impl SymmetryWitness {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Swaps microstates `i` and `j` and verifies that the parent is fixed, the
/// microstate norms are unchanged as a multiset, and the transported family
/// is the same expansion with `i` and `j` exchanged.
pub fn equal_norm_symmetry_witness(
    psi: &StateVector,
    e: &EquiampExpansion,
    i: usize,
    j: usize,
) -> Result<SymmetryWitness> {
    psi.same_space(e.parent())?;
    e.microstate(i)?;
    e.microstate(j)?;
    let psi_norm = psi.checked_norm_sqr()?.sqrt();
    let u = if i == j {
        Unitary::identity(psi.dim())
    } else {
        swap_unitary(&e.microstates()[i], &e.microstates()[j])?
    };
    let mut checks = vec![CheckVerdict::new(
        "swap_unitarity",
        u.unitarity_residual(),
        tolerance::ORTH,
    )];

    let moved_psi = apply_unitary(&u, psi)?;
    checks.push(CheckVerdict::new(
        "parent_fixed",
        diff_norm(moved_psi.amplitudes(), psi.amplitudes()) / psi_norm,
        tolerance::EXPANSION,
    ));

    let moved: Vec<StateVector> = e
        .microstates()
        .iter()
        .map(|m| apply_unitary(&u, m))
        .collect::<Result<_>>()?;
    let mut before: Vec<f64> = e.microstates().iter().map(StateVector::norm).collect();
    let mut after: Vec<f64> = moved.iter().map(StateVector::norm).collect();
    before.sort_by(f64::total_cmp);
    after.sort_by(f64::total_cmp);
    let norm_shift = before
        .iter()
        .zip(&after)
        .map(|(a, b)| (a - b).abs() / psi_norm)
        .fold(0.0, f64::max);
    checks.push(CheckVerdict::new(
        "norm_multiset",
        norm_shift,
        tolerance::EXPANSION,
    ));

    let mut order: Vec<usize> = (0..e.n()).collect();
    order.swap(i, j);
    let permuted = e.permuted(&order)?;
    let permutation_gap = moved
        .iter()
        .zip(permuted.microstates())
        .map(|(a, b)| diff_norm(a.amplitudes(), b.amplitudes()) / psi_norm)
        .fold(0.0, f64::max);
    checks.push(CheckVerdict::new(
        "transport_is_permutation",
        permutation_gap,
        tolerance::EXPANSION,
    ));

    let revalidated = EquiampExpansion::new(psi.clone(), moved)
        .map(|t| t.residuals().max())
        .unwrap_or(f64::INFINITY);
    checks.push(CheckVerdict::new(
        "transported_expansion_of_parent",
        revalidated,
        tolerance::EXPANSION,
    ));

    Ok(SymmetryWitness { i, j, checks })
}

/// Class counts of `p` before and after transporting `e` by `u`.
pub fn recount(
    e: &EquiampExpansion,
    u: &Unitary,
    p: &Projector,
) -> Result<(ClassCounts, ClassCounts)> {
    let before = classify(e, p)?;
    let after = classify(&transform_expansion(e, u)?, p)?;
    Ok((before, after))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{expand_adapted, expand_generic};
    use crate::hilbert::{Projector, Resolution};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn basis(dim: usize, i: usize) -> StateVector {
        StateVector::basis(vec![dim], i).unwrap()
    }

    #[test]
    fn swap_of_basis_vectors_is_elementary() {
        let u = swap_unitary(&basis(2, 0), &basis(2, 1)).unwrap();
        let o = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        assert!(u
            .entries()
            .iter()
            .zip([z, o, o, z])
            .all(|(a, b)| (a - b).norm() < 1e-15));
    }

    #[test]
    fn swap_fixes_sum_of_equal_norm_pair() {
        let phi = StateVector::from_real(vec![4], &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let eta = StateVector::from_real(vec![4], &[0.0, 0.6, 0.8, 0.0]).unwrap();
        let chi = StateVector::from_real(vec![4], &[0.0, 0.0, 0.0, 2.5]).unwrap();
        let psi = phi.add(&eta).unwrap().add(&chi).unwrap();
        let u = swap_unitary(&phi, &eta).unwrap();
        let moved = apply_unitary(&u, &psi).unwrap();
        assert!(moved.distance(&psi).unwrap() < 1e-12);
    }

    #[test]
    fn swap_is_an_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = StateVector::random(vec![6], &mut rng).unwrap();
        let e = expand_generic(&psi, 4, 1).unwrap();
        let u = swap_unitary(&e.microstates()[0], &e.microstates()[2]).unwrap();
        let u2 = u.compose(&u).unwrap();
        let probes: Vec<StateVector> = (0..10)
            .map(|_| StateVector::random(vec![6], &mut rng).unwrap())
            .collect();
        assert!(u2.max_displacement(&probes).unwrap() < 1e-12);
    }

    #[test]
    fn swap_rejects_non_orthogonal() {
        let a = StateVector::from_real(vec![2], &[1.0, 0.0]).unwrap();
        let b = StateVector::from_real(vec![2], &[1.0, 1.0]).unwrap();
        assert!(matches!(
            swap_unitary(&a, &b),
            Err(Error::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn identity_passes_invariance_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = StateVector::random(vec![5], &mut rng).unwrap();
        let e = expand_generic(&psi, 3, 0).unwrap();
        let p = Projector::identity(vec![5]).unwrap();
        let report = invariance_check(&psi, &e, &Unitary::identity(5), 1, &[p]).unwrap();
        assert!(report.pass(), "{report:?}");
        assert!(report.parent_displacement < 1e-15);
    }

    #[test]
    fn swapping_two_microstates_keeps_a_third_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = StateVector::random(vec![6], &mut rng).unwrap();
        let e = expand_generic(&psi, 4, 7).unwrap();
        let u = swap_unitary(&e.microstates()[0], &e.microstates()[1]).unwrap();
        let report = invariance_check(&psi, &e, &u, 2, &[]).unwrap();
        assert!(report.pass(), "{report:?}");
        assert!(report.parent_displacement < 1e-12);
    }

    #[test]
    fn unfixed_target_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let psi = StateVector::random(vec![4], &mut rng).unwrap();
        let e = expand_generic(&psi, 2, 0).unwrap();
        let u = swap_unitary(&e.microstates()[0], &e.microstates()[1]).unwrap();
        assert!(matches!(
            invariance_check(&psi, &e, &u, 0, &[]),
            Err(Error::UnitaryDoesNotFixTarget { .. })
        ));
    }

    #[test]
    fn witness_on_adapted_expansion() {
        let dim = 16;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let psi = StateVector::random(vec![dim], &mut rng).unwrap();
        let p = Projector::span(
            vec![dim],
            &(0..dim / 2)
                .map(|_| crate::hilbert::random_complex(dim, &mut rng))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let res = Resolution::binary(p).unwrap();
        let e = expand_adapted(&psi, &res, 7).unwrap();
        for (i, j) in [(0, 1), (2, 6), (3, 3)] {
            let w = equal_norm_symmetry_witness(&psi, &e, i, j).unwrap();
            assert!(w.pass(), "{w:?}");
        }
    }

    #[test]
    fn two_microstate_swap_exchanges_them() {
        let psi = StateVector::from_real(vec![2], &[1.0, 2.0]).unwrap();
        let e = expand_generic(&psi, 2, 3).unwrap();
        let w = equal_norm_symmetry_witness(&psi, &e, 0, 1).unwrap();
        assert!(w.pass(), "{w:?}");
    }

    #[test]
    fn recount_oracle_for_projector_containing_both() {
        // ψ = φ + η + χ with ‖φ‖ = ‖η‖; the expansion is {φ, η, χ₁, χ₂}.
        let dim = 6;
        let s = 1.0 / 2.0f64.sqrt();
        let phi = StateVector::from_real(vec![dim], &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let eta = StateVector::from_real(vec![dim], &[0.0, s, s, 0.0, 0.0, 0.0]).unwrap();
        let c1 = StateVector::from_real(vec![dim], &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let c2 = StateVector::from_real(vec![dim], &[0.0, 0.0, 0.0, 0.0, s, -s]).unwrap();
        let psi = StateVector::sum([&phi, &eta, &c1, &c2]).unwrap();
        let e = EquiampExpansion::new(psi, vec![phi.clone(), eta.clone(), c1, c2]).unwrap();
        let u = swap_unitary(&phi, &eta).unwrap();
        let p = Projector::span(
            vec![dim],
            &[
                phi.amplitudes().to_vec(),
                eta.amplitudes().to_vec(),
                basis(dim, 4).into_amplitudes(),
            ],
        )
        .unwrap();
        // Direct recount over the permuted expansion.
        let permuted = e.permuted(&[1, 0, 2, 3]).unwrap();
        let oracle = classify(&permuted, &p).unwrap();
        let (before, after) = recount(&e, &u, &p).unwrap();
        assert_eq!(before, after);
        assert_eq!(after, oracle);
        assert_eq!(before.eig1, 2);
    }
}
