use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qmlab::conditions::{completeness, outcome_independence};
use qmlab::eprb::{
    correlation, joint_distribution, marginals, scenario_distributions, singlet_state, Backend,
    JointDistribution, Scenario, SettingPair, Spinor, StateSpec,
};
use qmlab::expansion::{
    classify, counting_distribution, expand_adapted, expand_generic, imprecise_probability,
};
use qmlab::hilbert::{
    apply_unitary, born, orthogonalize, random_complex, tensor, Direction, Projector, Resolution,
    StateVector,
};
use qmlab::invariance::{recount, swap_unitary};
use qmlab::C64;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_basis(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    while basis.len() < dim {
        let mut v = random_complex(dim, rng);
        let r = orthogonalize(&mut v, &basis);
        v.iter_mut().for_each(|c| *c /= r);
        basis.push(v);
    }
    basis
}

/// A resolution of `C^dim` into cells of the given ranks.
fn random_resolution(dims: Vec<usize>, ranks: &[usize], rng: &mut ChaCha8Rng) -> Resolution {
    let dim: usize = dims.iter().product();
    let mut basis = random_basis(dim, rng);
    let mut cells = Vec::new();
    for &r in ranks {
        let rest = basis.split_off(r);
        cells.push(Projector::from_range_basis(dims.clone(), basis).unwrap());
        basis = rest;
    }
    Resolution::new(cells).unwrap()
}

fn direction(v: (f64, f64, f64)) -> Direction {
    Direction::normalized(v.0, v.1, v.2).unwrap_or_else(|_| Direction::z())
}

fn unit_vec() -> impl Strategy<Value = (f64, f64, f64)> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projector_idempotence(dim in 2usize..12, rank_frac in 0.0..1.0f64, seed in any::<u64>()) {
        let mut r = rng(seed);
        let rank = ((dim as f64 * rank_frac) as usize).max(1);
        let vecs: Vec<Vec<C64>> = (0..rank).map(|_| random_complex(dim, &mut r)).collect();
        let p = Projector::span(vec![dim], &vecs).unwrap();
        prop_assert!(p.idempotence_residual(100, seed) <= 1e-10);
    }

    #[test]
    fn resolution_born_sums_to_one(k in 2usize..5, extra in 0usize..6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let ranks: Vec<usize> = (0..k).map(|i| 1 + usize::from(i < extra)).collect();
        let dim: usize = ranks.iter().sum();
        let res = random_resolution(vec![dim], &ranks, &mut r);
        for _ in 0..100 {
            let psi = StateVector::random(vec![dim], &mut r).unwrap();
            let total: f64 = res.born(&psi).unwrap().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn born_is_scale_invariant(dim in 2usize..10, re in -5.0..5.0f64, im in -5.0..5.0f64, seed in any::<u64>()) {
        prop_assume!(re * re + im * im > 1e-6);
        let mut r = rng(seed);
        let psi = StateVector::random(vec![dim], &mut r).unwrap();
        let p = Projector::span(vec![dim], &[random_complex(dim, &mut r)]).unwrap();
        let scaled = psi.scaled(C64::new(re, im));
        prop_assert!((born(&psi, &p).unwrap() - born(&scaled, &p).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn tensor_norm_is_multiplicative(a in 1usize..6, b in 1usize..6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let u = StateVector::random(vec![a], &mut r).unwrap();
        let v = StateVector::random(vec![b], &mut r).unwrap();
        let w = tensor(&u, &v);
        prop_assert!((w.norm() - u.norm() * v.norm()).abs() <= 1e-12 * w.norm());
    }

    #[test]
    fn generic_expansions_are_valid(dim in 1usize..24, n_frac in 0.0..1.0f64, seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = ((dim as f64 * n_frac) as usize).clamp(1, dim);
        let psi = StateVector::random(vec![dim], &mut r).unwrap();
        let e = expand_generic(&psi, n, seed).unwrap();
        prop_assert!(e.residuals().within(1e-9), "{:?}", e.residuals());
    }

    #[test]
    fn generic_intervals_contain_born(dim in 2usize..16, n_frac in 0.0..1.0f64, rank in 1usize..8, seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = ((dim as f64 * n_frac) as usize).clamp(1, dim);
        let psi = StateVector::random(vec![dim], &mut r).unwrap();
        let e = expand_generic(&psi, n, seed).unwrap();
        let vecs: Vec<Vec<C64>> = e.microstates()[..n / 2]
            .iter()
            .map(|m| m.amplitudes().to_vec())
            .chain((0..rank.min(dim - n / 2)).map(|_| random_complex(dim, &mut r)))
            .collect();
        let p = Projector::span(vec![dim], &vecs).unwrap();
        let iv = imprecise_probability(&e, &p).unwrap();
        prop_assert!(iv.contains(born(&psi, &p).unwrap(), 1e-9), "{iv:?}");
    }

    #[test]
    fn adapted_expansions_are_accurate(
        k in 2usize..5,
        n in 4usize..60,
        seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        // Rank-4 cells, dilated so every cell has rank above n.
        let base = 4 * k;
        let dilation = n.div_ceil(4) + 1;
        let ranks = vec![4; k];
        let cells = random_resolution(vec![base], &ranks, &mut r);
        let id = Projector::identity(vec![dilation]).unwrap();
        let res = Resolution::new(cells.projectors().iter().map(|p| p.tensor(&id)).collect()).unwrap();
        let psi = tensor(
            &StateVector::random(vec![base], &mut r).unwrap(),
            &StateVector::basis(vec![dilation], 0).unwrap(),
        );
        prop_assume!(n >= k);
        let e = expand_adapted(&psi, &res, n).unwrap();
        prop_assert!(e.residuals().within(1e-9), "{:?}", e.residuals());
        let dist = counting_distribution(&e, &res).unwrap();
        let bound = (k - 1) as f64 / n as f64;
        prop_assert!(dist.cats < k);
        for ((p, b), iv) in dist.probabilities().iter().zip(res.born(&psi).unwrap()).zip(&dist.intervals) {
            prop_assert!((p - b).abs() <= bound + 1e-12);
            prop_assert!(iv.width() <= bound + 1e-12);
        }
    }

    #[test]
    fn swap_fixes_parent_and_preserves_commuting_counts(dim in 4usize..14, n_frac in 0.0..1.0f64, seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = ((dim as f64 * n_frac) as usize).clamp(2, dim);
        let psi = StateVector::random(vec![dim], &mut r).unwrap();
        let e = expand_generic(&psi, n, seed).unwrap();
        let (i, j) = (0, n - 1);
        let u = swap_unitary(&e.microstates()[i], &e.microstates()[j]).unwrap();
        prop_assert!(u.unitarity_residual() <= 1e-12);
        let moved = apply_unitary(&u, &psi).unwrap();
        prop_assert!(moved.distance(&psi).unwrap() <= 1e-10 * psi.norm());
        // Any projector whose range contains both swapped microstates
        // commutes with the swap.
        let mut vecs = vec![e.microstates()[i].amplitudes().to_vec(), e.microstates()[j].amplitudes().to_vec()];
        if n > 2 {
            vecs.push(e.microstates()[1].amplitudes().to_vec());
        }
        vecs.push(random_complex(dim, &mut r));
        let p = Projector::span(vec![dim], &vecs).unwrap();
        let (before, after) = recount(&e, &u, &p).unwrap();
        prop_assert_eq!(before, after);
        prop_assert_eq!(classify(&e, &p).unwrap(), before);
    }

    #[test]
    fn born_marginals_ignore_remote_setting(a in unit_vec(), ap in unit_vec(), b in unit_vec(), bp in unit_vec(), seed in any::<u64>(), product in any::<bool>()) {
        let mut r = rng(seed);
        let mut s = Scenario {
            a: direction(a),
            a_prime: direction(ap),
            b: direction(b),
            b_prime: direction(bp),
            ..Scenario::tsirelson(2, 3)
        };
        if product {
            let u = random_complex(2, &mut r);
            let v = random_complex(2, &mut r);
            s.state = StateSpec::Product {
                chi_a: Spinor::new(u[0], u[1]).unwrap(),
                chi_b: Spinor::new(v[0], v[1]).unwrap(),
            };
        }
        let psi = s.state_vector().unwrap();
        let d = scenario_distributions(&psi, &s, Backend::Born).unwrap();
        let pi = qmlab::conditions::parameter_independence(&d, None).unwrap();
        prop_assert!(pi.max_violation <= 1e-12);
    }

    #[test]
    fn counting_agrees_with_born(x in unit_vec(), y in unit_vec(), n in 4usize..80) {
        let psi = singlet_state(8, 8).unwrap();
        let (x, y) = (direction(x), direction(y));
        let born_d = joint_distribution(&psi, &x, &y, Backend::Born, None).unwrap();
        let count_d = joint_distribution(&psi, &x, &y, Backend::Counting, Some(n)).unwrap();
        for (c, b) in count_d.cells().iter().zip(born_d.cells()) {
            prop_assert!((c - b).abs() <= 3.0 / n as f64);
        }
        prop_assert!(count_d.cat_mass <= 3.0 / n as f64 + 1e-15);
        let total: f64 = count_d.cells().iter().sum::<f64>() + count_d.cat_mass;
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singlet_correlation_law(theta in 0.0..std::f64::consts::PI) {
        let psi = singlet_state(1, 1).unwrap();
        let d = joint_distribution(&psi, &Direction::z(), &Direction::in_xz_plane(theta), Backend::Born, None).unwrap();
        prop_assert!((correlation(&d) + theta.cos()).abs() <= 1e-9);
    }

    #[test]
    fn outcome_independence_tracks_completeness(w in prop::array::uniform4(0.05..1.0f64)) {
        let total: f64 = w.iter().sum();
        let p = [[w[0] / total, w[1] / total], [w[2] / total, w[3] / total]];
        let d = JointDistribution::from_table(Direction::z(), Direction::x(), p).unwrap();
        let pairs = vec![(SettingPair::AB, d.clone())];
        let comp = completeness(&pairs, Some(0.0)).unwrap().max_violation;
        let oi = outcome_independence(&pairs, Some(0.0)).unwrap().max_violation;
        let m = marginals(&d);
        let p_min = m.alice.iter().chain(&m.bob).copied().fold(1.0, f64::min);
        prop_assert!(comp <= oi + 1e-15);
        prop_assert!(oi <= comp / p_min + 1e-12);
        // Completeness at tolerance τ bounds the covariance by 4τ.
        let ea = m.alice[0] - m.alice[1];
        let eb = m.bob[0] - m.bob[1];
        prop_assert!((correlation(&d) - ea * eb).abs() <= 4.0 * comp + 1e-15);
    }
}

#[test]
fn factorized_tables_satisfy_both_conditions_exactly() {
    let pa = [0.3, 0.7];
    let pb = [0.6, 0.4];
    let p = [
        [pa[0] * pb[0], pa[0] * pb[1]],
        [pa[1] * pb[0], pa[1] * pb[1]],
    ];
    let d = JointDistribution::from_table(Direction::z(), Direction::x(), p).unwrap();
    let pairs = vec![(SettingPair::AB, d)];
    assert!(completeness(&pairs, Some(1e-12)).unwrap().pass);
    assert!(outcome_independence(&pairs, Some(1e-12)).unwrap().pass);
}

#[test]
fn adapted_error_shrinks_with_n() {
    // Fixed ψ and two-cell resolution, dilated so that n = 1000 fits.
    let mut r = rng(77);
    let cells = random_resolution(vec![8], &[4, 4], &mut r);
    let d = 256;
    let id = Projector::identity(vec![d]).unwrap();
    let res = Resolution::new(cells.projectors().iter().map(|p| p.tensor(&id)).collect()).unwrap();
    let psi = tensor(
        &StateVector::random(vec![8], &mut r).unwrap(),
        &StateVector::basis(vec![d], 0).unwrap(),
    );
    let born_p = res.born(&psi).unwrap();
    let mut last = f64::INFINITY;
    for n in [10, 100, 1000] {
        let e = expand_adapted(&psi, &res, n).unwrap();
        let dist = counting_distribution(&e, &res).unwrap();
        let err = dist
            .probabilities()
            .iter()
            .zip(&born_p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1.0 / n as f64, "n={n}: {err}");
        assert!(err <= last, "n={n}: {err} > {last}");
        last = err;
    }
}

#[test]
fn refinement_without_cats_is_consistent() {
    // Born values 1/4 and 3/4 are exact multiples of 1/n for every n below.
    let psi = StateVector::from_real(vec![2, 64], &{
        let mut v = vec![0.0; 128];
        v[0] = 1.0;
        v[64] = 3f64.sqrt();
        v
    })
    .unwrap();
    let p =
        Projector::from_range_basis(vec![2], vec![vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]])
            .unwrap()
            .tensor(&Projector::identity(vec![64]).unwrap());
    let res = Resolution::binary(p).unwrap();
    let reference = counting_distribution(&expand_adapted(&psi, &res, 4).unwrap(), &res).unwrap();
    for n in [8, 20, 64] {
        let dist = counting_distribution(&expand_adapted(&psi, &res, n).unwrap(), &res).unwrap();
        assert_eq!(dist.cats, 0);
        for (a, b) in dist.probabilities().iter().zip(reference.probabilities()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}
