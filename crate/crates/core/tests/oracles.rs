//! Frozen values and independent recomputations.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qmlab::conditions::{deterministic_strategy_max_chsh, implication_audit, Model, ModelFlags};
use qmlab::eprb::{
    cell_projector, chsh, correlation, joint_distribution, singlet_state, sweep_theta, Backend,
    Scenario, CELLS,
};
use qmlab::expansion::{
    classify, counting_distribution, expand_adapted, expand_generic, imprecise_probability,
    tensor_expansion, ClassCounts,
};
use qmlab::hilbert::{
    born, lift, spin_projector, Direction, Outcome, Projector, Resolution, StateVector,
};
use qmlab::lambda_one::contextuality_audit;
use qmlab::C64;

type Dense = Vec<Vec<C64>>;

fn kron(a: &Dense, b: &Dense) -> Dense {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![C64::new(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn eye(d: usize) -> Dense {
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect()
}

/// `½(I + s a·σ)` written out entry by entry.
fn dense_spin(a: [f64; 3], s: f64) -> Dense {
    let [x, y, z] = a;
    vec![
        vec![
            C64::new(0.5 * (1.0 + s * z), 0.0),
            C64::new(0.5 * s * x, -0.5 * s * y),
        ],
        vec![
            C64::new(0.5 * s * x, 0.5 * s * y),
            C64::new(0.5 * (1.0 - s * z), 0.0),
        ],
    ]
}

fn dense_born(m: &Dense, psi: &[C64]) -> f64 {
    let image: Vec<C64> = m
        .iter()
        .map(|row| row.iter().zip(psi).map(|(a, b)| a * b).sum())
        .collect();
    let num: f64 = image.iter().map(|c| c.norm_sqr()).sum();
    let den: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
    num / den
}

#[test]
fn lifted_spin_projectors_match_dense_kronecker_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (d_a, d_b) = (3, 2);
    for _ in 0..20 {
        let v: [f64; 3] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let w: [f64; 3] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let x = Direction::normalized(v[0], v[1], v[2]).unwrap();
        let y = Direction::normalized(w[0], w[1], w[2]).unwrap();
        let psi = StateVector::random(vec![2, d_a, 2, d_b], &mut rng).unwrap();
        for &(s, t) in &CELLS {
            let dense = kron(
                &kron(
                    &kron(&dense_spin(x.components(), s.value() as f64), &eye(d_a)),
                    &dense_spin(y.components(), t.value() as f64),
                ),
                &eye(d_b),
            );
            let p = cell_projector(&x, &y, s, t, d_a, d_b).unwrap();
            let got = born(&psi, &p).unwrap();
            assert!((got - dense_born(&dense, psi.amplitudes())).abs() < 1e-12);
        }
        let alice = lift(
            &spin_projector(&x, Outcome::Minus).unwrap(),
            0,
            &[2, d_a, 2, d_b],
        )
        .unwrap();
        let dense = kron(
            &kron(&dense_spin(x.components(), -1.0), &eye(d_a)),
            &eye(2 * d_b),
        );
        assert!((born(&psi, &alice).unwrap() - dense_born(&dense, psi.amplitudes())).abs() < 1e-12);
    }
}

#[test]
fn singlet_joint_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let psi = singlet_state(2, 2).unwrap();
    for _ in 0..50 {
        let x = Direction::normalized(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        )
        .unwrap();
        let y = Direction::normalized(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        )
        .unwrap();
        let cos = x.dot(&y);
        let d = joint_distribution(&psi, &x, &y, Backend::Born, None).unwrap();
        for &(s, t) in &CELLS {
            let oracle = 0.25 * (1.0 - (s.value() * t.value()) as f64 * cos);
            assert!((d.get(s, t) - oracle).abs() < 1e-12);
        }
        assert!((correlation(&d) + cos).abs() < 1e-12);
    }
}

#[test]
fn singlet_sixty_degrees_plus_plus() {
    let psi = singlet_state(1, 1).unwrap();
    let d = joint_distribution(
        &psi,
        &Direction::z(),
        &Direction::in_xz_plane(PI / 3.0),
        Backend::Born,
        None,
    )
    .unwrap();
    assert!((d.get(Outcome::Plus, Outcome::Plus) - 0.125).abs() < 1e-12);
}

#[test]
fn tsirelson_from_correlation_oracle() {
    let angles = [
        (0.0, PI / 4.0, 1.0),
        (0.0, 3.0 * PI / 4.0, -1.0),
        (PI / 2.0, PI / 4.0, 1.0),
        (PI / 2.0, 3.0 * PI / 4.0, 1.0),
    ];
    let oracle: f64 = angles
        .iter()
        .map(|(a, b, sign)| -sign * f64::cos(a - b))
        .sum();
    assert!((oracle.abs() - 2.0 * SQRT_2).abs() < 1e-12);
    let s = Scenario::tsirelson(1, 1);
    let r = chsh(&s.state_vector().unwrap(), &s, Backend::Born).unwrap();
    assert!((r.s - oracle).abs() < 1e-12);
    assert!((r.abs_s() - 2.828_427_1).abs() < 1e-7);
}

#[test]
fn exhaustive_strategy_enumeration() {
    let mut best = 0;
    for bits in 0..16 {
        let o = |k: u32| if bits >> k & 1 == 1 { -1 } else { 1 };
        let (a, ap, b, bp) = (o(0), o(1), o(2), o(3));
        let s: i32 = a * b - a * bp + ap * b + ap * bp;
        best = best.max(s.abs());
    }
    assert_eq!(best, 2);
    assert_eq!(deterministic_strategy_max_chsh(), best);
}

const S: usize = 128;

fn qubit_resolution() -> (Resolution, Projector) {
    let p = Projector::from_range_basis(vec![2, S], {
        let mut basis = Vec::new();
        for j in 0..S {
            let mut v = vec![C64::new(0.0, 0.0); 2 * S];
            v[j] = C64::new(1.0, 0.0);
            basis.push(v);
        }
        basis
    })
    .unwrap();
    (Resolution::binary(p.clone()).unwrap(), p)
}

fn state_with_born(p: f64) -> StateVector {
    let mut v = vec![0.0; 2 * S];
    v[0] = p.sqrt();
    v[S] = (1.0 - p).sqrt();
    StateVector::from_real(vec![2, S], &v).unwrap()
}

#[test]
fn exact_quarter_splits_25_75() {
    let (res, p) = qubit_resolution();
    let e = expand_adapted(&state_with_born(0.25), &res, 100).unwrap();
    assert_eq!(
        classify(&e, &p).unwrap(),
        ClassCounts {
            eig1: 25,
            eig0: 75,
            cat: 0
        }
    );
    let iv = imprecise_probability(&e, &p).unwrap();
    assert_eq!((iv.lower(), iv.upper()), (0.25, 0.25));
}

#[test]
fn one_third_splits_3_6_1() {
    let (res, p) = qubit_resolution();
    let psi = state_with_born(1.0 / 3.0);
    let e = expand_adapted(&psi, &res, 10).unwrap();
    assert_eq!(
        classify(&e, &p).unwrap(),
        ClassCounts {
            eig1: 3,
            eig0: 6,
            cat: 1
        }
    );
    let dist = counting_distribution(&e, &res).unwrap();
    assert_eq!(dist.probabilities()[0], 0.3);
    let iv = imprecise_probability(&e, &p).unwrap();
    assert!((iv.lower() - 0.3).abs() < 1e-15 && (iv.upper() - 0.4).abs() < 1e-15);
    assert!(iv.contains(1.0 / 3.0, 0.0));
}

#[test]
fn singlet_counting_halves_at_full_size() {
    let psi = singlet_state(32, 32).unwrap();
    let z = Direction::z();
    let d = joint_distribution(&psi, &z, &z, Backend::Counting, Some(1000)).unwrap();
    assert_eq!(d.cells(), [0.0, 0.5, 0.5, 0.0]);
    assert_eq!(d.cat_mass, 0.0);
}

#[test]
fn product_tensor_expansion_gives_one_eighth() {
    // Alice: born 1/4 for +1 along z with n_a = 4; Bob: born 1/2 with n_b = 2.
    let d = 4;
    let side = |p_plus: f64, n: usize| {
        let mut v = vec![0.0; 2 * d];
        v[0] = p_plus.sqrt();
        v[d] = (1.0 - p_plus).sqrt();
        let psi = StateVector::from_real(vec![2, d], &v).unwrap();
        let plus = lift(
            &spin_projector(&Direction::z(), Outcome::Plus).unwrap(),
            0,
            &[2, d],
        )
        .unwrap();
        let res = Resolution::binary(plus.clone()).unwrap();
        let e = expand_adapted(&psi, &res, n).unwrap();
        assert_eq!(classify(&e, &plus).unwrap().eig1, 1);
        e
    };
    let joint = tensor_expansion(&side(0.25, 4), &side(0.5, 2));
    let z = Direction::z();
    let p = cell_projector(&z, &z, Outcome::Plus, Outcome::Plus, d, d).unwrap();
    let counts = classify(&joint, &p).unwrap();
    assert_eq!(counts.eig1, 1);
    assert_eq!(counts.eig1 as f64 / joint.n() as f64, 0.125);
}

#[test]
fn generic_single_microstate_is_a_cat() {
    let psi = StateVector::from_real(vec![2], &[1.0, 1.0]).unwrap();
    let e = expand_generic(&psi, 1, 0).unwrap();
    assert_eq!(e.microstates()[0], psi);
    let p = spin_projector(&Direction::z(), Outcome::Plus).unwrap();
    assert_eq!(
        classify(&e, &p).unwrap(),
        ClassCounts {
            eig1: 0,
            eig0: 0,
            cat: 1
        }
    );
    let iv = imprecise_probability(&e, &p).unwrap();
    assert_eq!((iv.lower(), iv.upper()), (0.0, 1.0));
}

#[test]
fn generic_two_way_split_of_e0_plus_e1() {
    let psi = StateVector::from_real(vec![2], &[1.0, 1.0]).unwrap();
    for seed in 0..5 {
        let e = expand_generic(&psi, 2, seed).unwrap();
        for m in e.microstates() {
            assert!((m.norm() - 1.0).abs() < 1e-12);
        }
        assert!(
            e.microstates()[0]
                .inner(&e.microstates()[1])
                .unwrap()
                .norm()
                < 1e-12
        );
    }
}

#[test]
fn sweep_rows() {
    let rows = sweep_theta(&[PI, PI / 2.0, 0.1]).unwrap();
    assert!((rows[0].correlation - 1.0).abs() < 1e-12);
    assert!(rows[1].correlation.abs() < 1e-12);
    // ½ − θ²/24 + θ⁴/720
    let series = 0.5 - 0.01 / 24.0 + 1e-4 / 720.0;
    assert!((rows[2].ratio - series).abs() < 1e-9);
    assert!((rows[2].ratio - 0.49958).abs() < 1e-5);
}

#[test]
fn born_examples() {
    let psi = StateVector::from_real(vec![2], &[1.0, 1.0]).unwrap();
    let up = spin_projector(&Direction::z(), Outcome::Plus).unwrap();
    assert!((born(&psi, &up).unwrap() - 0.5).abs() < 1e-15);
    let x_up = spin_projector(&Direction::x(), Outcome::Plus).unwrap();
    let unit = StateVector::from_real(vec![2], &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
    assert!((born(&unit, &x_up).unwrap() - 1.0).abs() < 1e-15);
    let e1 = StateVector::basis(vec![2], 1).unwrap();
    assert_eq!(born(&e1, &up).unwrap(), 0.0);
    let id = Projector::identity(vec![2]).unwrap();
    assert_eq!(born(&psi, &id).unwrap(), 1.0);
}

#[test]
fn builtin_model_flags_are_consistent() {
    for m in Model::ALL {
        let (loc, unique) = m.declared_loc_unique();
        let ind = m != Model::LambdaOne;
        let bell = m == Model::DeterministicLocal;
        assert!(
            implication_audit(ModelFlags {
                loc,
                ind,
                unique,
                bell
            })
            .consistent(),
            "{m}"
        );
    }
}

#[test]
fn contextuality_of_singlet_ensembles_at_full_size() {
    let psi = singlet_state(32, 32).unwrap();
    let z = Direction::z();
    let r = contextuality_audit(&psi, &z, &z, &Direction::x(), 1000).unwrap();
    assert!(r.disjoint, "{r:?}");
    assert_eq!(r.alice_counts[0], [500, 500]);
    assert!(r.alice_counts[1][0].abs_diff(500) <= 3);
    assert!(r.setting_dependent);
}
