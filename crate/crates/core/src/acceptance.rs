//! End-to-end acceptance criteria. Each check returns a one-line outcome;
//! the test suite and `qmlab verify` share them.

use std::f64::consts::SQRT_2;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conditions::{
    condition_report, deterministic_strategy_max_chsh, parameter_independence, CheckTolerances,
    Model,
};
use crate::eprb::{
    chsh, conditional, joint_distribution, marginals, product_state, scenario_distributions,
    singlet_state, sweep_theta, Backend, Scenario, Side, Spinor, StateSpec, CELLS,
};
use crate::expansion::{
    classify, counting_distribution, expand_adapted, expand_generic, imprecise_probability,
    tensor_expansion,
};
use crate::format::sig9;
use crate::hilbert::{
    born, lift, orthogonalize, random_complex, spin_projector, Direction, Outcome, Projector,
    Resolution, StateVector,
};
use crate::invariance::equal_norm_symmetry_witness;
use crate::lambda_one::{build_labelled_ensembles, run_on_ensembles, Schedule};
use crate::{Result, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: String,
    pub title: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {} {}: {} ({:.1} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.seconds
        )
    }
}

fn timed(id: &str, title: &str, f: impl FnOnce() -> Result<(bool, String)>) -> CriterionOutcome {
    let start = Instant::now();
    let (pass, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionOutcome {
        id: id.to_string(),
        title: title.to_string(),
        pass,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Identifiers of all criteria in run order. `1b` is supplementary.
pub const IDS: [&str; 12] = [
    "1", "1b", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11",
];

pub fn run(id: &str) -> Option<CriterionOutcome> {
    Some(match id {
        "1" => adapted_counting_vs_born(),
        "1b" => adapted_counting_vs_born_dilated(),
        "2" => imprecise_containment(),
        "3" => tsirelson(),
        "4" => classical_bound(),
        "5" => product_completeness(),
        "6" => outcome_independence_violation(),
        "7" => parameter_independence_random(),
        "8" => lambda_one_monte_carlo(),
        "9" => swap_witnesses(),
        "10" => quadratic_theta(),
        "11" => condition_table(),
        _ => return None,
    })
}

pub fn run_all() -> Vec<CriterionOutcome> {
    IDS.iter().filter_map(|id| run(id)).collect()
}

/// Orthonormal basis of `C^dim` from seeded Gaussian vectors.
fn random_basis(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while basis.len() < dim {
        let mut v = random_complex(dim, rng);
        let r = orthogonalize(&mut v, &basis);
        if r > 1e-6 {
            v.iter_mut().for_each(|c| *c /= r);
            basis.push(v);
        }
    }
    basis
}

/// Four cells of equal rank from a random orthonormal basis.
fn random_four_cells(dim: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<Vec<C64>>>> {
    let mut basis = random_basis(dim, rng);
    let r = dim / 4;
    let mut cells = Vec::new();
    for _ in 0..3 {
        let rest = basis.split_off(r);
        cells.push(basis);
        basis = rest;
    }
    cells.push(basis);
    Ok(cells)
}

fn max_cell_error(psi: &StateVector, res: &Resolution, n: usize) -> Result<f64> {
    let e = expand_adapted(psi, res, n)?;
    let dist = counting_distribution(&e, res)?;
    let born = res.born(psi)?;
    Ok(dist
        .probabilities()
        .iter()
        .zip(&born)
        .map(|(m, b)| (m - b).abs())
        .fold(0.0, f64::max))
}

const C1_INSTANCES: usize = 100;
const C1_DIM: usize = 64;
const C1_SIZES: [usize; 3] = [10, 100, 1000];

/// Adapted counting against Born at ambient dimension 64.
pub fn adapted_counting_vs_born() -> CriterionOutcome {
    timed("1", "adapted counting vs Born (dim 64)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut parts = Vec::new();
        let mut pass = true;
        for n in C1_SIZES {
            let (mut ok, mut worst, mut first_err) = (0, 0.0f64, None);
            for _ in 0..C1_INSTANCES {
                let psi = StateVector::random(vec![C1_DIM], &mut rng)?;
                let cells = random_four_cells(C1_DIM, &mut rng)?;
                let res = Resolution::new(
                    cells
                        .into_iter()
                        .map(|b| Projector::from_range_basis(vec![C1_DIM], b))
                        .collect::<Result<_>>()?,
                )?;
                match max_cell_error(&psi, &res, n) {
                    Ok(err) if err <= 3.0 / n as f64 => {
                        ok += 1;
                        worst = worst.max(err);
                    }
                    Ok(err) => worst = worst.max(err),
                    Err(e) => {
                        first_err.get_or_insert(e.to_string());
                    }
                }
            }
            pass &= ok == C1_INSTANCES;
            parts.push(match first_err {
                None => format!("n={n}: {ok}/{C1_INSTANCES} ok, max err {worst:.3e}"),
                Some(e) => format!("n={n}: {ok}/{C1_INSTANCES} ok ({e})"),
            });
        }
        Ok((pass, parts.join("; ")))
    })
}

/// The same comparison with `ψ ⊗ e_0` on a dilated space `64 × D`, `D`
/// chosen so every cell has rank above its microstate count.
pub fn adapted_counting_vs_born_dilated() -> CriterionOutcome {
    timed(
        "1b",
        "adapted counting vs Born, spatially dilated (supplementary)",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(102);
            let mut parts = Vec::new();
            let mut pass = true;
            for n in C1_SIZES {
                let mut worst = 0.0f64;
                let mut max_dim = 0;
                for _ in 0..C1_INSTANCES {
                    let base = StateVector::random(vec![C1_DIM], &mut rng)?;
                    let cells = random_four_cells(C1_DIM, &mut rng)?;
                    let projectors: Vec<Projector> = cells
                        .into_iter()
                        .map(|b| Projector::from_range_basis(vec![C1_DIM], b))
                        .collect::<Result<_>>()?;
                    let p_max = projectors
                        .iter()
                        .map(|p| born(&base, p))
                        .collect::<Result<Vec<_>>>()?
                        .into_iter()
                        .fold(0.0, f64::max);
                    let rank = C1_DIM / 4;
                    let d = ((n as f64 * p_max + 2.0) / rank as f64).ceil().max(1.0) as usize;
                    max_dim = max_dim.max(C1_DIM * d);
                    let psi = crate::hilbert::tensor(&base, &StateVector::basis(vec![d], 0)?);
                    let id = Projector::identity(vec![d])?;
                    let res = Resolution::new(projectors.iter().map(|p| p.tensor(&id)).collect())?;
                    worst = worst.max(max_cell_error(&psi, &res, n)?);
                }
                pass &= worst <= 3.0 / n as f64;
                parts.push(format!("n={n}: max err {worst:.3e} (dim ≤ {max_dim})"));
            }
            Ok((pass, parts.join("; ")))
        },
    )
}

/// Born probability inside the imprecise interval of a generic expansion.
pub fn imprecise_containment() -> CriterionOutcome {
    timed("2", "imprecise containment", || {
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        let mut failures = 0;
        let mut nontrivial = 0;
        for trial in 0..1000 {
            let dim = rng.gen_range(3..=16);
            let n = rng.gen_range(1..=dim);
            let psi = StateVector::random(vec![dim], &mut rng)?;
            let e = expand_generic(&psi, n, trial)?;
            // Half the projectors contain some microstates, so the lower
            // bound is not always zero.
            let mut vectors: Vec<Vec<C64>> = Vec::new();
            if trial % 2 == 0 {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.shuffle(&mut rng);
                let keep = rng.gen_range(0..=n);
                vectors.extend(
                    idx[..keep]
                        .iter()
                        .map(|&i| e.microstates()[i].amplitudes().to_vec()),
                );
            }
            let extra = rng.gen_range(0..dim.saturating_sub(vectors.len()).max(1));
            vectors.extend((0..extra).map(|_| random_complex(dim, &mut rng)));
            let p = Projector::span(vec![dim], &vectors)?;
            let interval = imprecise_probability(&e, &p)?;
            if interval.lower() > 0.0 {
                nontrivial += 1;
            }
            if !interval.contains(born(&psi, &p)?, 1e-9) {
                failures += 1;
            }
        }
        Ok((
            failures == 0,
            format!("1000 triples, {failures} failures, {nontrivial} with positive lower bound"),
        ))
    })
}

pub fn tsirelson() -> CriterionOutcome {
    timed("3", "Tsirelson reproduction", || {
        let scenario = Scenario::default();
        let psi = scenario.state_vector()?;
        let born_s = chsh(&psi, &scenario, Backend::Born)?.abs_s();
        let counting_s = chsh(&psi, &scenario, Backend::Counting)?.abs_s();
        let db = (born_s - 2.0 * SQRT_2).abs();
        let dc = (counting_s - 2.0 * SQRT_2).abs();
        Ok((
            db <= 1e-9 && dc <= 0.05,
            format!(
                "born |S| = {} (gap {db:.1e}); counting n=1000 |S| = {} (gap {dc:.1e})",
                sig9(born_s),
                sig9(counting_s)
            ),
        ))
    })
}

fn random_direction(rng: &mut ChaCha8Rng) -> Result<Direction> {
    loop {
        let v: [f64; 3] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        if v.iter().map(|x| x * x).sum::<f64>() > 1e-4 {
            return Direction::normalized(v[0], v[1], v[2]);
        }
    }
}

fn random_spinor(rng: &mut ChaCha8Rng) -> Result<Spinor> {
    let v = random_complex(2, rng);
    Spinor::new(v[0], v[1])
}

fn random_scenario(rng: &mut ChaCha8Rng, d: usize) -> Result<Scenario> {
    Ok(Scenario {
        a: random_direction(rng)?,
        a_prime: random_direction(rng)?,
        b: random_direction(rng)?,
        b_prime: random_direction(rng)?,
        d_a: d,
        d_b: d,
        ..Scenario::default()
    })
}

pub fn classical_bound() -> CriterionOutcome {
    timed("4", "classical bound", || {
        let enumerated = deterministic_strategy_max_chsh();
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let mut s = random_scenario(&mut rng, 1)?;
            s.state = StateSpec::Product {
                chi_a: random_spinor(&mut rng)?,
                chi_b: random_spinor(&mut rng)?,
            };
            let psi = s.state_vector()?;
            worst = worst.max(chsh(&psi, &s, Backend::Born)?.abs_s());
        }
        Ok((
            enumerated == 2 && worst <= 2.0 + 1e-9,
            format!(
                "16 strategies max |S| = {enumerated}; 10^4 product states max |S| = {}",
                sig9(worst)
            ),
        ))
    })
}

pub fn product_completeness() -> CriterionOutcome {
    timed("5", "completeness for product states", || {
        let mut rng = ChaCha8Rng::seed_from_u64(505);
        let d = 16;
        let mut integer_mismatches = 0;
        let mut worst_born: f64 = 0.0;
        for _ in 0..50 {
            let (chi_a, chi_b) = (random_spinor(&mut rng)?, random_spinor(&mut rng)?);
            let (x, y) = (random_direction(&mut rng)?, random_direction(&mut rng)?);
            let (n_a, n_b) = (rng.gen_range(2..=12), rng.gen_range(2..=12));
            let side = |chi: &Spinor, dir: &Direction, n: usize| -> Result<_> {
                let local = crate::hilbert::tensor(
                    &StateVector::new(vec![2], chi.components().to_vec())?.normalized()?,
                    &StateVector::basis(vec![d], 0)?,
                );
                let plus = lift(&spin_projector(dir, Outcome::Plus)?, 0, &[2, d])?;
                let minus = lift(&spin_projector(dir, Outcome::Minus)?, 0, &[2, d])?;
                let res = Resolution::new(vec![plus, minus])?;
                let e = expand_adapted(&local, &res, n)?;
                let counts = counting_distribution(&e, &res)?.eig1;
                Ok((e, counts))
            };
            let (ea, ma) = side(&chi_a, &x, n_a)?;
            let (eb, mb) = side(&chi_b, &y, n_b)?;
            let joint = tensor_expansion(&ea, &eb);
            for &(s, t) in &CELLS {
                let p = crate::eprb::cell_projector(&x, &y, s, t, d, d)?;
                if classify(&joint, &p)?.eig1 != ma[s.index()] * mb[t.index()] {
                    integer_mismatches += 1;
                }
            }
            let psi = product_state(&chi_a, &chi_b, d, d)?;
            let dist = joint_distribution(&psi, &x, &y, Backend::Born, None)?;
            worst_born = worst_born.max(crate::conditions::completeness_violation(&dist));
        }
        Ok((
            integer_mismatches == 0 && worst_born <= 1e-12,
            format!("50 states: {integer_mismatches} count mismatches; Born max |p(s,t) − p(s)p(t)| = {worst_born:.2e}"),
        ))
    })
}

pub fn outcome_independence_violation() -> CriterionOutcome {
    timed(
        "6",
        "outcome independence violation (singlet, a = b)",
        || {
            let psi = singlet_state(1, 1)?;
            let z = Direction::z();
            let d = joint_distribution(&psi, &z, &z, Backend::Born, None)?;
            let gap =
                (marginals(&d).alice[0] - conditional(&d, Side::Bob, Outcome::Plus)?[0]).abs();
            Ok((
                (gap - 0.5).abs() <= 1e-9,
                format!("|p(s=+1) − p(s=+1 | t=+1)| = {}", sig9(gap)),
            ))
        },
    )
}

pub fn parameter_independence_random() -> CriterionOutcome {
    timed("7", "parameter independence", || {
        let mut rng = ChaCha8Rng::seed_from_u64(707);
        let n = 100;
        let (mut born_worst, mut counting_worst) = (0.0f64, 0.0f64);
        for i in 0..100 {
            let mut s = random_scenario(&mut rng, 16)?;
            s.n = n;
            if i % 2 == 1 {
                s.state = StateSpec::Product {
                    chi_a: random_spinor(&mut rng)?,
                    chi_b: random_spinor(&mut rng)?,
                };
            }
            let psi = s.state_vector()?;
            let born_d = scenario_distributions(&psi, &s, Backend::Born)?;
            born_worst = born_worst.max(parameter_independence(&born_d, None)?.max_violation);
            let count_d = scenario_distributions(&psi, &s, Backend::Counting)?;
            counting_worst =
                counting_worst.max(parameter_independence(&count_d, None)?.max_violation);
        }
        let tol = CheckTolerances::for_backend(Backend::Counting, n).parameter_independence;
        Ok((
            born_worst <= 1e-12 && counting_worst <= tol,
            format!("100 scenarios: born max shift {born_worst:.2e}; counting n={n} max shift {counting_worst:.3e} (tol {tol:.3e})"),
        ))
    })
}

pub fn lambda_one_monte_carlo() -> CriterionOutcome {
    timed("8", "λ-ONE Monte Carlo", || {
        let scenario = Scenario::default();
        let n = scenario.n;
        let trials: u64 = 100_000;
        let psi = scenario.state_vector()?;
        let ensembles = build_labelled_ensembles(&psi, &scenario, n)?;
        let r = run_on_ensembles(&ensembles, trials, 0x1a_0e, Schedule::RoundRobin)?;
        let mut worst_ratio: f64 = 0.0;
        for pr in &r.pairs {
            for (f, p) in pr.frequencies.iter().zip(pr.counting) {
                let allowance = 4.0 * (p * (1.0 - p) / trials as f64).sqrt() + 3.0 / n as f64;
                worst_ratio = worst_ratio.max((f - p).abs() / allowance);
            }
        }
        let s = r.chsh.unwrap_or(0.0).abs();
        let cat_ok = r.cat_fraction <= 3.0 / n as f64;
        Ok((
            worst_ratio <= 1.0 && s > 2.5 && cat_ok,
            format!(
                "|Ŝ| = {s:.4} ± {:.4}; worst cell deviation {worst_ratio:.3} of allowance; cat fraction {:.2e}",
                r.chsh_se.unwrap_or(0.0),
                r.cat_fraction
            ),
        ))
    })
}

pub fn swap_witnesses() -> CriterionOutcome {
    timed("9", "swap / invariance witnesses", || {
        let mut rng = ChaCha8Rng::seed_from_u64(909);
        let (mut unitarity, mut displacement, mut failures) = (0.0f64, 0.0f64, 0);
        for trial in 0..100 {
            let dim = rng.gen_range(4..=16);
            let n = rng.gen_range(2..=dim);
            let psi = StateVector::random(vec![dim], &mut rng)?;
            let e = expand_generic(&psi, n, trial)?;
            let i = rng.gen_range(0..n);
            let j = (i + rng.gen_range(1..n)) % n;
            let w = equal_norm_symmetry_witness(&psi, &e, i, j)?;
            for c in &w.checks {
                match c.check.as_str() {
                    "swap_unitarity" => unitarity = unitarity.max(c.max_residual),
                    "parent_fixed" => displacement = displacement.max(c.max_residual),
                    _ => {}
                }
            }
            if !w.pass() {
                failures += 1;
            }
        }
        Ok((
            unitarity <= 1e-12 && displacement <= 1e-10 && failures == 0,
            format!("100 pairs: unitarity {unitarity:.2e}, ‖Uψ − ψ‖/‖ψ‖ {displacement:.2e}, {failures} revalidation failures"),
        ))
    })
}

pub fn quadratic_theta() -> CriterionOutcome {
    timed("10", "quadratic θ behaviour", || {
        let rows = sweep_theta(&[0.1, 0.05, 0.025])?;
        let ok = rows.iter().all(|r| (0.4995..=0.5).contains(&r.ratio));
        let text: Vec<String> = rows
            .iter()
            .map(|r| format!("θ={}: {}", r.theta, sig9(r.ratio)))
            .collect();
        Ok((ok, text.join(", ")))
    })
}

pub fn condition_table() -> CriterionOutcome {
    timed("11", "condition report table", || {
        let report = condition_report(&Model::ALL, &Scenario::default())?;
        let mut problems = Vec::new();
        for row in &report.rows {
            let pi = row.parameter_independence.pass;
            let oi = row.outcome_independence.pass;
            let comp = row.completeness.pass;
            let bell = row.flags.bell;
            let expected = match row.model {
                Model::BornQm | Model::LambdaManyCounting => pi && !oi && !comp && !bell,
                Model::LambdaOne => {
                    row.factorizability.as_ref().is_some_and(|f| f.pass) && !row.flags.ind && !bell
                }
                Model::DeterministicLocal => {
                    pi && oi && comp && row.factorizability.as_ref().is_some_and(|f| f.pass) && bell
                }
            } && (row.model != Model::LambdaManyCounting || !row.flags.unique);
            if !expected {
                problems.push(format!("{} pattern", row.model));
            }
            if !row.audit.consistent() {
                problems.push(format!("{} audit", row.model));
            }
        }
        Ok((
            problems.is_empty() && report.rows.len() == 4,
            if problems.is_empty() {
                "four rows match the expected flags; audit consistent".to_string()
            } else {
                format!("mismatches: {}", problems.join(", "))
            },
        ))
    })
}
