//! One-world deterministic model: a single microstate is drawn uniformly
//! from the expansion adapted to the chosen setting pair, and it fixes both
//! outcomes.
//!
//! Ensembles are classified once and then reduced to labels, so Monte Carlo
//! runs never hold more than one expansion in memory. Per-trial randomness
//! comes from a ChaCha stream selected by the global trial index, which
//! makes results independent of how trials are sharded across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{ConditionVerdict, DeterministicModel, LambdaPi};
use crate::eprb::{
    alice_projector, bob_projector, joint_resolution, Backend, JointDistribution, Scenario,
    SettingPair, CELLS,
};
use crate::expansion::{classify_state, expand_adapted, EquiampExpansion, MicrostateClass};
use crate::hilbert::{inner, Direction, Outcome, Projector, StateVector};
use crate::{tolerance, Error, Result};

const SHARD: u64 = 4096;

/// Adapted expansions for all four setting pairs.
pub fn build_ensembles(
    psi: &StateVector,
    scenario: &Scenario,
    n: usize,
) -> Result<Vec<(SettingPair, EquiampExpansion)>> {
    SettingPair::ALL
        .iter()
        .map(|&pair| build_ensemble(psi, scenario, pair, n).map(|e| (pair, e)))
        .collect()
}

fn spatial_dims(psi: &StateVector) -> Result<(usize, usize)> {
    match psi.dims() {
        [2, d_a, 2, d_b] => Ok((*d_a, *d_b)),
        dims => Err(Error::DimensionMismatch {
            expected: vec![2, 0, 2, 0],
            actual: dims.to_vec(),
        }),
    }
}

pub fn build_ensemble(
    psi: &StateVector,
    scenario: &Scenario,
    pair: SettingPair,
    n: usize,
) -> Result<EquiampExpansion> {
    let (d_a, d_b) = spatial_dims(psi)?;
    let (x, y) = scenario.directions(pair);
    expand_adapted(psi, &joint_resolution(&x, &y, d_a, d_b)?, n)
}

fn local_label(xi: &StateVector, plus: &Projector) -> Result<Option<Outcome>> {
    Ok(match classify_state(xi, plus)? {
        MicrostateClass::Eig1 => Some(Outcome::Plus),
        MicrostateClass::Eig0 => Some(Outcome::Minus),
        MicrostateClass::Cat => None,
    })
}

/// An ensemble reduced to the outcomes each microstate fixes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelledEnsemble {
    pub pair: SettingPair,
    pub x: Direction,
    pub y: Direction,
    /// Joint cell (index into [`CELLS`]) per microstate; `None` for cats.
    pub cells: Vec<Option<usize>>,
    /// Alice's outcome along `x` per microstate.
    pub alice: Vec<Option<Outcome>>,
    /// Bob's outcome along `y` per microstate.
    pub bob: Vec<Option<Outcome>>,
}

impl LabelledEnsemble {
    pub fn from_expansion(
        e: &EquiampExpansion,
        pair: SettingPair,
        x: Direction,
        y: Direction,
    ) -> Result<Self> {
        let (d_a, d_b) = spatial_dims(e.parent())?;
        let resolution = joint_resolution(&x, &y, d_a, d_b)?;
        let pa = alice_projector(&x, Outcome::Plus, d_a, d_b)?;
        let pb = bob_projector(&y, Outcome::Plus, d_a, d_b)?;
        let mut cells = Vec::with_capacity(e.n());
        let mut alice = Vec::with_capacity(e.n());
        let mut bob = Vec::with_capacity(e.n());
        for xi in e.microstates() {
            let mut home = None;
            for (i, p) in resolution.projectors().iter().enumerate() {
                if classify_state(xi, p)? == MicrostateClass::Eig1 {
                    home = Some(i);
                }
            }
            cells.push(home);
            alice.push(local_label(xi, &pa)?);
            bob.push(local_label(xi, &pb)?);
        }
        Ok(Self {
            pair,
            x,
            y,
            cells,
            alice,
            bob,
        })
    }

    pub fn n(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_counts(&self) -> [usize; 4] {
        let mut c = [0; 4];
        for i in self.cells.iter().flatten() {
            c[*i] += 1;
        }
        c
    }

    pub fn cats(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    /// Number of microstates fixing Alice's outcome `s`.
    pub fn alice_count(&self, s: Outcome) -> usize {
        self.alice.iter().filter(|a| **a == Some(s)).count()
    }

    /// Outcomes fixed by microstate `index`; `None` for a cat.
    pub fn outcomes(&self, index: usize) -> Option<(Outcome, Outcome)> {
        self.cells[index].map(|c| CELLS[c])
    }

    /// The uniform-`ρ` average, i.e. the counting-backend distribution.
    pub fn distribution(&self) -> JointDistribution {
        let n = self.n() as f64;
        let mut p = [[0.0; 2]; 2];
        for (&(s, t), m) in CELLS.iter().zip(self.cell_counts()) {
            p[s.index()][t.index()] = m as f64 / n;
        }
        JointDistribution {
            x: self.x,
            y: self.y,
            p,
            backend: Backend::Counting,
            n: Some(self.n()),
            cat_mass: self.cats() as f64 / n,
        }
    }
}

/// Builds, labels and drops the four ensembles one at a time.
pub fn build_labelled_ensembles(
    psi: &StateVector,
    scenario: &Scenario,
    n: usize,
) -> Result<Vec<LabelledEnsemble>> {
    SettingPair::ALL
        .iter()
        .map(|&pair| labelled_ensemble(psi, scenario, pair, n))
        .collect()
}

pub fn labelled_ensemble(
    psi: &StateVector,
    scenario: &Scenario,
    pair: SettingPair,
    n: usize,
) -> Result<LabelledEnsemble> {
    let e = build_ensemble(psi, scenario, pair, n)?;
    let (x, y) = scenario.directions(pair);
    LabelledEnsemble::from_expansion(&e, pair, x, y)
}

/// λ-ONE as a deterministic model; `λ` runs over the concatenated
/// ensembles and occurs only with its own setting pair.
#[derive(Clone, Debug)]
pub struct LambdaOneModel {
    ensembles: Vec<LabelledEnsemble>,
    offsets: Vec<usize>,
}

impl LambdaOneModel {
    pub fn new(ensembles: Vec<LabelledEnsemble>) -> Self {
        let mut offsets = Vec::with_capacity(ensembles.len());
        let mut acc = 0;
        for e in &ensembles {
            offsets.push(acc);
            acc += e.n();
        }
        Self { ensembles, offsets }
    }

    pub fn ensembles(&self) -> &[LabelledEnsemble] {
        &self.ensembles
    }

    fn locate(&self, lambda: usize) -> Option<(&LabelledEnsemble, usize)> {
        let k = self
            .offsets
            .partition_point(|&o| o <= lambda)
            .checked_sub(1)?;
        let e = &self.ensembles[k];
        let i = lambda - self.offsets[k];
        (i < e.n()).then_some((e, i))
    }
}

impl DeterministicModel for LambdaOneModel {
    fn lambda_count(&self) -> usize {
        self.ensembles.iter().map(LabelledEnsemble::n).sum()
    }

    fn joint(&self, lambda: usize, pair: SettingPair) -> Option<[[f64; 2]; 2]> {
        let (e, i) = self.locate(lambda)?;
        if e.pair != pair {
            return None;
        }
        let (s, t) = e.outcomes(i)?;
        let mut p = [[0.0; 2]; 2];
        p[s.index()][t.index()] = 1.0;
        Some(p)
    }

    fn alice_response(&self, lambda: usize, primed: bool) -> Option<[f64; 2]> {
        let (e, i) = self.locate(lambda)?;
        if e.pair.primes().0 != primed {
            return None;
        }
        e.alice[i].map(delta)
    }

    fn bob_response(&self, lambda: usize, primed: bool) -> Option<[f64; 2]> {
        let (e, i) = self.locate(lambda)?;
        if e.pair.primes().1 != primed {
            return None;
        }
        e.bob[i].map(delta)
    }
}

fn delta(o: Outcome) -> [f64; 2] {
    let mut r = [0.0; 2];
    r[o.index()] = 1.0;
    r
}

/// One draw from an ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub pair: SettingPair,
    pub index: usize,
    /// `None` marks a cat draw, which is skipped.
    pub outcomes: Option<(Outcome, Outcome)>,
}

/// Draws microstate `index` uniformly for global trial `trial`.
pub fn sample_trial(ensemble: &LabelledEnsemble, trial: u64, seed: u64) -> TrialRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let index = rng.gen_range(0..ensemble.n());
    TrialRecord {
        trial,
        pair: ensemble.pair,
        index,
        outcomes: ensemble.outcomes(index),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    Fixed(SettingPair),
    RoundRobin,
}

impl Schedule {
    pub fn pairs(&self) -> Vec<SettingPair> {
        match self {
            Schedule::Fixed(p) => vec![*p],
            Schedule::RoundRobin => SettingPair::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub pair: SettingPair,
    pub trials: u64,
    /// Draws per cell in [`CELLS`] order.
    pub counts: [u64; 4],
    pub cat_skips: u64,
    /// `count / trials`; cat draws stay in the denominator so the
    /// frequencies estimate `m/n`.
    pub frequencies: [f64; 4],
    pub standard_errors: [f64; 4],
    /// `m/n` of the ensemble.
    pub counting: [f64; 4],
    pub correlation: f64,
    pub correlation_se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub n: usize,
    pub trials_per_pair: u64,
    pub seed: u64,
    pub schedule: Schedule,
    pub pairs: Vec<PairResult>,
    /// Present when all four pairs were run.
    pub chsh: Option<f64>,
    pub chsh_se: Option<f64>,
    pub cat_fraction: f64,
}

impl ExperimentResult {
    pub fn pair(&self, pair: SettingPair) -> Option<&PairResult> {
        self.pairs.iter().find(|p| p.pair == pair)
    }
}

/// Records for global trials `range` under `schedule`; `ensembles` must be
/// in the order of `schedule.pairs()`.
pub fn trial_records(
    ensembles: &[LabelledEnsemble],
    seed: u64,
    range: std::ops::Range<u64>,
) -> Vec<TrialRecord> {
    let k = ensembles.len() as u64;
    range
        .map(|t| sample_trial(&ensembles[(t % k) as usize], t, seed))
        .collect()
}

/// Per-ensemble `[cells…, cats]` tallies over global trials `range`.
fn tally(ensembles: &[LabelledEnsemble], seed: u64, range: std::ops::Range<u64>) -> Vec<[u64; 5]> {
    let k = ensembles.len() as u64;
    let mut out = vec![[0u64; 5]; ensembles.len()];
    for t in range {
        let slot = (t % k) as usize;
        let r = sample_trial(&ensembles[slot], t, seed);
        let cell = ensembles[slot].cells[r.index].unwrap_or(4);
        out[slot][cell] += 1;
    }
    out
}

/// Monte Carlo over prebuilt ensembles: `trials_per_pair` draws for each
/// ensemble, interleaved round-robin.
pub fn run_on_ensembles(
    ensembles: &[LabelledEnsemble],
    trials_per_pair: u64,
    seed: u64,
    schedule: Schedule,
) -> Result<ExperimentResult> {
    if trials_per_pair == 0 {
        return Err(Error::InvalidArgument(
            "at least one trial is required".into(),
        ));
    }
    if ensembles.is_empty() {
        return Err(Error::InvalidArgument("no ensembles to sample".into()));
    }
    let total = trials_per_pair * ensembles.len() as u64;
    let shards = total.div_ceil(SHARD);
    let tallies = (0..shards)
        .into_par_iter()
        .map(|s| tally(ensembles, seed, s * SHARD..((s + 1) * SHARD).min(total)))
        .reduce(
            || vec![[0u64; 5]; ensembles.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    for (u, v) in x.iter_mut().zip(y) {
                        *u += v;
                    }
                }
                a
            },
        );

    let mut pairs = Vec::with_capacity(ensembles.len());
    for (e, t) in ensembles.iter().zip(&tallies) {
        let trials: u64 = t.iter().sum();
        let nf = trials as f64;
        let counts = [t[0], t[1], t[2], t[3]];
        let frequencies = counts.map(|c| c as f64 / nf);
        let standard_errors = frequencies.map(|p| (p * (1.0 - p) / nf).sqrt());
        let counting = e.cell_counts().map(|m| m as f64 / e.n() as f64);
        let signs = [1.0, -1.0, -1.0, 1.0];
        let correlation: f64 = frequencies.iter().zip(signs).map(|(p, s)| p * s).sum();
        let second_moment: f64 = frequencies.iter().sum();
        let correlation_se = ((second_moment - correlation * correlation).max(0.0) / nf).sqrt();
        pairs.push(PairResult {
            pair: e.pair,
            trials,
            counts,
            cat_skips: t[4],
            frequencies,
            standard_errors,
            counting,
            correlation,
            correlation_se,
        });
    }

    let all_four = SettingPair::ALL
        .iter()
        .all(|p| pairs.iter().any(|r| r.pair == *p));
    let (chsh, chsh_se) = if all_four {
        let s = pairs
            .iter()
            .map(|r| r.pair.chsh_sign() * r.correlation)
            .sum();
        let se = pairs
            .iter()
            .map(|r| r.correlation_se * r.correlation_se)
            .sum::<f64>()
            .sqrt();
        (Some(s), Some(se))
    } else {
        (None, None)
    };
    let cat_fraction = pairs.iter().map(|r| r.cat_skips).sum::<u64>() as f64 / total as f64;
    Ok(ExperimentResult {
        n: ensembles[0].n(),
        trials_per_pair,
        seed,
        schedule,
        pairs,
        chsh,
        chsh_se,
        cat_fraction,
    })
}

/// Builds the ensembles the schedule needs and runs the Monte Carlo.
pub fn run_experiment(
    psi: &StateVector,
    scenario: &Scenario,
    n: usize,
    trials_per_pair: u64,
    seed: u64,
    schedule: Schedule,
) -> Result<ExperimentResult> {
    if trials_per_pair == 0 {
        return Err(Error::InvalidArgument(
            "at least one trial is required".into(),
        ));
    }
    let ensembles = schedule
        .pairs()
        .into_iter()
        .map(|pair| labelled_ensemble(psi, scenario, pair, n))
        .collect::<Result<Vec<_>>>()?;
    run_on_ensembles(&ensembles, trials_per_pair, seed, schedule)
}

/// Comparison of the ensembles for `(x, y)` and `(x, y′)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextualityReport {
    /// False when `y′ = y`: the two ensembles coincide.
    pub applicable: bool,
    /// Largest `|⟨ξ, η⟩| / (‖ξ‖‖η‖)` across the two ensembles.
    pub max_overlap: f64,
    /// No ray is shared: `max_overlap < 1 − ε_ray`.
    pub disjoint: bool,
    /// Microstates fixing Alice's `+1` and `−1` in each ensemble.
    pub alice_counts: [[usize; 2]; 2],
    pub max_count_shift: usize,
    /// Shift within the cat allowance `k − 1`.
    pub marginal_preserved: bool,
    /// The source ensemble depends on Bob's setting (Measurement
    /// Independence fails).
    pub setting_dependent: bool,
    /// Index-wise disagreements of Alice's readout, when not applicable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paired_alice_mismatch: Option<usize>,
}

impl ContextualityReport {
    /// λ-conditional Parameter Independence for λ-ONE: not applicable when
    /// the ensembles share no microstate, and evaluated index-wise when
    /// they coincide.
    pub fn lambda_parameter_independence(&self) -> LambdaPi {
        match self.paired_alice_mismatch {
            Some(m) if !self.applicable => LambdaPi::Verdict(ConditionVerdict::new(
                "lambda_parameter_independence",
                m as f64,
                0.0,
            )),
            _ => LambdaPi::NotApplicable {
                max_cross_overlap: Some(self.max_overlap),
            },
        }
    }
}

/// Largest normalized overlap between members of two expansions.
pub fn max_cross_overlap(e: &EquiampExpansion, f: &EquiampExpansion) -> f64 {
    let norms_f: Vec<f64> = f.microstates().iter().map(StateVector::norm).collect();
    e.microstates()
        .par_iter()
        .map(|xi| {
            let nx = xi.norm();
            f.microstates()
                .iter()
                .zip(&norms_f)
                .map(|(eta, ne)| inner(xi.amplitudes(), eta.amplitudes()).norm() / (nx * ne))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

pub fn contextuality_audit(
    psi: &StateVector,
    x: &Direction,
    y: &Direction,
    y_prime: &Direction,
    n: usize,
) -> Result<ContextualityReport> {
    let (d_a, d_b) = spatial_dims(psi)?;
    let applicable = y.angle(y_prime) > tolerance::GEO.sqrt();
    let e1 = expand_adapted(psi, &joint_resolution(x, y, d_a, d_b)?, n)?;
    let l1 = LabelledEnsemble::from_expansion(&e1, SettingPair::AB, *x, *y)?;
    let e2 = expand_adapted(psi, &joint_resolution(x, y_prime, d_a, d_b)?, n)?;
    let l2 = LabelledEnsemble::from_expansion(&e2, SettingPair::ABp, *x, *y_prime)?;
    let max_overlap = max_cross_overlap(&e1, &e2);
    drop((e1, e2));

    let alice_counts = [
        [
            l1.alice_count(Outcome::Plus),
            l1.alice_count(Outcome::Minus),
        ],
        [
            l2.alice_count(Outcome::Plus),
            l2.alice_count(Outcome::Minus),
        ],
    ];
    let max_count_shift = (0..2)
        .map(|s| alice_counts[0][s].abs_diff(alice_counts[1][s]))
        .max()
        .unwrap_or(0);
    let disjoint = max_overlap < 1.0 - tolerance::RAY;
    let paired_alice_mismatch = (!applicable).then(|| {
        l1.alice
            .iter()
            .zip(&l2.alice)
            .filter(|(a, b)| a != b)
            .count()
    });
    Ok(ContextualityReport {
        applicable,
        max_overlap,
        disjoint,
        alice_counts,
        max_count_shift,
        marginal_preserved: max_count_shift < CELLS.len(),
        setting_dependent: applicable && disjoint,
        paired_alice_mismatch,
    })
}
