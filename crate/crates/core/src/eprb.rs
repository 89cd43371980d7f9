//! The EPRB setup on `(spin ⊗ space)_A ⊗ (spin ⊗ space)_B`.
//!
//! Factor order is fixed as `(spin A, space A, spin B, space B)`. Outcome
//! cells are ordered `(+,+), (+,−), (−,+), (−,−)`.

use serde::{Deserialize, Serialize};

use crate::expansion::{counting_distribution, expand_adapted};
use crate::hilbert::{
    born, lift, spin_projector, tensor, Direction, FactorRole, Outcome, Projector, Resolution,
    StateVector,
};
use crate::{tolerance, Error, Result, C64};

pub const DEFAULT_SPATIAL_DIM: usize = 32;
pub const DEFAULT_N: usize = 1000;

const ROLES: [FactorRole; 4] = [
    FactorRole::SpinA,
    FactorRole::SpaceA,
    FactorRole::SpinB,
    FactorRole::SpaceB,
];

/// The four `(s, t)` cells in resolution order.
pub const CELLS: [(Outcome, Outcome); 4] = [
    (Outcome::Plus, Outcome::Plus),
    (Outcome::Plus, Outcome::Minus),
    (Outcome::Minus, Outcome::Plus),
    (Outcome::Minus, Outcome::Minus),
];

/// A two-component spin state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpinorRepr", into = "SpinorRepr")]
pub struct Spinor([C64; 2]);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SpinorRepr {
    Real([f64; 2]),
    Complex {
        re: [f64; 2],
        #[serde(default)]
        im: [f64; 2],
    },
}

impl Spinor {
    pub fn new(up: C64, down: C64) -> Result<Self> {
        if up.norm_sqr() + down.norm_sqr() == 0.0 || !(up.is_finite() && down.is_finite()) {
            return Err(Error::DegenerateState);
        }
        Ok(Self([up, down]))
    }

    pub fn real(up: f64, down: f64) -> Result<Self> {
        Self::new(C64::new(up, 0.0), C64::new(down, 0.0))
    }

    pub fn up() -> Self {
        Self([C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
    }

    pub fn down() -> Self {
        Self([C64::new(0.0, 0.0), C64::new(1.0, 0.0)])
    }

    pub fn components(&self) -> [C64; 2] {
        self.0
    }

    fn state(&self) -> StateVector {
        StateVector::new(vec![2], self.0.to_vec()).expect("two components")
    }
}

impl TryFrom<SpinorRepr> for Spinor {
    type Error = Error;

    fn try_from(r: SpinorRepr) -> Result<Self> {
        match r {
            SpinorRepr::Real([a, b]) => Spinor::real(a, b),
            SpinorRepr::Complex { re, im } => {
                Spinor::new(C64::new(re[0], im[0]), C64::new(re[1], im[1]))
            }
        }
    }
}

impl From<Spinor> for SpinorRepr {
    fn from(s: Spinor) -> Self {
        SpinorRepr::Complex {
            re: [s.0[0].re, s.0[1].re],
            im: [s.0[0].im, s.0[1].im],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateSpec {
    #[default]
    Singlet,
    Product {
        chi_a: Spinor,
        chi_b: Spinor,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Born,
    Counting,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Born => "born",
            Backend::Counting => "counting",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SettingPair {
    #[serde(rename = "ab")]
    AB,
    #[serde(rename = "ab'")]
    ABp,
    #[serde(rename = "a'b")]
    ApB,
    #[serde(rename = "a'b'")]
    ApBp,
}

impl SettingPair {
    pub const ALL: [SettingPair; 4] = [
        SettingPair::AB,
        SettingPair::ABp,
        SettingPair::ApB,
        SettingPair::ApBp,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SettingPair::AB => "ab",
            SettingPair::ABp => "ab'",
            SettingPair::ApB => "a'b",
            SettingPair::ApBp => "a'b'",
        }
    }

    /// Whether Alice uses `a′` and Bob uses `b′`.
    pub fn primes(self) -> (bool, bool) {
        match self {
            SettingPair::AB => (false, false),
            SettingPair::ABp => (false, true),
            SettingPair::ApB => (true, false),
            SettingPair::ApBp => (true, true),
        }
    }

    /// Sign of `E(x, y)` in `S`.
    pub fn chsh_sign(self) -> f64 {
        match self {
            SettingPair::ABp => -1.0,
            _ => 1.0,
        }
    }

    pub fn from_primes(alice: bool, bob: bool) -> Self {
        match (alice, bob) {
            (false, false) => SettingPair::AB,
            (false, true) => SettingPair::ABp,
            (true, false) => SettingPair::ApB,
            (true, true) => SettingPair::ApBp,
        }
    }
}

impl std::fmt::Display for SettingPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

fn default_a() -> Direction {
    Direction::in_xz_plane(0.0)
}
fn default_a_prime() -> Direction {
    Direction::in_xz_plane(std::f64::consts::FRAC_PI_2)
}
fn default_b() -> Direction {
    Direction::in_xz_plane(std::f64::consts::FRAC_PI_4)
}
fn default_b_prime() -> Direction {
    Direction::in_xz_plane(3.0 * std::f64::consts::FRAC_PI_4)
}
fn default_d() -> usize {
    DEFAULT_SPATIAL_DIM
}
fn default_n() -> usize {
    DEFAULT_N
}

/// Four measurement directions, spatial dimensions, the state, and the
/// counting-backend expansion size. Missing fields take the defaults of
/// [`Scenario::default`]: the coplanar angles `0, π/2, π/4, 3π/4`, `d = 32`,
/// `n = 1000`, singlet, Born backend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_a")]
    pub a: Direction,
    #[serde(default = "default_a_prime")]
    pub a_prime: Direction,
    #[serde(default = "default_b")]
    pub b: Direction,
    #[serde(default = "default_b_prime")]
    pub b_prime: Direction,
    #[serde(default = "default_d")]
    pub d_a: usize,
    #[serde(default = "default_d")]
    pub d_b: usize,
    #[serde(default)]
    pub state: StateSpec,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub backend: Backend,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            a: default_a(),
            a_prime: default_a_prime(),
            b: default_b(),
            b_prime: default_b_prime(),
            d_a: DEFAULT_SPATIAL_DIM,
            d_b: DEFAULT_SPATIAL_DIM,
            state: StateSpec::Singlet,
            n: DEFAULT_N,
            backend: Backend::Born,
        }
    }
}

impl Scenario {
    /// The maximally violating coplanar settings with the given spatial
    /// dimensions.
    pub fn tsirelson(d_a: usize, d_b: usize) -> Self {
        Self {
            d_a,
            d_b,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_a == 0 || self.d_b == 0 {
            return Err(Error::InvalidDims(format!(
                "spatial dimensions must be at least 1, got ({}, {})",
                self.d_a, self.d_b
            )));
        }
        for d in [self.a, self.a_prime, self.b, self.b_prime] {
            let [x, y, z] = d.components();
            Direction::new(x, y, z)?;
        }
        if self.backend == Backend::Counting && self.n < 4 {
            return Err(Error::TooFewMicrostates {
                n: self.n,
                cells: 4,
            });
        }
        Ok(())
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![2, self.d_a, 2, self.d_b]
    }

    pub fn state_vector(&self) -> Result<StateVector> {
        self.validate()?;
        match self.state {
            StateSpec::Singlet => singlet_state(self.d_a, self.d_b),
            StateSpec::Product { chi_a, chi_b } => {
                product_state(&chi_a, &chi_b, self.d_a, self.d_b)
            }
        }
    }

    pub fn directions(&self, pair: SettingPair) -> (Direction, Direction) {
        let (ap, bp) = pair.primes();
        (
            if ap { self.a_prime } else { self.a },
            if bp { self.b_prime } else { self.b },
        )
    }

    pub fn alice_direction(&self, primed: bool) -> Direction {
        if primed {
            self.a_prime
        } else {
            self.a
        }
    }

    pub fn bob_direction(&self, primed: bool) -> Direction {
        if primed {
            self.b_prime
        } else {
            self.b
        }
    }
}

fn check_spatial(d_a: usize, d_b: usize) -> Result<()> {
    if d_a == 0 || d_b == 0 {
        return Err(Error::InvalidDims(format!(
            "spatial dimensions must be at least 1, got ({d_a}, {d_b})"
        )));
    }
    Ok(())
}

/// Spin singlet with both particles in the first spatial basis state.
pub fn singlet_state(d_a: usize, d_b: usize) -> Result<StateVector> {
    check_spatial(d_a, d_b)?;
    let dims = vec![2, d_a, 2, d_b];
    let mut amps = vec![C64::new(0.0, 0.0); 4 * d_a * d_b];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let index = |sa: usize, sb: usize| ((sa * d_a) * 2 + sb) * d_b;
    amps[index(0, 1)] = C64::new(h, 0.0);
    amps[index(1, 0)] = C64::new(-h, 0.0);
    StateVector::new(dims, amps)?.with_roles(ROLES.to_vec())
}

/// Normalized `χ_A ⊗ e_0 ⊗ χ_B ⊗ e_0`.
pub fn product_state(
    chi_a: &Spinor,
    chi_b: &Spinor,
    d_a: usize,
    d_b: usize,
) -> Result<StateVector> {
    check_spatial(d_a, d_b)?;
    let space_a = StateVector::basis(vec![d_a], 0)?;
    let space_b = StateVector::basis(vec![d_b], 0)?;
    let psi = tensor(
        &tensor(&tensor(&chi_a.state(), &space_a), &chi_b.state()),
        &space_b,
    );
    psi.normalized()?.with_roles(ROLES.to_vec())
}

fn check_eprb_dims(dims: &[usize]) -> Result<(usize, usize)> {
    match dims {
        [2, d_a, 2, d_b] => Ok((*d_a, *d_b)),
        _ => Err(Error::DimensionMismatch {
            expected: vec![2, 0, 2, 0],
            actual: dims.to_vec(),
        }),
    }
}

/// `P_s^x ⊗ I` lifted onto Alice's spin factor.
pub fn alice_projector(x: &Direction, s: Outcome, d_a: usize, d_b: usize) -> Result<Projector> {
    lift(&spin_projector(x, s)?, 0, &[2, d_a, 2, d_b])
}

/// `I ⊗ P_t^y` lifted onto Bob's spin factor.
pub fn bob_projector(y: &Direction, t: Outcome, d_a: usize, d_b: usize) -> Result<Projector> {
    lift(&spin_projector(y, t)?, 2, &[2, d_a, 2, d_b])
}

/// `P_s^x ⊗ P_t^y` on the full space.
pub fn cell_projector(
    x: &Direction,
    y: &Direction,
    s: Outcome,
    t: Outcome,
    d_a: usize,
    d_b: usize,
) -> Result<Projector> {
    check_spatial(d_a, d_b)?;
    let alice = spin_projector(x, s)?.tensor(&Projector::identity(vec![d_a])?);
    let bob = spin_projector(y, t)?.tensor(&Projector::identity(vec![d_b])?);
    Ok(alice.tensor(&bob))
}

/// The four joint outcome cells in the order of [`CELLS`].
pub fn joint_resolution(
    x: &Direction,
    y: &Direction,
    d_a: usize,
    d_b: usize,
) -> Result<Resolution> {
    let cells = CELLS
        .iter()
        .map(|&(s, t)| cell_projector(x, y, s, t, d_a, d_b))
        .collect::<Result<Vec<_>>>()?;
    Resolution::new(cells)
}

/// Joint outcome probabilities for one setting pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub x: Direction,
    pub y: Direction,
    /// `p[s.index()][t.index()]`.
    pub p: [[f64; 2]; 2],
    pub backend: Backend,
    /// Expansion size, counting backend only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Weight of cat microstates; zero for the Born backend.
    pub cat_mass: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Alice,
    Bob,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Marginals {
    /// `p_A(s)` indexed by `s.index()`.
    pub alice: [f64; 2],
    /// `p_B(t)` indexed by `t.index()`.
    pub bob: [f64; 2],
}

impl JointDistribution {
    /// A Born-backend table from explicit entries, validated.
    pub fn from_table(x: Direction, y: Direction, p: [[f64; 2]; 2]) -> Result<Self> {
        let total: f64 = p.iter().flatten().sum();
        if p.iter().flatten().any(|v| v.is_nan() || *v < 0.0)
            || (total - 1.0).abs() > tolerance::BORN_CHECK
        {
            return Err(Error::InvalidArgument(format!(
                "joint table must be non-negative and sum to 1, sums to {total}"
            )));
        }
        Ok(Self {
            x,
            y,
            p,
            backend: Backend::Born,
            n: None,
            cat_mass: 0.0,
        })
    }

    pub fn get(&self, s: Outcome, t: Outcome) -> f64 {
        self.p[s.index()][t.index()]
    }

    pub fn cells(&self) -> [f64; 4] {
        [self.p[0][0], self.p[0][1], self.p[1][0], self.p[1][1]]
    }

    pub fn marginals(&self) -> Marginals {
        marginals(self)
    }

    pub fn correlation(&self) -> f64 {
        correlation(self)
    }
}

pub fn joint_distribution(
    psi: &StateVector,
    x: &Direction,
    y: &Direction,
    backend: Backend,
    n: Option<usize>,
) -> Result<JointDistribution> {
    let (d_a, d_b) = check_eprb_dims(psi.dims())?;
    let resolution = joint_resolution(x, y, d_a, d_b)?;
    let mut p = [[0.0; 2]; 2];
    let (cells, cat_mass) = match backend {
        Backend::Born => (resolution.born(psi)?, 0.0),
        Backend::Counting => {
            let n = n.ok_or_else(|| {
                Error::InvalidArgument("the counting backend needs an expansion size n".into())
            })?;
            let e = expand_adapted(psi, &resolution, n)?;
            let dist = counting_distribution(&e, &resolution)?;
            (dist.probabilities(), dist.cat_mass())
        }
    };
    for (&(s, t), v) in CELLS.iter().zip(cells) {
        p[s.index()][t.index()] = v;
    }
    Ok(JointDistribution {
        x: *x,
        y: *y,
        p,
        backend,
        n: if backend == Backend::Counting {
            n
        } else {
            None
        },
        cat_mass,
    })
}

pub fn marginals(d: &JointDistribution) -> Marginals {
    let p = &d.p;
    Marginals {
        alice: [p[0][0] + p[0][1], p[1][0] + p[1][1]],
        bob: [p[0][0] + p[1][0], p[0][1] + p[1][1]],
    }
}

/// Outcome probabilities on the far side given `given` on `side`.
///
/// For `Side::Alice` this returns `p(t | s = given)` indexed by `t`.
pub fn conditional(d: &JointDistribution, side: Side, given: Outcome) -> Result<[f64; 2]> {
    let m = marginals(d);
    let (denom, row) = match side {
        Side::Alice => (m.alice[given.index()], d.p[given.index()]),
        Side::Bob => (
            m.bob[given.index()],
            [d.p[0][given.index()], d.p[1][given.index()]],
        ),
    };
    if denom.is_nan() || denom <= tolerance::CONDITIONING {
        return Err(Error::UndefinedConditional { probability: denom });
    }
    Ok([row[0] / denom, row[1] / denom])
}

/// `E = Σ s·t·p(s,t)`; cat mass contributes nothing.
pub fn correlation(d: &JointDistribution) -> f64 {
    d.p[0][0] - d.p[0][1] - d.p[1][0] + d.p[1][1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub backend: Backend,
    /// `E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)`.
    pub s: f64,
    pub correlations: Vec<(SettingPair, f64)>,
    pub distributions: Vec<(SettingPair, JointDistribution)>,
}

impl ChshResult {
    pub fn abs_s(&self) -> f64 {
        self.s.abs()
    }

    pub fn distribution(&self, pair: SettingPair) -> &JointDistribution {
        &self
            .distributions
            .iter()
            .find(|(p, _)| *p == pair)
            .expect("all four pairs present")
            .1
    }
}

/// Joint distributions for all four setting pairs.
pub fn scenario_distributions(
    psi: &StateVector,
    scenario: &Scenario,
    backend: Backend,
) -> Result<Vec<(SettingPair, JointDistribution)>> {
    scenario.validate()?;
    SettingPair::ALL
        .iter()
        .map(|&pair| {
            let (x, y) = scenario.directions(pair);
            joint_distribution(psi, &x, &y, backend, Some(scenario.n)).map(|d| (pair, d))
        })
        .collect()
}

pub fn chsh(psi: &StateVector, scenario: &Scenario, backend: Backend) -> Result<ChshResult> {
    let distributions = scenario_distributions(psi, scenario, backend)?;
    Ok(chsh_from_distributions(backend, distributions))
}

pub fn chsh_from_distributions(
    backend: Backend,
    distributions: Vec<(SettingPair, JointDistribution)>,
) -> ChshResult {
    let correlations: Vec<(SettingPair, f64)> = distributions
        .iter()
        .map(|(pair, d)| (*pair, correlation(d)))
        .collect();
    let s = correlations
        .iter()
        .map(|(pair, e)| pair.chsh_sign() * e)
        .sum();
    ChshResult {
        backend,
        s,
        correlations,
        distributions,
    }
}

/// One row of the small-angle sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta: f64,
    pub correlation: f64,
    /// `1 + E(θ)`, the deviation from perfect anticorrelation.
    pub deficit: f64,
    /// `(1 − cos θ)/θ²`.
    pub ratio: f64,
}

/// Born-backend singlet correlation with `a = z` and `b` at angle `θ` in the
/// x–z plane, for `θ ∈ (0, π]`.
pub fn sweep_theta(thetas: &[f64]) -> Result<Vec<SweepRow>> {
    if thetas.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let psi = singlet_state(1, 1)?;
    let a = Direction::z();
    thetas
        .iter()
        .map(|&theta| {
            if !(theta > 0.0 && theta <= std::f64::consts::PI) {
                return Err(Error::InvalidArgument(format!(
                    "sweep angles must lie in (0, π], got {theta}"
                )));
            }
            let b = Direction::in_xz_plane(theta);
            let d = joint_distribution(&psi, &a, &b, Backend::Born, None)?;
            let e = correlation(&d);
            Ok(SweepRow {
                theta,
                correlation: e,
                deficit: 1.0 + e,
                ratio: (1.0 - theta.cos()) / (theta * theta),
            })
        })
        .collect()
}

/// Born probability of Alice's outcome `s` along `x`.
pub fn alice_marginal(psi: &StateVector, x: &Direction, s: Outcome) -> Result<f64> {
    let (d_a, d_b) = check_eprb_dims(psi.dims())?;
    born(psi, &alice_projector(x, s, d_a, d_b)?)
}

/// Born probability of Bob's outcome `t` along `y`.
pub fn bob_marginal(psi: &StateVector, y: &Direction, t: Outcome) -> Result<f64> {
    let (d_a, d_b) = check_eprb_dims(psi.dims())?;
    born(psi, &bob_projector(y, t, d_a, d_b)?)
}
