//! Equiamplitude expansions: families of mutually orthogonal, equal-norm
//! microstates summing to a parent state, and the counting probabilities
//! they define.

mod construct;

use serde::{Deserialize, Serialize};

pub use construct::{expand_adapted, expand_generic};

use crate::hilbert::{self, tensor, Projector, Resolution, StateVector};
use crate::{tolerance, Error, Result};

/// Ordered family of `n` orthogonal microstates of norm `‖ψ‖/√n` summing
/// to `ψ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExpansionRepr", into = "ExpansionRepr")]
pub struct EquiampExpansion {
    parent: StateVector,
    microstates: Vec<StateVector>,
    common_norm: f64,
    tolerance: f64,
}

#[derive(Serialize, Deserialize)]
struct ExpansionRepr {
    parent: StateVector,
    n: usize,
    microstates: Vec<StateVector>,
}

impl TryFrom<ExpansionRepr> for EquiampExpansion {
    type Error = Error;

    fn try_from(repr: ExpansionRepr) -> Result<Self> {
        if repr.n != repr.microstates.len() {
            return Err(Error::InvalidExpansion(format!(
                "n = {} but {} microstates given",
                repr.n,
                repr.microstates.len()
            )));
        }
        EquiampExpansion::new(repr.parent, repr.microstates)
    }
}

impl From<EquiampExpansion> for ExpansionRepr {
    fn from(e: EquiampExpansion) -> Self {
        ExpansionRepr {
            n: e.microstates.len(),
            parent: e.parent,
            microstates: e.microstates,
        }
    }
}

/// Worst relative violations of the expansion invariants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ExpansionResiduals {
    /// `max_{i≠j} |⟨ξ_i, ξ_j⟩| / r²`
    pub orthogonality: f64,
    /// `max_i |‖ξ_i‖ − r| / ‖ψ‖`
    pub norm: f64,
    /// `‖Σ ξ_i − ψ‖ / ‖ψ‖`
    pub sum: f64,
}

impl ExpansionResiduals {
    pub fn max(&self) -> f64 {
        self.orthogonality.max(self.norm).max(self.sum)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

impl EquiampExpansion {
    /// Validates every invariant within [`tolerance::EXPANSION`]. Cost is
    /// quadratic in `n`.
    pub fn new(parent: StateVector, microstates: Vec<StateVector>) -> Result<Self> {
        if microstates.is_empty() {
            return Err(Error::InvalidExpansion("no microstates".into()));
        }
        parent.checked_norm_sqr()?;
        for m in &microstates {
            parent.same_space(m)?;
        }
        let e = Self::from_construction(parent, microstates);
        let res = e.residuals();
        if !res.within(e.tolerance) {
            return Err(Error::InvalidExpansion(format!(
                "residuals {res:?} exceed {:e}",
                e.tolerance
            )));
        }
        Ok(e)
    }

    /// Trusted constructor for families valid by construction.
    pub(crate) fn from_construction(parent: StateVector, microstates: Vec<StateVector>) -> Self {
        let common_norm = parent.norm() / (microstates.len() as f64).sqrt();
        Self {
            parent,
            microstates,
            common_norm,
            tolerance: tolerance::EXPANSION,
        }
    }

    pub fn parent(&self) -> &StateVector {
        &self.parent
    }

    pub fn microstates(&self) -> &[StateVector] {
        &self.microstates
    }

    pub fn microstate(&self, i: usize) -> Result<&StateVector> {
        self.microstates.get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.microstates.len(),
        })
    }

    pub fn n(&self) -> usize {
        self.microstates.len()
    }

    pub fn common_norm(&self) -> f64 {
        self.common_norm
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn residuals(&self) -> ExpansionResiduals {
        let psi_norm = self.parent.norm();
        let r2 = self.common_norm * self.common_norm;
        let mut orthogonality: f64 = 0.0;
        for (i, a) in self.microstates.iter().enumerate() {
            for b in &self.microstates[i + 1..] {
                let g = hilbert::inner(a.amplitudes(), b.amplitudes()).norm();
                orthogonality = orthogonality.max(g / r2);
            }
        }
        let norm = self
            .microstates
            .iter()
            .map(|m| (m.norm() - self.common_norm).abs() / psi_norm)
            .fold(0.0, f64::max);
        let total = StateVector::sum(&self.microstates).expect("common space");
        let sum = total.distance(&self.parent).expect("common space") / psi_norm;
        ExpansionResiduals {
            orthogonality,
            norm,
            sum,
        }
    }

    /// Reordered copy; `order[j]` is the index of the microstate placed at `j`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.n();
        let mut seen = vec![false; n];
        for &i in order {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!(
                    "{order:?} is not a permutation of 0..{n}"
                )));
            }
        }
        if order.len() != n {
            return Err(Error::InvalidArgument("permutation length".into()));
        }
        Ok(Self {
            microstates: order.iter().map(|&i| self.microstates[i].clone()).collect(),
            ..self.clone()
        })
    }
}

/// Expansion of `ψ_A ⊗ ψ_B` into the pairwise products of the two families,
/// `A`-index major.
pub fn tensor_expansion(a: &EquiampExpansion, b: &EquiampExpansion) -> EquiampExpansion {
    let parent = tensor(&a.parent, &b.parent);
    let microstates = a
        .microstates
        .iter()
        .flat_map(|x| b.microstates.iter().map(move |y| tensor(x, y)))
        .collect();
    EquiampExpansion::from_construction(parent, microstates)
}

/// Relation of one microstate to one projector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MicrostateClass {
    /// In the range of `P`.
    Eig1,
    /// Annihilated by `P`.
    Eig0,
    /// Neither: a Schrödinger-cat state for `P`.
    Cat,
}

pub fn classify_state(xi: &StateVector, p: &Projector) -> Result<MicrostateClass> {
    let projected = p.apply(xi)?;
    let scale = xi.norm();
    let thresh = tolerance::CLASSIFY * scale;
    if projected.distance(xi)? <= thresh {
        Ok(MicrostateClass::Eig1)
    } else if projected.norm() <= thresh {
        Ok(MicrostateClass::Eig0)
    } else {
        Ok(MicrostateClass::Cat)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub eig1: usize,
    pub eig0: usize,
    pub cat: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.eig1 + self.eig0 + self.cat
    }
}

pub fn classify(e: &EquiampExpansion, p: &Projector) -> Result<ClassCounts> {
    p.check_space(e.parent.dims())?;
    let mut counts = ClassCounts::default();
    for xi in &e.microstates {
        match classify_state(xi, p)? {
            MicrostateClass::Eig1 => counts.eig1 += 1,
            MicrostateClass::Eig0 => counts.eig0 += 1,
            MicrostateClass::Cat => counts.cat += 1,
        }
    }
    Ok(counts)
}

/// Interval-valued probability `[lower, upper] ⊆ [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpreciseProbability {
    lower: f64,
    upper: f64,
}

impl ImpreciseProbability {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lower) || !(0.0..=1.0).contains(&upper) || lower > upper {
            return Err(Error::InvalidArgument(format!(
                "[{lower}, {upper}] is not a sub-interval of [0, 1]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn precise(p: f64) -> Result<Self> {
        Self::new(p, p)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, p: f64, slack: f64) -> bool {
        p >= self.lower - slack && p <= self.upper + slack
    }

    fn from_counts(counts: ClassCounts, n: usize) -> Self {
        let n = n as f64;
        Self {
            lower: counts.eig1 as f64 / n,
            upper: (counts.eig1 + counts.cat) as f64 / n,
        }
    }
}

/// Lower bound from eigenvalue-1 microstates, upper bound adding the cats.
pub fn imprecise_probability(e: &EquiampExpansion, p: &Projector) -> Result<ImpreciseProbability> {
    let counts = classify(e, p)?;
    Ok(ImpreciseProbability::from_counts(counts, e.n()))
}

/// Per-cell microstate counts of an expansion against a resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingDistribution {
    pub n: usize,
    /// Microstates lying in the range of each cell.
    pub eig1: Vec<usize>,
    /// Microstates lying in no cell's range.
    pub cats: usize,
    /// `[m_i/n, (m_i + cats_i)/n]` per cell.
    pub intervals: Vec<ImpreciseProbability>,
}

impl CountingDistribution {
    /// `m_i / n` per cell.
    pub fn probabilities(&self) -> Vec<f64> {
        self.eig1
            .iter()
            .map(|&m| m as f64 / self.n as f64)
            .collect()
    }

    pub fn cat_mass(&self) -> f64 {
        self.cats as f64 / self.n as f64
    }

    /// At most `k − 1` cats.
    pub fn is_adapted(&self) -> bool {
        self.cats < self.eig1.len().max(1)
    }
}

pub fn counting_distribution(
    e: &EquiampExpansion,
    resolution: &Resolution,
) -> Result<CountingDistribution> {
    let k = resolution.len();
    let mut eig1 = vec![0usize; k];
    let mut cat_per_cell = vec![0usize; k];
    let mut cats = 0;
    for xi in &e.microstates {
        let mut home = None;
        for (i, p) in resolution.projectors().iter().enumerate() {
            match classify_state(xi, p)? {
                MicrostateClass::Eig1 => home = Some(i),
                MicrostateClass::Cat => cat_per_cell[i] += 1,
                MicrostateClass::Eig0 => {}
            }
        }
        match home {
            Some(i) => eig1[i] += 1,
            None => cats += 1,
        }
    }
    let n = e.n();
    let intervals = eig1
        .iter()
        .zip(&cat_per_cell)
        .map(|(&m, &c)| {
            ImpreciseProbability::from_counts(
                ClassCounts {
                    eig1: m,
                    eig0: 0,
                    cat: c,
                },
                n,
            )
        })
        .collect();
    Ok(CountingDistribution {
        n,
        eig1,
        cats,
        intervals,
    })
}

/// One CSV summary row per cell: `n, cell, m_i, c, lower_i, upper_i`.
pub fn summary_rows(dist: &CountingDistribution) -> Vec<(usize, usize, usize, usize, f64, f64)> {
    dist.eig1
        .iter()
        .zip(&dist.intervals)
        .enumerate()
        .map(|(i, (&m, iv))| (dist.n, i, m, dist.cats, iv.lower(), iv.upper()))
        .collect()
}
