use rand::Rng;
use serde::{Deserialize, Serialize};

use super::linalg;
use crate::{Error, Result, C64};

/// What a tensor factor models. EPRB spaces use the order
/// `(SpinA, SpaceA, SpinB, SpaceB)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorRole {
    SpinA,
    SpaceA,
    SpinB,
    SpaceB,
    #[default]
    Generic,
}

/// A vector in a finite tensor-product space, stored densely in Kronecker
/// order: the last factor's index varies fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub struct StateVector {
    dims: Vec<usize>,
    roles: Vec<FactorRole>,
    amps: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    dims: Vec<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    roles: Option<Vec<FactorRole>>,
}

impl TryFrom<StateRepr> for StateVector {
    type Error = Error;

    fn try_from(repr: StateRepr) -> Result<Self> {
        if repr.re.len() != repr.im.len() {
            return Err(Error::InvalidArgument(format!(
                "re has {} entries but im has {}",
                repr.re.len(),
                repr.im.len()
            )));
        }
        let amps = repr
            .re
            .iter()
            .zip(&repr.im)
            .map(|(&re, &im)| C64::new(re, im))
            .collect();
        let state = StateVector::new(repr.dims, amps)?;
        match repr.roles {
            Some(roles) => state.with_roles(roles),
            None => Ok(state),
        }
    }
}

impl From<StateVector> for StateRepr {
    fn from(state: StateVector) -> Self {
        let roles = state
            .roles
            .iter()
            .any(|r| *r != FactorRole::Generic)
            .then(|| state.roles.clone());
        StateRepr {
            re: state.amps.iter().map(|c| c.re).collect(),
            im: state.amps.iter().map(|c| c.im).collect(),
            dims: state.dims,
            roles,
        }
    }
}

pub(crate) fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::InvalidDims("no factors".into()));
    }
    if let Some(i) = dims.iter().position(|&d| d == 0) {
        return Err(Error::InvalidDims(format!("factor {i} has dimension 0")));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::InvalidDims(format!("total dimension of {dims:?} overflows")))
}

impl StateVector {
    pub fn new(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        let total = check_dims(&dims)?;
        if amps.len() != total {
            return Err(Error::InvalidDims(format!(
                "{} amplitudes for dims {:?} (expected {total})",
                amps.len(),
                dims
            )));
        }
        if amps.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite amplitude".into()));
        }
        let roles = vec![FactorRole::Generic; dims.len()];
        Ok(Self { dims, roles, amps })
    }

    pub fn from_real(dims: Vec<usize>, amps: &[f64]) -> Result<Self> {
        Self::new(dims, amps.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let total = check_dims(&dims)?;
        Self::new(dims, vec![C64::new(0.0, 0.0); total])
    }

    /// Unit vector `e_index` in Kronecker order.
    pub fn basis(dims: Vec<usize>, index: usize) -> Result<Self> {
        let mut state = Self::zeros(dims)?;
        if index >= state.amps.len() {
            return Err(Error::IndexOutOfRange {
                index,
                len: state.amps.len(),
            });
        }
        state.amps[index] = C64::new(1.0, 0.0);
        Ok(state)
    }

    /// Complex Gaussian random vector (not normalized).
    pub fn random<R: Rng + ?Sized>(dims: Vec<usize>, rng: &mut R) -> Result<Self> {
        let total = check_dims(&dims)?;
        Self::new(dims, linalg::random_complex(total, rng))
    }

    pub(crate) fn from_parts_unchecked(
        dims: Vec<usize>,
        roles: Vec<FactorRole>,
        amps: Vec<C64>,
    ) -> Self {
        debug_assert_eq!(dims.len(), roles.len());
        debug_assert_eq!(dims.iter().product::<usize>(), amps.len());
        Self { dims, roles, amps }
    }

    pub fn with_roles(mut self, roles: Vec<FactorRole>) -> Result<Self> {
        if roles.len() != self.dims.len() {
            return Err(Error::InvalidDims(format!(
                "{} roles for {} factors",
                roles.len(),
                self.dims.len()
            )));
        }
        self.roles = roles;
        Ok(self)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn roles(&self) -> &[FactorRole] {
        &self.roles
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        linalg::norm_sqr(&self.amps)
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amps)
    }

    /// `⟨self, other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.same_space(other)?;
        Ok(linalg::inner(&self.amps, &other.amps))
    }

    pub fn same_space(&self, other: &StateVector) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims.clone(),
                actual: other.dims.clone(),
            });
        }
        Ok(())
    }

    /// Squared norm, or [`Error::DegenerateState`] when it is not usable as a
    /// probability denominator.
    pub fn checked_norm_sqr(&self) -> Result<f64> {
        let n2 = self.norm_sqr();
        if n2 > 0.0 && n2.is_finite() {
            Ok(n2)
        } else {
            Err(Error::DegenerateState)
        }
    }

    pub fn normalized(&self) -> Result<StateVector> {
        let n = self.checked_norm_sqr()?.sqrt();
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, c: C64) -> StateVector {
        self.map_amps(self.amps.iter().map(|a| a * c).collect())
    }

    pub fn add(&self, other: &StateVector) -> Result<StateVector> {
        self.same_space(other)?;
        Ok(self.map_amps(
            self.amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &StateVector) -> Result<StateVector> {
        self.same_space(other)?;
        Ok(self.map_amps(
            self.amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    pub fn distance(&self, other: &StateVector) -> Result<f64> {
        self.same_space(other)?;
        Ok(linalg::diff_norm(&self.amps, &other.amps))
    }

    /// Same space, new amplitudes.
    pub(crate) fn map_amps(&self, amps: Vec<C64>) -> StateVector {
        debug_assert_eq!(amps.len(), self.amps.len());
        StateVector {
            dims: self.dims.clone(),
            roles: self.roles.clone(),
            amps,
        }
    }

    /// Sum of a non-empty family of states on a common space.
    pub fn sum<'a, I>(states: I) -> Result<StateVector>
    where
        I: IntoIterator<Item = &'a StateVector>,
    {
        let mut iter = states.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::InvalidArgument("sum of an empty family".into()))?;
        let mut acc = first.amps.clone();
        for s in iter {
            first.same_space(s)?;
            for (a, b) in acc.iter_mut().zip(&s.amps) {
                *a += b;
            }
        }
        Ok(first.map_amps(acc))
    }
}

/// Kronecker product `u ⊗ v`; `u`'s factors come first.
pub fn tensor(u: &StateVector, v: &StateVector) -> StateVector {
    let mut amps = Vec::with_capacity(u.amps.len() * v.amps.len());
    for a in &u.amps {
        amps.extend(v.amps.iter().map(|b| a * b));
    }
    let dims = u.dims.iter().chain(&v.dims).copied().collect();
    let roles = u.roles.iter().chain(&v.roles).copied().collect();
    StateVector::from_parts_unchecked(dims, roles, amps)
}
