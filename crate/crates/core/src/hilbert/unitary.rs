use super::linalg;
use super::state::StateVector;
use crate::{tolerance, Error, Result, C64};

/// Dense unitary matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Unitary {
    dim: usize,
    entries: Vec<C64>,
}

impl Unitary {
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::InvalidDims(format!(
                "{} entries for a {dim}×{dim} matrix",
                entries.len()
            )));
        }
        let u = Self { dim, entries };
        let deviation = u.unitarity_residual();
        if deviation > tolerance::ORTH {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(u)
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = C64::new(1.0, 0.0);
        }
        Self { dim, entries }
    }

    /// Identity plus `Σ coeff · |u⟩⟨v|`; validated for unitarity.
    pub fn identity_plus_outer(dim: usize, terms: &[(C64, &[C64], &[C64])]) -> Result<Self> {
        let mut m = Self::identity(dim);
        for (c, u, v) in terms {
            if u.len() != dim || v.len() != dim {
                return Err(Error::InvalidDims("outer-product factor length".into()));
            }
            for i in 0..dim {
                let ci = c * u[i];
                if ci == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &mut m.entries[i * dim..(i + 1) * dim];
                for (e, vj) in row.iter_mut().zip(v.iter()) {
                    *e += ci * vj.conj();
                }
            }
        }
        let deviation = m.unitarity_residual();
        if deviation > tolerance::ORTH {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    /// Max entry of `|U†U − I|`.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self.entries[k * n + i].conj() * self.entries[k * n + j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }

    pub fn adjoint(&self) -> Unitary {
        let n = self.dim;
        let mut entries = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                entries[j * n + i] = self.entries[i * n + j].conj();
            }
        }
        Unitary { dim: n, entries }
    }

    /// `self · other`
    pub fn compose(&self, other: &Unitary) -> Result<Unitary> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: vec![self.dim],
                actual: vec![other.dim],
            });
        }
        let n = self.dim;
        let mut entries = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    entries[i * n + j] += a * other.entries[k * n + j];
                }
            }
        }
        Ok(Unitary { dim: n, entries })
    }

    pub(crate) fn apply_amps(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                self.entries[i * n..(i + 1) * n]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Max over `probes` of `‖U v − v‖/‖v‖` with `v` the given states.
    pub fn max_displacement(&self, probes: &[StateVector]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for p in probes {
            let up = apply_unitary(self, p)?;
            worst = worst.max(linalg::diff_norm(up.amplitudes(), p.amplitudes()) / p.norm());
        }
        Ok(worst)
    }
}

pub fn apply_unitary(u: &Unitary, psi: &StateVector) -> Result<StateVector> {
    if u.dim != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: vec![u.dim],
            actual: psi.dims().to_vec(),
        });
    }
    Ok(psi.map_amps(u.apply_amps(psi.amplitudes())))
}
