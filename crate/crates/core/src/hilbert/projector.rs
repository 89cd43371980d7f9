use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::linalg::{self, inner, norm, norm_sqr, orthogonalize};
use super::state::{check_dims, StateVector};
use crate::{tolerance, Error, Result, C64};

/// A run of consecutive tensor factors carrying an explicit orthonormal range
/// basis. Factors not covered by any block carry the identity.
#[derive(Clone, Debug, PartialEq)]
struct Block {
    start: usize,
    span: usize,
    dim: usize,
    basis: Vec<Vec<C64>>,
}

/// Orthogonal projector stored by orthonormal range bases on runs of factors.
///
/// `P = ⊗ blocks ⊗ identities`. A projector on the whole space is a single
/// block covering every factor; a lifted local projector is a single block on
/// one factor.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    dims: Vec<usize>,
    blocks: Vec<Block>,
}

enum Segment<'a> {
    Identity(usize),
    Block(&'a Block),
}

impl Segment<'_> {
    fn rank(&self) -> usize {
        match self {
            Segment::Identity(d) => *d,
            Segment::Block(b) => b.basis.len(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Segment::Identity(d) => *d,
            Segment::Block(b) => b.dim,
        }
    }
}

impl Projector {
    /// Projector onto the span of `basis`, which must be orthonormal within
    /// [`tolerance::ORTH`].
    pub fn from_range_basis(dims: Vec<usize>, basis: Vec<Vec<C64>>) -> Result<Self> {
        let dim = check_dims(&dims)?;
        if let Some(v) = basis.iter().find(|v| v.len() != dim) {
            return Err(Error::InvalidDims(format!(
                "basis vector of length {} in a space of dimension {dim}",
                v.len()
            )));
        }
        if basis.len() > dim {
            return Err(Error::NotOrthonormal { deviation: 1.0 });
        }
        let deviation = linalg::orthonormality_deviation(&basis);
        if deviation > tolerance::ORTH {
            return Err(Error::NotOrthonormal { deviation });
        }
        let span = dims.len();
        Ok(Self {
            dims,
            blocks: vec![Block {
                start: 0,
                span,
                dim,
                basis,
            }],
        })
    }

    pub fn from_states(dims: Vec<usize>, basis: &[StateVector]) -> Result<Self> {
        for s in basis {
            if s.dims() != dims.as_slice() {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    actual: s.dims().to_vec(),
                });
            }
        }
        Self::from_range_basis(
            dims,
            basis.iter().map(|s| s.amplitudes().to_vec()).collect(),
        )
    }

    /// Projector onto the span of arbitrary vectors; dependent vectors are
    /// dropped during Gram-Schmidt.
    pub fn span(dims: Vec<usize>, vectors: &[Vec<C64>]) -> Result<Self> {
        let dim = check_dims(&dims)?;
        let mut basis: Vec<Vec<C64>> = Vec::new();
        for v in vectors {
            if v.len() != dim {
                return Err(Error::InvalidDims(format!(
                    "vector of length {} in a space of dimension {dim}",
                    v.len()
                )));
            }
            let scale = norm(v);
            if scale == 0.0 {
                continue;
            }
            let mut w = v.clone();
            let r = orthogonalize(&mut w, &basis);
            if r > 1e-8 * scale {
                w.iter_mut().for_each(|c| *c /= r);
                basis.push(w);
            }
        }
        Self::from_range_basis(dims, basis)
    }

    pub fn identity(dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims)?;
        Ok(Self {
            dims,
            blocks: Vec::new(),
        })
    }

    pub fn zero(dims: Vec<usize>) -> Result<Self> {
        Self::from_range_basis(dims, Vec::new())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn rank(&self) -> usize {
        self.segments().iter().map(Segment::rank).product()
    }

    pub fn is_identity(&self) -> bool {
        self.segments().iter().all(|s| s.rank() == s.dim())
    }

    fn segments(&self) -> Vec<Segment<'_>> {
        let mut out = Vec::new();
        let mut blocks = self.blocks.iter().peekable();
        let mut i = 0;
        while i < self.dims.len() {
            match blocks.peek() {
                Some(b) if b.start == i => {
                    out.push(Segment::Block(b));
                    i += b.span;
                    blocks.next();
                }
                _ => {
                    out.push(Segment::Identity(self.dims[i]));
                    i += 1;
                }
            }
        }
        out
    }

    /// `self ⊗ other`, with `self`'s factors first.
    pub fn tensor(&self, other: &Projector) -> Projector {
        let offset = self.dims.len();
        let dims = self.dims.iter().chain(&other.dims).copied().collect();
        let blocks = self
            .blocks
            .iter()
            .cloned()
            .chain(other.blocks.iter().map(|b| Block {
                start: b.start + offset,
                ..b.clone()
            }))
            .collect();
        Projector { dims, blocks }
    }

    /// `I − P`. Supported when at most one block is present.
    pub fn complement(&self) -> Result<Projector> {
        match self.blocks.as_slice() {
            [] => Ok(Projector {
                dims: self.dims.clone(),
                blocks: vec![Block {
                    start: 0,
                    span: self.dims.len(),
                    dim: self.dim(),
                    basis: Vec::new(),
                }],
            }),
            [block] => {
                if block.start != 0 || block.span != self.dims.len() {
                    // Local block: I − (Q ⊗ I) = (I − Q) ⊗ I.
                    let local_dims = self.dims[block.start..block.start + block.span].to_vec();
                    let local = Projector::from_range_basis(local_dims, block.basis.clone())?
                        .complement()?;
                    return lift(&local, block.start, &self.dims);
                }
                let mut basis = block.basis.clone();
                let start_len = basis.len();
                for j in 0..block.dim {
                    if basis.len() == block.dim {
                        break;
                    }
                    let mut e = vec![C64::new(0.0, 0.0); block.dim];
                    e[j] = C64::new(1.0, 0.0);
                    let r = orthogonalize(&mut e, &basis);
                    if r > 1e-6 {
                        e.iter_mut().for_each(|c| *c /= r);
                        basis.push(e);
                    }
                }
                basis.drain(..start_len);
                Projector::from_range_basis(self.dims.clone(), basis)
            }
            _ => Err(Error::InvalidArgument(
                "complement of a product of several blocks is not a product projector".into(),
            )),
        }
    }

    /// The `index`-th range basis vector in mixed-radix order over segments.
    pub fn range_vector(&self, index: usize) -> Vec<C64> {
        let segments = self.segments();
        let mut digits = vec![0usize; segments.len()];
        let mut rest = index;
        for (d, seg) in digits.iter_mut().zip(&segments).rev() {
            let r = seg.rank();
            *d = rest % r;
            rest /= r;
        }
        let mut out = vec![C64::new(1.0, 0.0)];
        for (d, seg) in digits.iter().zip(&segments) {
            let local: Vec<C64> = match seg {
                Segment::Identity(dim) => {
                    let mut e = vec![C64::new(0.0, 0.0); *dim];
                    e[*d] = C64::new(1.0, 0.0);
                    e
                }
                Segment::Block(b) => b.basis[*d].clone(),
            };
            let mut next = Vec::with_capacity(out.len() * local.len());
            for a in &out {
                next.extend(local.iter().map(|b| a * b));
            }
            out = next;
        }
        out
    }

    pub fn range_basis(&self) -> impl Iterator<Item = Vec<C64>> + '_ {
        (0..self.rank()).map(move |i| self.range_vector(i))
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.check_space(psi.dims())?;
        Ok(psi.map_amps(self.apply_amps(psi.amplitudes())))
    }

    pub(crate) fn check_space(&self, dims: &[usize]) -> Result<()> {
        if self.dims != dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims.clone(),
                actual: dims.to_vec(),
            });
        }
        Ok(())
    }

    pub(crate) fn apply_amps(&self, amps: &[C64]) -> Vec<C64> {
        let mut out = amps.to_vec();
        for block in &self.blocks {
            let left: usize = self.dims[..block.start].iter().product();
            let right: usize = self.dims[block.start + block.span..].iter().product();
            let mut x = vec![C64::new(0.0, 0.0); block.dim];
            let mut y = vec![C64::new(0.0, 0.0); block.dim];
            for l in 0..left {
                for r in 0..right {
                    let base = l * block.dim * right + r;
                    for (k, xk) in x.iter_mut().enumerate() {
                        *xk = out[base + k * right];
                    }
                    y.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
                    for b in &block.basis {
                        let c = inner(b, &x);
                        linalg::axpy(c, b, &mut y);
                    }
                    for (k, yk) in y.iter().enumerate() {
                        out[base + k * right] = *yk;
                    }
                }
            }
        }
        out
    }

    /// Largest relative residual `‖P(Pv) − Pv‖ / ‖v‖` over seeded random probes.
    pub fn idempotence_residual(&self, probes: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = self.dim();
        (0..probes)
            .map(|_| {
                let v = linalg::random_complex(dim, &mut rng);
                let pv = self.apply_amps(&v);
                let ppv = self.apply_amps(&pv);
                linalg::diff_norm(&ppv, &pv) / norm(&v)
            })
            .fold(0.0, f64::max)
    }
}

/// `P ⊗ I` placing the factors of `p` at `slot` within `dims`.
pub fn lift(p: &Projector, slot: usize, dims: &[usize]) -> Result<Projector> {
    let end = slot + p.dims.len();
    if end > dims.len() || dims[slot..end] != p.dims[..] {
        return Err(Error::DimensionMismatch {
            expected: dims.get(slot..end.min(dims.len())).unwrap_or(&[]).to_vec(),
            actual: p.dims.clone(),
        });
    }
    check_dims(dims)?;
    Ok(Projector {
        dims: dims.to_vec(),
        blocks: p
            .blocks
            .iter()
            .map(|b| Block {
                start: b.start + slot,
                ..b.clone()
            })
            .collect(),
    })
}

/// Born probability `‖Pψ‖² / ‖ψ‖²`.
pub fn born(psi: &StateVector, p: &Projector) -> Result<f64> {
    p.check_space(psi.dims())?;
    let denom = psi.checked_norm_sqr()?;
    let projected = p.apply_amps(psi.amplitudes());
    Ok((norm_sqr(&projected) / denom).clamp(0.0, 1.0))
}

/// Orthogonal family of projectors summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolution {
    projectors: Vec<Projector>,
}

const RESOLUTION_PROBES: usize = 8;

impl Resolution {
    pub fn new(projectors: Vec<Projector>) -> Result<Self> {
        let first = projectors
            .first()
            .ok_or_else(|| Error::InvalidResolution("no projectors".into()))?;
        let dims = first.dims.clone();
        for p in &projectors {
            p.check_space(&dims)?;
        }
        let dim = first.dim();
        let total_rank: usize = projectors.iter().map(Projector::rank).sum();
        if total_rank != dim {
            return Err(Error::InvalidResolution(format!(
                "ranks sum to {total_rank}, ambient dimension is {dim}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x005e_ed0f_0a7e);
        for _ in 0..RESOLUTION_PROBES {
            let v = linalg::random_complex(dim, &mut rng);
            let scale = norm(&v);
            let images: Vec<Vec<C64>> = projectors.iter().map(|p| p.apply_amps(&v)).collect();
            for (i, pv) in images.iter().enumerate() {
                for (j, q) in projectors.iter().enumerate() {
                    if i != j {
                        let leak = norm(&q.apply_amps(pv));
                        if leak > tolerance::ORTH * scale {
                            return Err(Error::InvalidResolution(format!(
                                "projectors {i} and {j} are not orthogonal (leak {leak:e})"
                            )));
                        }
                    }
                }
            }
            let mut total = vec![C64::new(0.0, 0.0); dim];
            for pv in &images {
                linalg::axpy(C64::new(1.0, 0.0), pv, &mut total);
            }
            let gap = linalg::diff_norm(&total, &v);
            if gap > tolerance::ORTH * scale {
                return Err(Error::InvalidResolution(format!(
                    "projectors do not sum to the identity (gap {gap:e})"
                )));
            }
        }
        Ok(Self { projectors })
    }

    /// `{P, I − P}`.
    pub fn binary(p: Projector) -> Result<Self> {
        let q = p.complement()?;
        Self::new(vec![p, q])
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn dims(&self) -> &[usize] {
        &self.projectors[0].dims
    }

    pub fn born(&self, psi: &StateVector) -> Result<Vec<f64>> {
        self.projectors.iter().map(|p| born(psi, p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::state::tensor;

    fn e(dim: usize, i: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[i] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn identity_has_born_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = StateVector::random(vec![2, 3], &mut rng).unwrap();
        let id = Projector::identity(vec![2, 3]).unwrap();
        assert!((born(&psi, &id).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(id.rank(), 6);
    }

    #[test]
    fn orthogonal_range_gives_zero() {
        let psi = StateVector::basis(vec![3], 0).unwrap();
        let p = Projector::from_range_basis(vec![3], vec![e(3, 1), e(3, 2)]).unwrap();
        assert_eq!(born(&psi, &p).unwrap(), 0.0);
    }

    #[test]
    fn equal_amplitudes_split_evenly() {
        let psi = StateVector::from_real(vec![2], &[1.0, 1.0]).unwrap();
        let p = Projector::from_range_basis(vec![2], vec![e(2, 0)]).unwrap();
        assert!((born(&psi, &p).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_state_is_an_error() {
        let psi = StateVector::zeros(vec![2]).unwrap();
        let p = Projector::identity(vec![2]).unwrap();
        assert_eq!(born(&psi, &p), Err(Error::DegenerateState));
    }

    #[test]
    fn non_orthonormal_basis_rejected() {
        let v = vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        assert!(matches!(
            Projector::from_range_basis(vec![2], vec![v]),
            Err(Error::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn lift_multiplies_rank() {
        let p = Projector::from_range_basis(vec![2], vec![e(2, 0)]).unwrap();
        let lifted = lift(&p, 0, &[2, 32]).unwrap();
        assert_eq!(lifted.rank(), 32);
        let lifted = lift(&p, 1, &[4, 2, 8]).unwrap();
        assert_eq!(lifted.rank(), 32);
        assert!(lift(&p, 0, &[3, 2]).is_err());
        assert!(lift(&p, 2, &[2, 2]).is_err());
    }

    #[test]
    fn lift_of_identity_is_identity() {
        let id = Projector::identity(vec![2]).unwrap();
        let lifted = lift(&id, 1, &[3, 2]).unwrap();
        assert!(lifted.is_identity());
        let full = Projector::from_range_basis(vec![2], vec![e(2, 0), e(2, 1)]).unwrap();
        assert!(lift(&full, 0, &[2, 5]).unwrap().is_identity());
    }

    #[test]
    fn range_vectors_match_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = Projector::span(
            vec![3],
            &[
                linalg::random_complex(3, &mut rng),
                linalg::random_complex(3, &mut rng),
            ],
        )
        .unwrap();
        let b = Projector::span(vec![2], &[linalg::random_complex(2, &mut rng)]).unwrap();
        let p = a.tensor(&Projector::identity(vec![2]).unwrap()).tensor(&b);
        assert_eq!(p.rank(), 4);
        let basis: Vec<Vec<C64>> = p.range_basis().collect();
        assert!(linalg::orthonormality_deviation(&basis) < 1e-12);
        for v in &basis {
            let pv = p.apply_amps(v);
            assert!(linalg::diff_norm(&pv, v) < 1e-12);
        }
        assert!(p.idempotence_residual(20, 1) < 1e-12);
    }

    #[test]
    fn complement_resolves_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = Projector::span(
            vec![5],
            &[
                linalg::random_complex(5, &mut rng),
                linalg::random_complex(5, &mut rng),
            ],
        )
        .unwrap();
        let r = Resolution::binary(p).unwrap();
        assert_eq!(r.projectors()[1].rank(), 3);
        let psi = StateVector::random(vec![5], &mut rng).unwrap();
        let total: f64 = r.born(&psi).unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);

        let local = Projector::from_range_basis(vec![2], vec![e(2, 1)]).unwrap();
        let lifted = lift(&local, 0, &[2, 3]).unwrap();
        let r = Resolution::binary(lifted).unwrap();
        assert_eq!(r.projectors()[1].rank(), 3);
    }

    #[test]
    fn resolution_rejects_overlap_and_gaps() {
        let p = Projector::from_range_basis(vec![2], vec![e(2, 0)]).unwrap();
        assert!(Resolution::new(vec![p.clone(), p.clone()]).is_err());
        assert!(Resolution::new(vec![p]).is_err());
    }

    #[test]
    fn born_on_product_projector_of_product_state() {
        let u = StateVector::from_real(vec![2], &[0.6, 0.8]).unwrap();
        let v = StateVector::from_real(vec![2], &[1.0, 0.0]).unwrap();
        let psi = tensor(&u, &v);
        let p0 = Projector::from_range_basis(vec![2], vec![e(2, 0)]).unwrap();
        let p = p0.tensor(&p0);
        assert!((born(&psi, &p).unwrap() - 0.36).abs() < 1e-14);
    }
}
