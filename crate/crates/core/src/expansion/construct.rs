//! Constructive realizations of generic and adapted equiamplitude expansions.
//!
//! Both routes reduce to one primitive: given an orthonormal frame `F`, a
//! target vector `F·t`, and a list of norms with the same total squared norm,
//! produce mutually orthogonal vectors with those norms summing to the target.
//! A single reflection `W` on the coefficient space with `W ĉ = t̂` does it:
//! the columns of `W`, scaled by the norms and expressed in the frame.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EquiampExpansion;
use crate::hilbert::{axpy, inner, norm, random_complex, Projector, Resolution, StateVector};
use crate::{Error, Result, C64};

/// Offsets from an integer below this are treated as rounding noise when
/// allocating microstates to cells.
const SNAP: f64 = 1e-9;

/// Cells whose amplitude is below this fraction of `‖ψ‖` carry no mass.
const NEGLIGIBLE_AMPLITUDE: f64 = 1e-13;

/// Unitary `W = −ω̄ (I − 2vv†)` mapping the unit vector `x` onto the unit
/// vector `y`.
struct Reflection {
    v: Vec<C64>,
    factor: C64,
}

impl Reflection {
    fn new(x: &[C64], y: &[C64]) -> Self {
        let overlap = inner(y, x);
        let omega = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut v: Vec<C64> = x.iter().zip(y).map(|(a, b)| a + omega * b).collect();
        let nv = norm(&v);
        v.iter_mut().for_each(|c| *c /= nv);
        Self {
            v,
            factor: -omega.conj(),
        }
    }

    /// `Σ_l v_l f_l` for a frame given column by column.
    fn frame_image(&self, frame: &[Vec<C64>]) -> Vec<C64> {
        let mut w = vec![C64::new(0.0, 0.0); frame[0].len()];
        for (vl, f) in self.v.iter().zip(frame) {
            axpy(*vl, f, &mut w);
        }
        w
    }

    /// Frame expression of column `j` of `W`, scaled by `scale`:
    /// `scale · factor · (f_j − 2 w v̄_j)`.
    fn column(&self, j: usize, f_j: &[C64], w: &[C64], scale: f64) -> Vec<C64> {
        let a = self.factor * scale;
        let b = -2.0 * a * self.v[j].conj();
        f_j.iter().zip(w).map(|(f, wk)| a * f + b * wk).collect()
    }
}

/// Splits the vector with frame coordinates `target` into orthogonal pieces
/// with the given norms. `‖norms‖` must equal `‖target‖`.
fn split_in_frame(frame: &[Vec<C64>], target: &[C64], norms: &[f64]) -> Vec<Vec<C64>> {
    debug_assert_eq!(frame.len(), target.len());
    debug_assert!(norms.len() <= frame.len());
    let total = norms.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut x = vec![C64::new(0.0, 0.0); frame.len()];
    for (xi, &ni) in x.iter_mut().zip(norms) {
        *xi = C64::new(ni / total, 0.0);
    }
    let t_norm = norm(target);
    let y: Vec<C64> = target.iter().map(|c| c / t_norm).collect();
    let reflection = Reflection::new(&x, &y);
    let w = reflection.frame_image(frame);
    norms
        .iter()
        .enumerate()
        .map(|(j, &nj)| reflection.column(j, &frame[j], &w, nj))
        .collect()
}

/// Orthonormal frame of `size` vectors inside the range of `p` whose first
/// element is the unit vector `u` (which must lie in that range).
fn frame_in_range(p: &Projector, u: &[C64], size: usize) -> Vec<Vec<C64>> {
    let rank = p.rank();
    let mut coords = Vec::with_capacity(rank);
    let mut head: Vec<Vec<C64>> = Vec::with_capacity(size);
    for j in 0..rank {
        let b = p.range_vector(j);
        coords.push(inner(&b, u));
        if j < size {
            head.push(b);
        }
    }
    let cn = norm(&coords);
    coords.iter_mut().for_each(|c| *c /= cn);
    let mut e0 = vec![C64::new(0.0, 0.0); rank];
    e0[0] = C64::new(1.0, 0.0);
    let reflection = Reflection::new(&e0, &coords);
    let mut w = vec![C64::new(0.0, 0.0); u.len()];
    for (j, vj) in reflection.v.iter().enumerate() {
        if vj.norm() == 0.0 {
            continue;
        }
        if j < size {
            axpy(*vj, &head[j], &mut w);
        } else {
            axpy(*vj, &p.range_vector(j), &mut w);
        }
    }
    head.iter()
        .enumerate()
        .map(|(j, b)| reflection.column(j, b, &w, 1.0))
        .collect()
}

/// Allocation of microstates to one cell.
#[derive(Clone, Copy, Debug)]
struct CellPlan {
    /// Eigenstate microstates in this cell.
    count: usize,
    /// Norm of each eigenstate microstate.
    eig_norm: f64,
    /// Norm of the leftover component that goes to the cat span.
    remainder: f64,
    negligible: bool,
}

fn plan_cells(alphas: &[f64], total_sqr: f64, n: usize, snap: bool) -> (Vec<CellPlan>, usize) {
    let r2 = total_sqr / n as f64;
    let r = r2.sqrt();
    let plans: Vec<CellPlan> = alphas
        .iter()
        .map(|&alpha| {
            if alpha <= NEGLIGIBLE_AMPLITUDE * total_sqr.sqrt() {
                return CellPlan {
                    count: 0,
                    eig_norm: r,
                    remainder: 0.0,
                    negligible: true,
                };
            }
            let x = alpha * alpha / r2;
            let nearest = x.round();
            if snap && nearest >= 1.0 && (x - nearest).abs() <= SNAP {
                let m = nearest as usize;
                CellPlan {
                    count: m,
                    eig_norm: alpha / (m as f64).sqrt(),
                    remainder: 0.0,
                    negligible: false,
                }
            } else {
                let m = x.floor() as usize;
                let rem2 = (alpha * alpha - m as f64 * r2).max(0.0);
                CellPlan {
                    count: m,
                    eig_norm: r,
                    remainder: rem2.sqrt(),
                    negligible: false,
                }
            }
        })
        .collect();
    let allocated: usize = plans.iter().map(|p| p.count).sum();
    let cats = n.saturating_sub(allocated);
    (plans, cats)
}

fn plan_is_consistent(plans: &[CellPlan], cats: usize, n: usize, r2: f64) -> bool {
    let allocated: usize = plans.iter().map(|p| p.count).sum();
    if allocated > n {
        return false;
    }
    let leftover: f64 = plans.iter().map(|p| p.remainder * p.remainder).sum::<f64>() / r2;
    let has_remainder = plans.iter().any(|p| p.remainder > 0.0);
    (leftover - cats as f64).abs() <= SNAP * plans.len() as f64 && (cats == 0) != has_remainder
}

/// Equiamplitude expansion of `psi` into `n` microstates adapted to the
/// cells of `resolution`: all but at most `k − 1` microstates lie in the
/// range of exactly one cell.
///
/// Cell `i` receives `m_i = ⌊n·α_i²/‖ψ‖²⌋` eigenstate microstates (exact
/// integers within rounding noise are kept exact). Leftover components are
/// recombined into `n − Σ m_i` cat microstates.
pub fn expand_adapted(
    psi: &StateVector,
    resolution: &Resolution,
    n: usize,
) -> Result<EquiampExpansion> {
    let k = resolution.len();
    if n < k {
        return Err(Error::TooFewMicrostates { n, cells: k });
    }
    if resolution.dims() != psi.dims() {
        return Err(Error::DimensionMismatch {
            expected: resolution.dims().to_vec(),
            actual: psi.dims().to_vec(),
        });
    }
    let total_sqr = psi.checked_norm_sqr()?;
    let r2 = total_sqr / n as f64;

    let components: Vec<StateVector> = resolution
        .projectors()
        .iter()
        .map(|p| p.apply(psi))
        .collect::<Result<_>>()?;
    let alphas: Vec<f64> = components.iter().map(StateVector::norm).collect();

    let (mut plans, mut cats) = plan_cells(&alphas, total_sqr, n, true);
    if !plan_is_consistent(&plans, cats, n, r2) {
        (plans, cats) = plan_cells(&alphas, total_sqr, n, false);
    }
    if cats == 0 {
        for p in plans.iter_mut() {
            p.remainder = 0.0;
        }
    }

    for (i, (plan, proj)) in plans.iter().zip(resolution.projectors()).enumerate() {
        if plan.count == 0 {
            continue;
        }
        let needed = plan.count + usize::from(plan.remainder > 0.0);
        let rank = proj.rank();
        if rank < needed {
            return Err(Error::RankTooSmall {
                cell: i,
                rank,
                needed,
            });
        }
    }

    let mut microstates: Vec<StateVector> = Vec::with_capacity(n);
    let mut remainders: Vec<Vec<C64>> = Vec::new();
    let mut remainder_norms: Vec<f64> = Vec::new();

    for ((plan, proj), (component, &alpha)) in plans
        .iter()
        .zip(resolution.projectors())
        .zip(components.iter().zip(&alphas))
    {
        if plan.negligible {
            continue;
        }
        if plan.count == 0 {
            if plan.remainder > 0.0 {
                remainders.push(component.amplitudes().to_vec());
                remainder_norms.push(alpha);
            }
            continue;
        }
        let unit: Vec<C64> = component.amplitudes().iter().map(|c| c / alpha).collect();
        let has_rem = plan.remainder > 0.0;
        let size = plan.count + usize::from(has_rem);
        let frame = frame_in_range(proj, &unit, size);
        let mut target = vec![C64::new(0.0, 0.0); size];
        target[0] = C64::new(alpha, 0.0);
        let mut norms = vec![plan.eig_norm; plan.count];
        if has_rem {
            norms.push(plan.remainder);
        }
        let mut pieces = split_in_frame(&frame, &target, &norms);
        if has_rem {
            remainders.push(pieces.pop().expect("remainder piece"));
            remainder_norms.push(plan.remainder);
        }
        microstates.extend(pieces.into_iter().map(|amps| psi.map_amps(amps)));
    }

    if cats > 0 {
        if remainders.len() < cats {
            return Err(Error::InvalidExpansion(format!(
                "{cats} cat microstates requested from {} remainders",
                remainders.len()
            )));
        }
        let frame: Vec<Vec<C64>> = remainders
            .iter()
            .map(|v| {
                let nv = norm(v);
                v.iter().map(|c| c / nv).collect()
            })
            .collect();
        let target: Vec<C64> = frame
            .iter()
            .zip(&remainders)
            .map(|(f, v)| inner(f, v))
            .collect();
        let cat_norm = (remainder_norms.iter().map(|x| x * x).sum::<f64>() / cats as f64).sqrt();
        let norms = vec![cat_norm; cats];
        let pieces = split_in_frame(&frame, &target, &norms);
        microstates.extend(pieces.into_iter().map(|amps| psi.map_amps(amps)));
    }

    if microstates.len() != n {
        return Err(Error::InvalidExpansion(format!(
            "constructed {} microstates, expected {n}",
            microstates.len()
        )));
    }
    Ok(EquiampExpansion::from_construction(
        psi.clone(),
        microstates,
    ))
}

/// A seeded generic equiamplitude expansion of `psi` into `n` microstates.
///
/// The frame `{ψ̂, g_1, …, g_{n−1}}` is completed from Gaussian vectors by
/// modified Gram-Schmidt, so each seed picks a different member of the
/// continuum of expansions; a given seed reproduces its output exactly.
pub fn expand_generic(psi: &StateVector, n: usize, seed: u64) -> Result<EquiampExpansion> {
    let dim = psi.dim();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "expansion size must be positive".into(),
        ));
    }
    if n > dim {
        return Err(Error::InsufficientDimension { n, dim });
    }
    let total = psi.checked_norm_sqr()?.sqrt();
    let unit: Vec<C64> = psi.amplitudes().iter().map(|c| c / total).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frame: Vec<Vec<C64>> = Vec::with_capacity(n);
    frame.push(unit);
    while frame.len() < n {
        let mut g = random_complex(dim, &mut rng);
        let scale = norm(&g);
        let residual = crate::hilbert::orthogonalize(&mut g, &frame);
        if residual > 1e-6 * scale {
            g.iter_mut().for_each(|c| *c /= residual);
            frame.push(g);
        }
    }
    let mut target = vec![C64::new(0.0, 0.0); n];
    target[0] = C64::new(total, 0.0);
    let r = total / (n as f64).sqrt();
    let pieces = split_in_frame(&frame, &target, &vec![r; n]);
    let microstates = pieces.into_iter().map(|amps| psi.map_amps(amps)).collect();
    Ok(EquiampExpansion::from_construction(
        psi.clone(),
        microstates,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::orthonormality_deviation as max_gram_deviation;

    #[test]
    fn reflection_maps_x_to_y() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let mut x = random_complex(6, &mut rng);
            let mut y = random_complex(6, &mut rng);
            let (nx, ny) = (norm(&x), norm(&y));
            x.iter_mut().for_each(|c| *c /= nx);
            y.iter_mut().for_each(|c| *c /= ny);
            let refl = Reflection::new(&x, &y);
            // Standard frame: columns are unit vectors.
            let frame: Vec<Vec<C64>> = (0..6)
                .map(|j| {
                    let mut e = vec![C64::new(0.0, 0.0); 6];
                    e[j] = C64::new(1.0, 0.0);
                    e
                })
                .collect();
            let w = refl.frame_image(&frame);
            let cols: Vec<Vec<C64>> = (0..6).map(|j| refl.column(j, &frame[j], &w, 1.0)).collect();
            assert!(max_gram_deviation(&cols) < 1e-13);
            let mut wx = vec![C64::new(0.0, 0.0); 6];
            for (xj, col) in x.iter().zip(&cols) {
                axpy(*xj, col, &mut wx);
            }
            let err: f64 = wx
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-13);
        }
    }

    #[test]
    fn reflection_handles_parallel_inputs() {
        let x = vec![C64::new(0.0, 1.0), C64::new(0.0, 0.0)];
        let y = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let refl = Reflection::new(&x, &y);
        assert!(refl.v.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
    }

    #[test]
    fn plan_snaps_exact_quarters() {
        let total = 1.0;
        let alphas = [0.25f64.sqrt() * (1.0 + 1e-15), 0.75f64.sqrt()];
        let (plans, cats) = plan_cells(&alphas, total, 100, true);
        assert_eq!(plans[0].count, 25);
        assert_eq!(plans[1].count, 75);
        assert_eq!(cats, 0);
        assert!(plan_is_consistent(&plans, cats, 100, total / 100.0));
    }

    #[test]
    fn plan_floors_thirds() {
        let alphas = [(1.0f64 / 3.0).sqrt(), (2.0f64 / 3.0).sqrt()];
        let (plans, cats) = plan_cells(&alphas, 1.0, 10, true);
        assert_eq!((plans[0].count, plans[1].count, cats), (3, 6, 1));
        assert!(plan_is_consistent(&plans, cats, 10, 0.1));
    }
}
