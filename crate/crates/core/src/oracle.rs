//! Finite-difference radial eigensolver, independent of the closed-form
//! spectrum.
//!
//! With `u = r^{(N−1)/2} ψ` the radial equation becomes the symmetric pencil
//! `−ħ²/2 u'' + [ħ²(l(l+N−2) + (N−1)(N−3)/4)/(2r²) − k/r] u = E (1 + η/r) u`.
//! Multiplying the weighted equation `H_η ψ = E ψ` by `(η+r)/r` gives the
//! same operator, so the discrete problem is `A u = E B u` with `A`
//! tridiagonal and `B = diag(1 + η/r_i)`.
//!
//! Two stencils are provided. [`Stencil::Central`] differences `u''`
//! directly on nodes `r_i = a + i h`. For even `N` the exponent `(N−1)/2` is
//! half-integer and `u` is not smooth at the origin, which spoils second
//! order; [`Stencil::Conservative`] instead discretises
//! `r^{1−N}(r^{N−1}ψ')'` in flux form on cell centres `r_i = a + (i − ½)h`
//! and then symmetrises, which keeps second order for every `N`.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::spectrum::{angular_eigenvalue, energy, RadialWavefunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    Central,
    Conservative,
}

impl Stencil {
    /// Central differences for odd `N`, flux form for even `N`.
    pub fn for_dim(dim: usize) -> Self {
        if dim % 2 == 1 {
            Stencil::Central
        } else {
            Stencil::Conservative
        }
    }

    /// Smallest refinement ratio whose nodes contain the coarse nodes.
    pub fn nesting_ratio(&self) -> usize {
        match self {
            Stencil::Central => 2,
            Stencil::Conservative => 3,
        }
    }
}

/// Uniform grid of unknowns `r_min, r_min + h, …, r_max`. The solution is
/// held at zero one step beyond either end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
}

pub const MIN_POINTS: usize = 100;

impl RadialGrid {
    pub fn new(r_min: f64, r_max: f64, points: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(Error::InvalidGrid(format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]")));
        }
        if points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!("need at least {MIN_POINTS} points, got {points}")));
        }
        Ok(Self { r_min, r_max, points })
    }

    /// Grid whose left boundary sits at the origin: nodes `i h` for the
    /// central stencil, cell centres `(i − ½) h` for the flux form.
    pub fn anchored(r_max: f64, points: usize, stencil: Stencil) -> Result<Self> {
        if points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!("need at least {MIN_POINTS} points, got {points}")));
        }
        let h = match stencil {
            Stencil::Central => r_max / points as f64,
            Stencil::Conservative => r_max / (points as f64 - 0.5),
        };
        let r_min = match stencil {
            Stencil::Central => h,
            Stencil::Conservative => 0.5 * h,
        };
        Self::new(r_min, r_max, points)
    }

    pub fn spacing(&self) -> f64 {
        (self.r_max - self.r_min) / (self.points - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points).map(|i| self.r_min + h * i as f64).collect()
    }

    /// Grid with spacing `h/ratio` sharing this grid's boundaries; every
    /// coarse node is a fine node when `ratio` is a multiple of the
    /// stencil's nesting ratio.
    pub fn refined(&self, ratio: usize, stencil: Stencil) -> Result<Self> {
        let h = self.spacing();
        let fine = h / ratio as f64;
        let (left, offset) = match stencil {
            Stencil::Central => (self.r_min - h, fine),
            Stencil::Conservative => (self.r_min - 0.5 * h, 0.5 * fine),
        };
        let points = ratio * self.points;
        let r_min = left + offset;
        Self::new(r_min, r_min + fine * (points - 1) as f64, points)
    }
}

/// The pencil `A u = E B u`; `A` is stored by its diagonal and
/// superdiagonal, `B` by its diagonal.
#[derive(Debug, Clone)]
pub struct DiscretizedRadialProblem {
    pub diagonal: Vec<f64>,
    pub off_diagonal: Vec<f64>,
    pub weight: Vec<f64>,
    pub grid: RadialGrid,
    pub stencil: Stencil,
    pub l: usize,
    pub params: ModelParams,
}

pub fn discretize(l: usize, params: &ModelParams, grid: &RadialGrid) -> DiscretizedRadialProblem {
    discretize_with(l, params, grid, Stencil::for_dim(params.dim()))
}

pub fn discretize_with(
    l: usize,
    params: &ModelParams,
    grid: &RadialGrid,
    stencil: Stencil,
) -> DiscretizedRadialProblem {
    let nodes = grid.nodes();
    let h = grid.spacing();
    let hb2 = params.hbar() * params.hbar();
    let dim = params.dim() as f64;
    let angular = angular_eigenvalue(l, params);
    let (diagonal, off_diagonal) = match stencil {
        Stencil::Central => {
            let shift = hb2 * (dim - 1.0) * (dim - 3.0) / 4.0;
            let diag = nodes
                .iter()
                .map(|&r| hb2 / (h * h) + (angular + shift) / (2.0 * r * r) - params.k() / r)
                .collect();
            (diag, vec![-hb2 / (2.0 * h * h); nodes.len() - 1])
        }
        Stencil::Conservative => {
            let face = |r: f64| r.max(0.0).powf(dim - 1.0);
            let diag = nodes
                .iter()
                .map(|&r| {
                    let flux = (face(r + 0.5 * h) + face(r - 0.5 * h)) / r.powf(dim - 1.0);
                    hb2 / (2.0 * h * h) * flux + angular / (2.0 * r * r) - params.k() / r
                })
                .collect();
            let off = nodes
                .windows(2)
                .map(|w| -hb2 / (2.0 * h * h) * face(0.5 * (w[0] + w[1])) / (w[0] * w[1]).powf(0.5 * (dim - 1.0)))
                .collect();
            (diag, off)
        }
    };
    let weight = nodes.iter().map(|&r| 1.0 + params.eta() / r).collect();
    DiscretizedRadialProblem { diagonal, off_diagonal, weight, grid: *grid, stencil, l, params: *params }
}

impl DiscretizedRadialProblem {
    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diagonal[i] * x[i];
                if i > 0 {
                    v += self.off_diagonal[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.off_diagonal[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// `B^{−1/2} A B^{−1/2}`, again symmetric tridiagonal.
    fn standard_form(&self) -> (Vec<f64>, Vec<f64>) {
        let s: Vec<f64> = self.weight.iter().map(|b| 1.0 / b.sqrt()).collect();
        let d = self.diagonal.iter().zip(&s).map(|(a, s)| a * s * s).collect();
        let e = self.off_diagonal.iter().enumerate().map(|(i, a)| a * s[i] * s[i + 1]).collect();
        (d, e)
    }

    /// Number of generalised eigenvalues below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        let (d, e) = self.standard_form();
        sturm_count(&d, &e, sigma)
    }

    /// Number of bound (negative) discrete states.
    pub fn negative_count(&self) -> usize {
        self.count_below(0.0)
    }

    /// Energy and `u` values of the `count` lowest eigenpairs.
    pub fn lowest_eigenpairs(&self, count: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        lowest_eigenpairs(self, count)
    }
}

fn sturm_count(d: &[f64], e: &[f64], sigma: f64) -> usize {
    let mut count = 0;
    let mut pivot = d[0] - sigma;
    let tiny = f64::MIN_POSITIVE.sqrt();
    for i in 0..d.len() {
        if i > 0 {
            pivot = (d[i] - sigma) - e[i - 1] * e[i - 1] / pivot;
        }
        if pivot == 0.0 {
            pivot = -tiny;
        }
        if pivot < 0.0 {
            count += 1;
        }
    }
    count
}

/// Solves `(T − σ) x = b` for tridiagonal symmetric `T` by LU with partial
/// pivoting.
fn shifted_solve(d: &[f64], e: &[f64], sigma: f64, b: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut diag: Vec<f64> = d.iter().map(|v| v - sigma).collect();
    let mut upper: Vec<f64> = e.to_vec();
    upper.push(0.0);
    let mut lower: Vec<f64> = e.to_vec();
    let mut upper2 = vec![0.0; n];
    let mut mult = vec![0.0; n];
    let mut rhs = b.to_vec();
    let guard = 1e-300;

    for i in 0..n - 1 {
        if lower[i].abs() > diag[i].abs() {
            // swap rows i and i+1
            let factor = diag[i] / lower[i];
            diag[i] = lower[i];
            let (d1, u1) = (diag[i + 1], upper[i + 1]);
            diag[i + 1] = upper[i] - factor * d1;
            upper[i] = d1;
            upper2[i] = u1;
            upper[i + 1] = -factor * u1;
            mult[i] = factor;
            rhs.swap(i, i + 1);
        } else {
            let piv = if diag[i] == 0.0 { guard } else { diag[i] };
            diag[i] = piv;
            let factor = lower[i] / piv;
            diag[i + 1] -= factor * upper[i];
            mult[i] = factor;
        }
        lower[i] = 0.0;
        rhs[i + 1] -= mult[i] * rhs[i];
    }
    if diag[n - 1] == 0.0 {
        diag[n - 1] = guard;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = rhs[i];
        if i + 1 < n {
            v -= upper[i] * x[i + 1];
        }
        if i + 2 < n {
            v -= upper2[i] * x[i + 2];
        }
        x[i] = v / diag[i];
    }
    x
}

/// The `count` algebraically smallest generalised eigenpairs of `(A, B)`,
/// with `B`-orthonormal eigenvectors whose first nonzero entry is positive.
pub fn lowest_eigenpairs(prob: &DiscretizedRadialProblem, count: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = prob.len();
    if count == 0 || count > n / 2 {
        return Err(Error::Eigensolver(format!("cannot extract {count} eigenpairs from {n} points")));
    }
    let (d, e) = prob.standard_form();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let radius = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - radius);
        hi = hi.max(d[i] + radius);
    }

    let scale = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let sqrt_b: Vec<f64> = prob.weight.iter().map(|b| b.sqrt()).collect();
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(count);
    for index in 0..count {
        // bisection for the eigenvalue with exactly `index` below it
        let (mut a, mut b) = (lo, hi);
        let mut iterations = 0;
        while b - a > 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if sturm_count(&d, &e, mid) > index {
                b = mid;
            } else {
                a = mid;
            }
            iterations += 1;
            if iterations > 2000 {
                return Err(Error::Eigensolver(format!("bisection stalled for eigenvalue {index} in [{a}, {b}]")));
            }
        }
        let lambda = 0.5 * (a + b);

        // inverse iteration from a slightly perturbed shift
        let shift = lambda + 64.0 * f64::EPSILON * scale.max(lambda.abs());
        let mut y: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919 + index * 104729) % 1009) as f64 / 1009.0).collect();
        let mut converged = false;
        for _ in 0..20 {
            let mut z = shifted_solve(&d, &e, shift, &y);
            // orthogonalise against earlier vectors in the standard form
            for (_, prev) in &pairs {
                let py: Vec<f64> = prev.iter().zip(&sqrt_b).map(|(v, s)| v * s).collect();
                let dot: f64 = py.iter().zip(&z).map(|(a, b)| a * b).sum();
                for (zi, pi) in z.iter_mut().zip(&py) {
                    *zi -= dot * pi;
                }
            }
            let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return Err(Error::Eigensolver(format!("inverse iteration broke down for eigenvalue {index}")));
            }
            let next: Vec<f64> = z.into_iter().map(|v| v / norm).collect();
            let overlap: f64 = next.iter().zip(&y).map(|(a, b)| a * b).sum();
            y = next;
            if (1.0 - overlap.abs()) < 1e-14 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Eigensolver(format!("inverse iteration did not converge for eigenvalue {index}")));
        }
        let mut u: Vec<f64> = y.iter().zip(&sqrt_b).map(|(v, s)| v / s).collect();
        if u.iter().find(|v| v.abs() > 1e-8).copied().unwrap_or(1.0) < 0.0 {
            u.iter_mut().for_each(|v| *v = -*v);
        }
        pairs.push((lambda, u));
    }
    Ok(pairs)
}

/// Radius for an oracle grid resolving level `(n, l)`: the larger of eight
/// outer classical turning points and the radius where the weighted density
/// of the closed-form eigenfunction drops below `1e−18` of its peak.
pub fn default_r_max(n: usize, l: usize, params: &ModelParams) -> Result<f64> {
    let e = energy(n, l, params)?;
    let k = params.k();
    let eta = params.eta();
    let l2 = angular_eigenvalue(l, params);
    // larger root of E r² + (Eη + k) r − L²/2 = 0 with E < 0
    let b = e * eta + k;
    let disc = (b * b + 2.0 * e * l2).max(0.0).sqrt();
    let outer = (b + disc) / (-2.0 * e);
    let envelope = RadialWavefunction::for_level(n, l, params)?.truncation_radius();
    Ok((8.0 * outer).max(envelope))
}

/// `‖A u − E B u‖ / ‖u‖_B` for `u = r^{(N−1)/2} ψ`, using the discrete
/// norms `‖v‖² = h Σ v_i²` and `‖u‖_B² = h Σ b_i u_i²`.
pub fn residual_norm(psi: &[f64], energy: f64, l: usize, params: &ModelParams, grid: &RadialGrid) -> Result<f64> {
    let prob = discretize(l, params, grid);
    let (res, norm) = residual_vector(&prob, psi, energy)?;
    Ok(discrete_norm(&res, grid) / norm)
}

fn residual_vector(prob: &DiscretizedRadialProblem, psi: &[f64], energy: f64) -> Result<(Vec<f64>, f64)> {
    if psi.len() != prob.len() {
        return Err(Error::DimensionMismatch { expected: prob.len(), actual: psi.len() });
    }
    let power = 0.5 * (prob.params.dim() as f64 - 1.0);
    let u: Vec<f64> = prob.grid.nodes().iter().zip(psi).map(|(r, p)| r.powf(power) * p).collect();
    let au = prob.apply(&u);
    let res: Vec<f64> = (0..u.len()).map(|i| au[i] - energy * prob.weight[i] * u[i]).collect();
    let h = prob.grid.spacing();
    let norm = (h * u.iter().zip(&prob.weight).map(|(v, b)| b * v * v).sum::<f64>()).sqrt();
    Ok((res, norm))
}

fn discrete_norm(v: &[f64], grid: &RadialGrid) -> f64 {
    (grid.spacing() * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

/// Residual of a profile `ψ(r)` after removing the `h²` error: the
/// residual vectors on `grid` and on its nested refinement (ratio `ρ`) are
/// combined at the coarse nodes as `(ρ² res_fine − res_coarse)/(ρ² − 1)`.
pub fn extrapolated_residual_norm<F: Fn(f64) -> f64>(
    psi: F,
    energy: f64,
    l: usize,
    params: &ModelParams,
    grid: &RadialGrid,
) -> Result<f64> {
    let stencil = Stencil::for_dim(params.dim());
    let ratio = stencil.nesting_ratio();
    let fine_grid = grid.refined(ratio, stencil)?;
    let coarse = discretize_with(l, params, grid, stencil);
    let fine = discretize_with(l, params, &fine_grid, stencil);
    let sample = |g: &RadialGrid| g.nodes().iter().map(|&r| psi(r)).collect::<Vec<_>>();
    let (res_c, norm) = residual_vector(&coarse, &sample(grid), energy)?;
    let (res_f, _) = residual_vector(&fine, &sample(&fine_grid), energy)?;
    let offset = match stencil {
        Stencil::Central => ratio - 1,
        Stencil::Conservative => ratio / 2,
    };
    let rho2 = (ratio * ratio) as f64;
    let combined: Vec<f64> = (0..res_c.len())
        .map(|i| (rho2 * res_f[offset + ratio * i] - res_c[i]) / (rho2 - 1.0))
        .collect();
    Ok(discrete_norm(&combined, grid) / norm)
}

/// Oracle energy of level `(n, l)` on an anchored grid of `points` nodes.
pub fn oracle_energy(n: usize, l: usize, params: &ModelParams, r_max: f64, points: usize) -> Result<f64> {
    let grid = RadialGrid::anchored(r_max, points, Stencil::for_dim(params.dim()))?;
    let prob = discretize(l, params, &grid);
    Ok(prob.lowest_eigenpairs(n + 1)?[n].0)
}
