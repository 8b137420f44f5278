//! System parameters, the classical Hamiltonian and the geometry of the
//! conformally flat Taub-NUT-type space `ds² = (1 + η/|q|) dq²`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// One instance of the deformed Kepler-Coulomb system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    eta: f64,
    k: f64,
    hbar: f64,
    dim: usize,
}

impl ModelParams {
    /// Validates `eta ≥ 0`, `hbar > 0`, `dim ≥ 2` and finiteness.
    pub fn new(eta: f64, k: f64, hbar: f64, dim: usize) -> Result<Self> {
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::InvalidParams(format!("eta must be finite and >= 0, got {eta}")));
        }
        if !k.is_finite() {
            return Err(Error::InvalidParams(format!("k must be finite, got {k}")));
        }
        if !hbar.is_finite() || hbar <= 0.0 {
            return Err(Error::InvalidParams(format!("hbar must be finite and > 0, got {hbar}")));
        }
        if dim < 2 {
            return Err(Error::InvalidParams(format!("dimension must be >= 2, got {dim}")));
        }
        Ok(Self { eta, k, hbar, dim })
    }

    /// `ħ = 1` convenience constructor.
    pub fn with_unit_hbar(eta: f64, k: f64, dim: usize) -> Result<Self> {
        Self::new(eta, k, 1.0, dim)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same system with a different deformation parameter.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(eta, self.k, self.hbar, self.dim)
    }

    pub fn with_k(&self, k: f64) -> Result<Self> {
        Self::new(self.eta, k, self.hbar, self.dim)
    }
}

/// Cartesian positions and conjugate momenta.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhaseState {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch { expected: q.len(), actual: p.len() });
        }
        if q.len() < 2 {
            return Err(Error::InvalidParams(format!("state dimension must be >= 2, got {}", q.len())));
        }
        Ok(Self { q, p })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn radius(&self) -> f64 {
        norm(&self.q)
    }

    pub fn momentum_squared(&self) -> f64 {
        self.p.iter().map(|x| x * x).sum()
    }

    /// `q·p = r p_r`.
    pub fn radial_action(&self) -> f64 {
        self.q.iter().zip(&self.p).map(|(a, b)| a * b).sum()
    }

    /// Packs `(q, p)` into a single vector of length `2N`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut y = self.q.clone();
        y.extend_from_slice(&self.p);
        y
    }

    pub fn from_flat(y: &[f64]) -> Self {
        let n = y.len() / 2;
        Self { q: y[..n].to_vec(), p: y[n..].to_vec() }
    }

    pub(crate) fn check_dim(&self, params: &ModelParams) -> Result<()> {
        if self.dim() != params.dim() {
            return Err(Error::DimensionMismatch { expected: params.dim(), actual: self.dim() });
        }
        Ok(())
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    // hypot-style scaling keeps tiny and huge radii accurate
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

pub(crate) fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::SingularOrigin { r })
    }
}

/// `H_η = |q| p² / (2(η + |q|)) − k / (η + |q|)`.
pub fn eval_hamiltonian(state: &PhaseState, params: &ModelParams) -> Result<f64> {
    state.check_dim(params)?;
    let r = state.radius();
    check_radius(r)?;
    Ok(radial_hamiltonian_parts(r, state.momentum_squared(), params))
}

pub(crate) fn radial_hamiltonian_parts(r: f64, p2: f64, params: &ModelParams) -> f64 {
    if params.eta() == 0.0 {
        return 0.5 * p2 - params.k() / r;
    }
    let denom = params.eta() + r;
    r * p2 / (2.0 * denom) - params.k() / denom
}

/// Squared conformal factor `f(r)² = 1 + η/r`.
pub fn metric_factor(r: f64, params: &ModelParams) -> Result<f64> {
    if params.eta() == 0.0 && r > 0.0 {
        return Ok(1.0);
    }
    check_radius(r)?;
    Ok(1.0 + params.eta() / r)
}

/// Scalar curvature `η(N−1)[4(N−3)r + 3(N−2)η] / (4r(η+r)³)`.
pub fn scalar_curvature(r: f64, params: &ModelParams) -> Result<f64> {
    check_radius(r)?;
    Ok(curvature_formula(params.dim(), params.eta(), r))
}

/// Curvature formula for an arbitrary dimension label, including the
/// degenerate `N = 1` line where it vanishes identically.
pub fn curvature_formula(dim: usize, eta: f64, r: f64) -> f64 {
    let n = dim as f64;
    eta * (n - 1.0) * (4.0 * (n - 3.0) * r + 3.0 * (n - 2.0) * eta)
        / (4.0 * r * (eta + r).powi(3))
}

/// Radial Green function `U(r) = ∫^r dr'/(r'² f(r'))` with zero integration
/// constant: `−(2/η)√(1 + η/r)` for `η > 0` and `−1/r` for `η = 0`.
pub fn green_function(r: f64, params: &ModelParams) -> Result<f64> {
    check_radius(r)?;
    let eta = params.eta();
    if eta == 0.0 {
        Ok(-1.0 / r)
    } else {
        Ok(-(2.0 / eta) * (1.0 + eta / r).sqrt())
    }
}

/// `U'(r) = 1/(r² f(r))`.
pub fn green_function_derivative(r: f64, params: &ModelParams) -> Result<f64> {
    check_radius(r)?;
    Ok(1.0 / (r * r * (1.0 + params.eta() / r).sqrt()))
}

/// Free constants of the intrinsic Kepler-Coulomb (`A U + B`) and oscillator
/// (`C/U² + D`) potentials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl PotentialConstants {
    /// `C = k/η`, `D = −C`: the choice under which the oscillator branch is
    /// the system's own potential `−k/(η + r)`. Undefined at `η = 0`.
    pub fn system_oscillator(params: &ModelParams) -> Result<Self> {
        if params.eta() == 0.0 {
            return Err(Error::Domain(
                "the oscillator identification C = k/eta requires eta > 0".into(),
            ));
        }
        let c = params.k() / params.eta();
        Ok(Self { a: 0.0, b: 0.0, c, d: -c })
    }
}

/// Evaluates `(U_KC, U_O) = (A√(1+η/r) + B, C r/(r+η) + D)` on the Taub-NUT space.
///
/// The multiplicative constants of the Green function are absorbed into `A`
/// and `C`.
pub fn intrinsic_potentials(
    r: f64,
    params: &ModelParams,
    constants: &PotentialConstants,
) -> Result<(f64, f64)> {
    check_radius(r)?;
    let eta = params.eta();
    let kc = constants.a * (1.0 + eta / r).sqrt() + constants.b;
    let osc = constants.c * r / (r + eta) + constants.d;
    Ok((kc, osc))
}

/// Hyperspherical coordinates: `θ_1..θ_{N−2} ∈ [0, π]`, `θ_{N−1} ∈ [0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypersphericalPoint {
    pub r: f64,
    pub theta: Vec<f64>,
}

impl HypersphericalPoint {
    pub fn new(r: f64, theta: Vec<f64>) -> Result<Self> {
        check_radius(r)?;
        if theta.is_empty() {
            return Err(Error::InvalidParams("at least one angle is required".into()));
        }
        let last = theta.len() - 1;
        for (i, &t) in theta.iter().enumerate() {
            let ok = if i == last { (0.0..2.0 * PI).contains(&t) } else { (0.0..=PI).contains(&t) };
            if !ok {
                return Err(Error::AngleOutOfRange { index: i + 1, value: t });
            }
        }
        Ok(Self { r, theta })
    }

    pub fn dim(&self) -> usize {
        self.theta.len() + 1
    }
}

pub fn to_hyperspherical(q: &[f64]) -> Result<HypersphericalPoint> {
    let n = q.len();
    if n < 2 {
        return Err(Error::InvalidParams(format!("dimension must be >= 2, got {n}")));
    }
    let r = norm(q);
    check_radius(r)?;
    let mut theta = Vec::with_capacity(n - 1);
    for j in 0..n - 2 {
        let tail = norm(&q[j + 1..]);
        theta.push(tail.atan2(q[j]));
    }
    let mut phi = q[n - 1].atan2(q[n - 2]);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    if phi >= 2.0 * PI {
        phi = 0.0;
    }
    theta.push(phi);
    Ok(HypersphericalPoint { r, theta })
}

/// `q_j = r cos θ_j ∏_{k<j} sin θ_k` for `j < N`, `q_N = r ∏_{k<N} sin θ_k`.
pub fn from_hyperspherical(point: &HypersphericalPoint) -> Vec<f64> {
    let n = point.dim();
    let mut q = Vec::with_capacity(n);
    let mut sines = point.r;
    for j in 0..n - 1 {
        q.push(sines * point.theta[j].cos());
        sines *= point.theta[j].sin();
    }
    q.push(sines);
    q
}
