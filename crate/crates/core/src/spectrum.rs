//! Closed-form bound states of the deformed quantum problem.
//!
//! Separating `Ψ = ψ(r) Y_l` in the weighted Schrödinger equation gives the
//! Coulomb-type radial equation
//! `−ħ²/2 (ψ'' + (N−1)ψ'/r) + ħ² l(l+N−2)/(2r²) ψ − K ψ/r = E ψ`
//! with the energy-dependent coupling `K = k + ηE`. Bound states satisfy
//! `E = −K²/(2ħ²Ñ²)` with `Ñ = n + l + (N−1)/2`.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quadrature::{self, QuadratureOptions};

/// Effective principal number `Ñ = n + l + (N−1)/2`.
pub fn effective_principal(n: usize, l: usize, dim: usize) -> f64 {
    (n + l) as f64 + 0.5 * (dim as f64 - 1.0)
}

/// Bound-state energy
/// `E = −k² / (ħ²Ñ² + ηk + √(ħ⁴Ñ⁴ + 2ηkħ²Ñ²))`.
///
/// This is the `+` root of `η²E² + 2(ħ²Ñ² + ηk)E + k² = 0` written without
/// the cancellation of the textbook quotient; at `η = 0` it reduces to the
/// hydrogen value `−k²/(2ħ²Ñ²)`.
pub fn energy(n: usize, l: usize, params: &ModelParams) -> Result<f64> {
    let k = params.k();
    if k <= 0.0 {
        return Err(Error::Unbound(format!("coupling k = {k} has no bound states")));
    }
    let a = scale(n, l, params);
    let ek = params.eta() * k;
    Ok(-k * k / (a + ek + (a * a + 2.0 * ek * a).sqrt()))
}

fn scale(n: usize, l: usize, params: &ModelParams) -> f64 {
    let nt = effective_principal(n, l, params.dim());
    params.hbar() * params.hbar() * nt * nt
}

/// Which root of the energy quadratic to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// Both roots `[−ħ²Ñ² − ηk ± √(ħ⁴Ñ⁴ + 2ηkħ²Ñ²)]/η²` in the direct quotient
/// form. Only the `+` root is physical; the `−` root has `K < 0`.
pub fn quadratic_root(n: usize, l: usize, params: &ModelParams, branch: Branch) -> Result<f64> {
    let eta = params.eta();
    if eta <= 0.0 {
        return Err(Error::Domain("the quotient form needs eta > 0".into()));
    }
    let a = scale(n, l, params);
    let ek = eta * params.k();
    let root = (a * a + 2.0 * ek * a).sqrt();
    let sign = match branch {
        Branch::Plus => 1.0,
        Branch::Minus => -1.0,
    };
    Ok((-a - ek + sign * root) / (eta * eta))
}

/// `K = k + ηE`.
pub fn coupling(energy: f64, params: &ModelParams) -> f64 {
    params.k() + params.eta() * energy
}

/// `ħ² l (l + N − 2)`.
pub fn angular_eigenvalue(l: usize, params: &ModelParams) -> f64 {
    let h2 = params.hbar() * params.hbar();
    h2 * (l * (l + params.dim() - 2)) as f64
}

/// First-order expansion `−k²/(2ħ²Ñ²) + ηk³/(2ħ⁴Ñ⁴)`.
pub fn perturbative_energy(n: usize, l: usize, params: &ModelParams) -> f64 {
    let a = scale(n, l, params);
    let k = params.k();
    -k * k / (2.0 * a) + params.eta() * k.powi(3) / (2.0 * a * a)
}

fn binomial(n: i64, k: i64) -> u128 {
    if k < 0 || n < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of independent degree-`l` harmonics on the sphere `S^{N−1}`.
pub fn harmonic_multiplicity(dim: usize, l: usize) -> u128 {
    let (n, l) = (dim as i64, l as i64);
    binomial(n + l - 1, l) - binomial(n + l - 3, l - 2)
}

/// Number of states with `n + l = principal`.
pub fn degeneracy(principal: usize, params: &ModelParams) -> u128 {
    (0..=principal).map(|l| harmonic_multiplicity(params.dim(), l)).sum()
}

/// An admitted bound level: `E < 0` and `K = k + ηE > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumLevel {
    pub n: usize,
    pub l: usize,
    pub energy: f64,
    pub coupling: f64,
    pub principal: usize,
}

impl QuantumLevel {
    pub fn new(n: usize, l: usize, params: &ModelParams) -> Result<Self> {
        let energy = energy(n, l, params).map_err(|e| Error::NotAdmitted { n, l, reason: e.to_string() })?;
        let coupling = coupling(energy, params);
        if !(energy < 0.0) {
            return Err(Error::NotAdmitted { n, l, reason: format!("energy {energy} is not negative") });
        }
        if !(coupling > 0.0) {
            return Err(Error::NotAdmitted { n, l, reason: format!("coupling {coupling} is not positive") });
        }
        Ok(Self { n, l, energy, coupling, principal: n + l })
    }
}

/// Generalised Laguerre polynomial `L_n^α(x)` by upward recurrence.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> Result<f64> {
    if !(alpha > -1.0) {
        return Err(Error::Domain(format!("alpha must exceed -1, got {alpha}")));
    }
    if !x.is_finite() {
        return Err(Error::Domain(format!("x must be finite, got {x}")));
    }
    let mut prev = 1.0;
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = 1.0 + alpha - x;
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + alpha - x) * cur - (jf + alpha) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Normalised radial eigenfunction `C r^l e^{−βr} L_n^{2l+N−2}(2βr)` with
/// `β = K/(ħ²Ñ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialWavefunction {
    pub level: QuantumLevel,
    pub params: ModelParams,
    pub normalization: f64,
}

impl RadialWavefunction {
    pub fn new(level: QuantumLevel, params: &ModelParams) -> Result<Self> {
        if !(level.energy < 0.0 && level.coupling > 0.0) {
            return Err(Error::NotAdmitted { n: level.n, l: level.l, reason: "not a bound level".into() });
        }
        let mut wf = Self { level, params: *params, normalization: 1.0 };
        wf.normalization = 1.0 / wf.closed_form_norm_squared().sqrt();
        Ok(wf)
    }

    pub fn for_level(n: usize, l: usize, params: &ModelParams) -> Result<Self> {
        Self::new(QuantumLevel::new(n, l, params)?, params)
    }

    /// Exponential decay rate `β`.
    pub fn decay_rate(&self) -> f64 {
        let nt = effective_principal(self.level.n, self.level.l, self.params.dim());
        self.level.coupling / (self.params.hbar() * self.params.hbar() * nt)
    }

    pub fn laguerre_order(&self) -> usize {
        2 * self.level.l + self.params.dim() - 2
    }

    /// `∫ φ² (1 + η/r) r^{N−1} dr` of the unnormalised profile, from the
    /// Laguerre moments `∫ x^α e^{−x} L² = Γ(n+α+1)/n!` and
    /// `∫ x^{α+1} e^{−x} L² = (2n+α+1) Γ(n+α+1)/n!`.
    fn closed_form_norm_squared(&self) -> f64 {
        let n = self.level.n;
        let alpha = self.laguerre_order();
        let two_beta = 2.0 * self.decay_rate();
        let ratio: f64 = (n + 1..=n + alpha).map(|j| j as f64).product();
        let moment = ratio / two_beta.powi(alpha as i32 + 1);
        moment * ((2 * n + alpha + 1) as f64 / two_beta + self.params.eta())
    }

    pub fn eval(&self, r: f64) -> f64 {
        let beta = self.decay_rate();
        let poly = laguerre(self.level.n, self.laguerre_order() as f64, 2.0 * beta * r).unwrap_or(f64::NAN);
        self.normalization * r.powi(self.level.l as i32) * (-beta * r).exp() * poly
    }

    /// Radius beyond which `r^{2n+2l+N} e^{−2βr}` has fallen below `1e−18`
    /// of its peak, so the weighted density is negligible.
    pub fn truncation_radius(&self) -> f64 {
        let power = (2 * self.level.n + 2 * self.level.l + self.params.dim()) as f64;
        let beta = self.decay_rate();
        let log_env = |r: f64| power * r.ln() - 2.0 * beta * r;
        let peak_r = power / (2.0 * beta);
        let target = log_env(peak_r) + (1e-18f64).ln();
        let mut hi = 2.0 * peak_r + 1.0 / beta;
        while log_env(hi) > target {
            hi *= 1.5;
        }
        let mut lo = peak_r;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if log_env(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Number of sign changes on `(0, r_max]` sampled at `samples` points.
    pub fn sign_changes(&self, r_max: f64, samples: usize) -> usize {
        let mut count = 0;
        let mut last = 0.0f64;
        for i in 1..=samples {
            let v = self.eval(r_max * i as f64 / samples as f64);
            if v != 0.0 {
                if last != 0.0 && v.signum() != last.signum() {
                    count += 1;
                }
                last = v;
            }
        }
        count
    }
}

/// `∫₀^∞ ψ_a ψ_b (1 + η/r) r^{N−1} dr`.
pub fn inner_product(a: &RadialWavefunction, b: &RadialWavefunction) -> Result<f64> {
    if a.level.l != b.level.l || a.params != b.params {
        return Err(Error::InvalidParams("inner product needs a common l and common parameters".into()));
    }
    let eta = a.params.eta();
    let dim = a.params.dim() as i32;
    let r_max = a.truncation_radius().max(b.truncation_radius());
    let integrand = |r: f64| a.eval(r) * b.eval(r) * (r + eta) * r.powi(dim - 2);
    let opts = QuadratureOptions { abs_tol: 1e-14, rel_tol: 1e-13, max_intervals: 4000, initial_pieces: 32 };
    quadrature::integrate(integrand, 0.0, r_max, &opts)
}

/// Pointwise residual of the radial equation with the level's `K` and `E`,
/// derivatives by second-order central differences of step `h` (shrunk near
/// the origin).
pub fn radial_residual_at(wf: &RadialWavefunction, r: f64, h: f64) -> f64 {
    let h = h.min(r);
    let dim = wf.params.dim() as f64;
    let h2 = wf.params.hbar() * wf.params.hbar();
    let (fm, f0, fp) = (wf.eval(r - h), wf.eval(r), wf.eval(r + h));
    let d1 = (fp - fm) / (2.0 * h);
    let d2 = (fp - 2.0 * f0 + fm) / (h * h);
    let kinetic = -0.5 * h2 * (d2 + (dim - 1.0) * d1 / r);
    let centrifugal = angular_eigenvalue(wf.level.l, &wf.params) / (2.0 * r * r) * f0;
    kinetic + centrifugal - wf.level.coupling * f0 / r - wf.level.energy * f0
}

/// Weighted L² norm of the radial-equation residual after one Richardson
/// step `(4 res(h/2) − res(h))/3`, which removes the `h²` error term.
///
/// The norm is taken over `r ≥ h`, where the full stencil fits; closer to
/// the origin the shrinking step is dominated by rounding.
pub fn radial_residual_norm(wf: &RadialWavefunction, h: f64) -> f64 {
    let eta = wf.params.eta();
    let dim = wf.params.dim() as i32;
    let r_max = wf.truncation_radius();
    let density = |r: f64| {
        let fine = radial_residual_at(wf, r, 0.5 * h);
        let coarse = radial_residual_at(wf, r, h);
        let res = (4.0 * fine - coarse) / 3.0;
        res * res * (r + eta) * r.powi(dim - 2)
    };
    quadrature::composite(density, h, r_max, 2000).sqrt()
}
