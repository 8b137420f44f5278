//! The reduced one-dimensional radial problem.
//!
//! After separating the angular motion the Hamiltonian reads
//! `H = r/(2(η+r)) (p_r² + L²/r²) − k/(η+r)`, and in the flattening variables
//! `Q(r) = √(r(η+r)) + η ln(√r + √(r+η))`, `P = √(r/(η+r)) p_r` it becomes
//! `P²/2 + U_eff` with `U_eff = L²/(2r(η+r)) − k/(η+r)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::integrals::total_angular_momentum_squared;
use crate::model::{check_radius, ModelParams, PhaseState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveProblem {
    pub l2: f64,
    pub params: ModelParams,
    pub energy: Option<f64>,
}

impl EffectiveProblem {
    pub fn new(l2: f64, params: ModelParams) -> Result<Self> {
        if !l2.is_finite() || l2 < 0.0 {
            return Err(Error::InvalidParams(format!("L^2 must be finite and >= 0, got {l2}")));
        }
        Ok(Self { l2, params, energy: None })
    }

    pub fn with_energy(mut self, energy: f64) -> Self {
        self.energy = Some(energy);
        self
    }

    /// Reduced problem of a Cartesian state, carrying its energy.
    pub fn from_state(state: &PhaseState, params: &ModelParams) -> Result<Self> {
        let energy = crate::model::eval_hamiltonian(state, params)?;
        Ok(Self::new(total_angular_momentum_squared(state), *params)?.with_energy(energy))
    }
}

/// `(r, p_r, L²)` of a Cartesian state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialState {
    pub r: f64,
    pub p_r: f64,
    pub l2: f64,
}

impl RadialState {
    pub fn from_state(state: &PhaseState) -> Result<Self> {
        let r = state.radius();
        check_radius(r)?;
        Ok(Self { r, p_r: state.radial_action() / r, l2: total_angular_momentum_squared(state) })
    }
}

/// `H(r, p_r, L²) = r/(2(η+r)) (p_r² + L²/r²) − k/(η+r)`.
pub fn reduced_hamiltonian(state: &RadialState, params: &ModelParams) -> Result<f64> {
    check_radius(state.r)?;
    let r = state.r;
    let denom = params.eta() + r;
    Ok(r / (2.0 * denom) * (state.p_r * state.p_r + state.l2 / (r * r)) - params.k() / denom)
}

/// `U_eff(r) = L²/(2r(η+r)) − k/(η+r)`.
pub fn effective_potential(r: f64, prob: &EffectiveProblem) -> Result<f64> {
    check_radius(r)?;
    let denom = prob.params.eta() + r;
    Ok(prob.l2 / (2.0 * r * denom) - prob.params.k() / denom)
}

/// `dU_eff/dr = −L²(η+2r)/(2r²(η+r)²) + k/(η+r)²`.
pub fn effective_force_gradient(r: f64, prob: &EffectiveProblem) -> Result<f64> {
    check_radius(r)?;
    let eta = prob.params.eta();
    let denom = eta + r;
    Ok(-prob.l2 * (eta + 2.0 * r) / (2.0 * r * r * denom * denom) + prob.params.k() / (denom * denom))
}

/// `Q(r) = √(r(η+r)) + η ln(√r + √(r+η))`.
pub fn q_transform(r: f64, params: &ModelParams) -> Result<f64> {
    check_radius(r)?;
    let eta = params.eta();
    let log_term = if eta == 0.0 { 0.0 } else { eta * (r.sqrt() + (r + eta).sqrt()).ln() };
    Ok((r * (eta + r)).sqrt() + log_term)
}

/// `P = √(r/(η+r)) p_r`.
pub fn p_transform(r: f64, p_r: f64, params: &ModelParams) -> Result<f64> {
    check_radius(r)?;
    Ok((r / (params.eta() + r)).sqrt() * p_r)
}

/// Positive roots of `E r² + (Eη + k) r − L²/2 = 0`, sorted ascending.
///
/// Returns [`Error::NoClassicalMotion`] when `E` lies below every value of
/// `U_eff` on `r > 0`.
pub fn turning_points(energy: f64, prob: &EffectiveProblem) -> Result<Vec<f64>> {
    let eta = prob.params.eta();
    let k = prob.params.k();
    let a = energy;
    let b = energy * eta + k;
    let c = -0.5 * prob.l2;

    let no_motion = || {
        let minimum = if prob.l2 > 0.0 && k > 0.0 {
            circular_radius(prob).and_then(|rc| effective_potential(rc, prob)).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        Error::NoClassicalMotion { energy, minimum }
    };

    if prob.l2 == 0.0 {
        // r (E r + Eη + k) = 0
        if a == 0.0 {
            return Err(no_motion());
        }
        let root = -b / a;
        return if root > 0.0 { Ok(vec![root]) } else { Err(no_motion()) };
    }
    if a == 0.0 {
        let root = -c / b;
        return if b != 0.0 && root > 0.0 { Ok(vec![root]) } else { Err(no_motion()) };
    }

    let mut disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        if disc.abs() <= 1e-12 * (b * b).max((4.0 * a * c).abs()) {
            disc = 0.0;
        } else {
            return Err(no_motion());
        }
    }
    let sq = disc.sqrt();
    // numerically stable pair
    let qv = -0.5 * (b + b.signum() * sq);
    let mut roots: Vec<f64> = if qv == 0.0 { vec![0.0] } else { vec![qv / a, c / qv] };
    roots.retain(|r| *r > 0.0 && r.is_finite());
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    if roots.is_empty() {
        return Err(no_motion());
    }
    Ok(roots)
}

/// Radius of the circular orbit, `[L² + √(L⁴ + 2kηL²)]/(2k)`.
pub fn circular_radius(prob: &EffectiveProblem) -> Result<f64> {
    let k = prob.params.k();
    if k <= 0.0 {
        return Err(Error::NoCircularOrbit(format!("coupling k = {k} is not attractive")));
    }
    if prob.l2 <= 0.0 {
        return Err(Error::NoCircularOrbit("L^2 = 0 has no centrifugal barrier".into()));
    }
    let l2 = prob.l2;
    Ok((l2 + (l2 * l2 + 2.0 * k * prob.params.eta() * l2).sqrt()) / (2.0 * k))
}

/// Radial period of a bound orbit, `2π(η + c)/√(2|E|)` with
/// `c = (Eη + k)/(2|E|)` the midpoint of the turning points.
///
/// Follows from `r p_r = √(2|E|(r − r₁)(r₂ − r))` and `dt = (η+r) dr/(r p_r)`.
pub fn radial_period(energy: f64, prob: &EffectiveProblem) -> Result<f64> {
    if energy >= 0.0 {
        return Err(Error::Unbound(format!("energy {energy} >= 0")));
    }
    let eta = prob.params.eta();
    let centre = (energy * eta + prob.params.k()) / (2.0 * energy.abs());
    if centre <= 0.0 {
        return Err(Error::NoClassicalMotion { energy, minimum: f64::NAN });
    }
    Ok(2.0 * PI * (eta + centre) / (2.0 * energy.abs()).sqrt())
}
