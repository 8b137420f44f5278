//! Classical trajectories, invariant-drift monitoring and the reduced radial
//! problem.

pub mod dopri;
pub mod radial;

use crate::error::{Error, Result};
use crate::integrals::{angular_casimirs, runge_lenz};
use crate::model::{check_radius, eval_hamiltonian, norm, ModelParams, PhaseState};

use dopri::{DenseSegment, Outcome, StepControl};
pub use radial::{
    circular_radius, effective_force_gradient, effective_potential, p_transform, q_transform, radial_period,
    reduced_hamiltonian, turning_points, EffectiveProblem, RadialState,
};

/// Hamilton's equations, returned as `(dq/dt, dp/dt)`.
pub fn equations_of_motion(state: &PhaseState, params: &ModelParams) -> Result<(Vec<f64>, Vec<f64>)> {
    state.check_dim(params)?;
    let r = state.radius();
    check_radius(r)?;
    let mut dq = vec![0.0; state.dim()];
    let mut dp = vec![0.0; state.dim()];
    write_derivative(&state.q, &state.p, r, params, &mut dq, &mut dp);
    Ok((dq, dp))
}

fn write_derivative(q: &[f64], p: &[f64], r: f64, params: &ModelParams, dq: &mut [f64], dp: &mut [f64]) {
    let eta = params.eta();
    let denom = eta + r;
    let p2: f64 = p.iter().map(|v| v * v).sum();
    let speed = r / denom;
    let radial_force = (0.5 * eta * p2 + params.k()) / (denom * denom);
    for i in 0..q.len() {
        dq[i] = speed * p[i];
        dp[i] = -q[i] / r * radial_force;
    }
}

/// Radius below which an orbit is treated as having reached the origin.
pub fn collision_radius(params: &ModelParams) -> f64 {
    if params.eta() > 0.0 {
        1e-8 * params.eta()
    } else {
        1e-10
    }
}

/// Why an integration stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Halt {
    Completed,
    /// The orbit fell into the origin at time `t`.
    Collision { t: f64, r: f64 },
}

/// Maximum relative drift of one conserved quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Drift {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub invariant_drift: Vec<Drift>,
    pub halt: Halt,
    pub params: ModelParams,
    segments: Vec<DenseSegment>,
}

impl Trajectory {
    pub fn max_drift(&self) -> f64 {
        self.invariant_drift.iter().map(|d| d.value).fold(0.0, f64::max)
    }

    pub fn initial(&self) -> &PhaseState {
        &self.states[0]
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Dense-output state at any `t` inside the integrated span.
    pub fn state_at(&self, t: f64) -> Result<PhaseState> {
        let (t0, t1) = (self.times[0], self.final_time());
        if !(t0..=t1).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [{t0}, {t1}]")));
        }
        if self.segments.is_empty() {
            return Ok(self.states[0].clone());
        }
        let idx = self.segments.partition_point(|s| s.t1() < t).min(self.segments.len() - 1);
        Ok(PhaseState::from_flat(&self.segments[idx].eval(t)))
    }

    /// Times at which the orbit passes a pericenter (`q·p` crosses zero
    /// upwards), located by bisection on the dense output.
    pub fn pericenter_times(&self) -> Vec<f64> {
        let radial = |y: &[f64]| {
            let n = y.len() / 2;
            (0..n).map(|i| y[i] * y[n + i]).sum::<f64>()
        };
        let mut out = Vec::new();
        for seg in &self.segments {
            let mut a = seg.t0;
            let mut fa = radial(&seg.eval(a));
            // a few sub-samples so that tangential passes inside one step are seen
            for j in 1..=4 {
                let b = seg.t0 + seg.h * j as f64 / 4.0;
                let fb = radial(&seg.eval(b));
                if fa < 0.0 && fb >= 0.0 {
                    let (mut lo, mut hi) = (a, b);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if mid <= lo || mid >= hi {
                            break;
                        }
                        if radial(&seg.eval(mid)) < 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    out.push(0.5 * (lo + hi));
                }
                a = b;
                fa = fb;
            }
        }
        out
    }

    /// Radial period from consecutive pericenters, or the closed form when
    /// fewer than two are seen or the orbit is circular to `1e−6` relative.
    pub fn radial_period(&self) -> Result<f64> {
        let (lo, hi) = self
            .states
            .iter()
            .map(|s| s.radius())
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
        let peri = if hi - lo > 1e-6 * hi { self.pericenter_times() } else { Vec::new() };
        if peri.len() >= 2 {
            let count = (peri.len() - 1) as f64;
            return Ok((peri[peri.len() - 1] - peri[0]) / count);
        }
        let problem = EffectiveProblem::from_state(self.initial(), &self.params)?;
        radial_period(problem.energy.unwrap(), &problem)
    }
}

/// Relative-drift scales for the monitored quantities at the initial state.
fn invariant_values(state: &PhaseState, params: &ModelParams) -> Result<(Vec<String>, Vec<f64>)> {
    let n = state.dim();
    let mut labels = vec!["H".to_string()];
    let mut values = vec![eval_hamiltonian(state, params)?];
    for m in 2..=n {
        let (upper, lower) = angular_casimirs(state, m)?;
        labels.push(format!("C^({m})"));
        values.push(upper);
        if m < n {
            labels.push(format!("C_({m})"));
            values.push(lower);
        }
    }
    for (i, r) in runge_lenz(state, params)?.into_iter().enumerate() {
        labels.push(format!("R_{}", i + 1));
        values.push(r);
    }
    Ok((labels, values))
}

fn drift_scales(state: &PhaseState, params: &ModelParams, values: &[f64]) -> Result<Vec<f64>> {
    let n = state.dim();
    let r = state.radius();
    let denom = params.eta() + r;
    let kinetic = r * state.momentum_squared() / (2.0 * denom);
    let potential = params.k() / denom;
    let energy = values[0];
    let l2 = angular_casimirs(state, n)?.0;
    let rl_norm = norm(&values[values.len() - n..]);

    let mut scales = vec![(kinetic.abs() + potential.abs()).max(f64::MIN_POSITIVE)];
    let casimir_count = values.len() - 1 - n;
    scales.extend(std::iter::repeat_n(l2.max(1e-300), casimir_count));
    let rl_scale = rl_norm.max((params.eta() * energy + params.k()).abs()).max(1e-300);
    scales.extend(std::iter::repeat_n(rl_scale, n));
    Ok(scales)
}

/// Adaptive Dormand-Prince integration from `t = 0` to `t_end`.
///
/// `tol` is used as both the absolute and relative local error target.
/// Orbits that fall into the origin stop early with [`Halt::Collision`].
pub fn integrate(state0: &PhaseState, t_end: f64, tol: f64, params: &ModelParams) -> Result<Trajectory> {
    state0.check_dim(params)?;
    check_radius(state0.radius())?;
    if !(1e-14..=1e-4).contains(&tol) || !tol.is_finite() {
        return Err(Error::InvalidTolerance(tol));
    }
    if !t_end.is_finite() || t_end <= 0.0 {
        return Err(Error::InvalidParams(format!("t_end must be positive, got {t_end}")));
    }

    let n = state0.dim();
    let r_halt = collision_radius(params);
    let (labels, initial) = invariant_values(state0, params)?;
    let scales = drift_scales(state0, params, &initial)?;
    let mut drift = vec![0.0f64; initial.len()];

    let mut times = vec![0.0];
    let mut states = vec![state0.clone()];
    let mut segments = Vec::new();
    let mut collision: Option<(f64, f64)> = None;
    let mut failure: Option<Error> = None;

    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let (q, p) = y.split_at(n);
        let r = norm(q);
        if !(r >= r_halt) || !r.is_finite() {
            return false;
        }
        let (dq, dp) = dy.split_at_mut(n);
        write_derivative(q, p, r, params, dq, dp);
        true
    };

    let on_step = |t: f64, y: &[f64], seg: &DenseSegment| {
        let state = PhaseState::from_flat(y);
        let r = state.radius();
        segments.push(seg.clone());
        times.push(t);
        match invariant_values(&state, params) {
            Ok((_, values)) => {
                for i in 0..values.len() {
                    drift[i] = drift[i].max((values[i] - initial[i]).abs() / scales[i]);
                }
            }
            Err(e) => {
                failure = Some(e);
                return false;
            }
        }
        states.push(state);
        if r < r_halt {
            collision = Some((t, r));
            return false;
        }
        true
    };

    let (outcome, _) = dopri::integrate(rhs, 0.0, &state0.to_flat(), t_end, &StepControl::with_tolerance(tol), on_step);
    if let Some(e) = failure {
        return Err(e);
    }
    let halt = match outcome {
        Outcome::Completed => Halt::Completed,
        Outcome::Stopped(t) => {
            let (_, r) = collision.unwrap_or((t, states.last().unwrap().radius()));
            Halt::Collision { t, r }
        }
        Outcome::RhsFailure(t) => Halt::Collision { t, r: states.last().unwrap().radius() },
        Outcome::Underflow { t, h } => {
            let r = states.last().unwrap().radius();
            if r < 1e3 * r_halt {
                Halt::Collision { t, r }
            } else {
                return Err(Error::StepUnderflow { t, h });
            }
        }
    };

    let invariant_drift = labels.into_iter().zip(drift).map(|(label, value)| Drift { label, value }).collect();
    Ok(Trajectory { times, states, invariant_drift, halt, params: *params, segments })
}

/// Closest return of a bound orbit to its initial phase-space point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Closure {
    pub distance: f64,
    pub time: f64,
    pub radial_period: f64,
}

/// Minimal phase-space distance to the initial state over
/// `t ∈ (T_r/2, t_end]`, `T_r` being the detected radial period.
pub fn orbit_closure(traj: &Trajectory) -> Result<Closure> {
    let start = traj.initial();
    let energy = eval_hamiltonian(start, &traj.params)?;
    if energy >= 0.0 {
        return Err(Error::Unbound(format!("energy {energy} >= 0")));
    }
    let period = traj.radial_period()?;
    let t_from = 0.5 * period;
    if traj.final_time() <= t_from {
        return Err(Error::Domain(format!(
            "trajectory ends at {} before half a radial period ({t_from})",
            traj.final_time()
        )));
    }
    let y0 = start.to_flat();
    let dist = |y: &[f64]| y.iter().zip(&y0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();

    const SUB: usize = 8;
    let mut best = (f64::INFINITY, traj.final_time());
    for seg in &traj.segments {
        if seg.t1() <= t_from {
            continue;
        }
        for j in 0..=SUB {
            let t = (seg.t0 + seg.h * j as f64 / SUB as f64).clamp(t_from, traj.final_time());
            let d = dist(&seg.eval(t));
            if d < best.0 {
                best = (d, t);
            }
        }
    }

    // Golden-section refinement around the best sample.
    let width = traj
        .segments
        .iter()
        .find(|s| s.t1() >= best.1)
        .map(|s| s.h / SUB as f64)
        .unwrap_or(0.0);
    let mut lo = (best.1 - width).max(t_from);
    let mut hi = (best.1 + width).min(traj.final_time());
    let at = |t: f64| traj.state_at(t).map(|s| dist(&s.to_flat()));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = at(x1)?;
    let mut f2 = at(x2)?;
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = at(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = at(x2)?;
        }
    }
    for (f, x) in [(f1, x1), (f2, x2)] {
        if f < best.0 {
            best = (f, x);
        }
    }
    Ok(Closure { distance: best.0, time: best.1, radial_period: period })
}
