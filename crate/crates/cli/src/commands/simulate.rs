//! `simulate`: classical trajectory plus conservation and closure report.

use etakepler::dynamics::{integrate, orbit_closure, Halt, Trajectory};
use etakepler::integrals::IntegralSet;
use etakepler::model::eval_hamiltonian;
use etakepler::PhaseState;
use serde::Serialize;

use crate::config::require;
use crate::output::{Cell, Table};
use crate::{CliError, Context};

#[derive(Debug, Clone, Serialize)]
pub struct DriftEntry {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HaltReport {
    pub kind: &'static str,
    pub t: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureReport {
    pub distance: f64,
    pub time: f64,
    pub radial_period: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub eta: f64,
    pub k: f64,
    pub dim: usize,
    pub energy: f64,
    pub t_end: f64,
    pub tol: f64,
    pub steps: usize,
    pub halt: HaltReport,
    pub drift: Vec<DriftEntry>,
    pub max_drift: f64,
    pub drift_bound: f64,
    pub drift_ok: bool,
    pub closure: Option<ClosureReport>,
    pub closure_note: Option<String>,
}

pub struct Simulation {
    pub trajectory: Trajectory,
    pub table: Table,
    pub report: SimulateReport,
}

pub fn simulate(ctx: &Context) -> Result<Simulation, CliError> {
    let block = &ctx.config.simulate;
    let params = ctx.config.params(1.0)?;
    let dim = params.dim();
    require(block.q.len() == dim && block.p.len() == dim, || {
        format!("q and p need {dim} components, got {} and {}", block.q.len(), block.p.len())
    })?;
    let state = PhaseState::new(block.q.clone(), block.p.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    require(state.radius() > 0.0, || "initial position must not be the origin".into())?;
    require(block.t_end > 0.0 && block.t_end.is_finite(), || format!("t_end must be > 0, got {}", block.t_end))?;
    require((1e-14..=1e-4).contains(&block.tol), || format!("tol must lie in [1e-14, 1e-4], got {}", block.tol))?;
    require(block.drift_bound > 0.0, || format!("drift_bound must be > 0, got {}", block.drift_bound))?;
    require(block.stride >= 1, || "stride must be >= 1".into())?;

    let energy = eval_hamiltonian(&state, &params)?;
    let trajectory = integrate(&state, block.t_end, block.tol, &params)?;

    let mut header = vec!["t".to_string()];
    header.extend((1..=dim).map(|i| format!("q{i}")));
    header.extend((1..=dim).map(|i| format!("p{i}")));
    header.extend(["r", "H", "L2"].map(String::from));
    header.extend((1..=dim).map(|i| format!("R{i}")));
    let mut table = Table::new(&header);
    let last = trajectory.states.len() - 1;
    for (idx, (t, s)) in trajectory.times.iter().zip(&trajectory.states).enumerate() {
        if idx % block.stride != 0 && idx != last {
            continue;
        }
        let set = IntegralSet::evaluate(s, &params)?;
        let mut row = vec![Cell::from(*t)];
        row.extend(s.q.iter().chain(&s.p).map(|&v| Cell::from(v)));
        row.extend([s.radius(), set.energy, set.l2()].map(Cell::from));
        row.extend(set.runge_lenz.iter().map(|&v| Cell::from(v)));
        table.push(row);
    }

    let halt = match trajectory.halt {
        Halt::Completed => HaltReport { kind: "completed", t: trajectory.final_time(), r: trajectory.states[last].radius() },
        Halt::Collision { t, r } => HaltReport { kind: "collision", t, r },
    };
    let (closure, closure_note) = match (&trajectory.halt, energy < 0.0) {
        (Halt::Completed, true) => match orbit_closure(&trajectory) {
            Ok(c) => (Some(ClosureReport { distance: c.distance, time: c.time, radial_period: c.radial_period }), None),
            Err(e) => (None, Some(e.to_string())),
        },
        (Halt::Completed, false) => (None, Some(format!("orbit is unbound (energy {energy})"))),
        (Halt::Collision { .. }, _) => (None, Some("orbit reached the origin".into())),
    };
    let max_drift = trajectory.max_drift();
    let report = SimulateReport {
        eta: params.eta(),
        k: params.k(),
        dim,
        energy,
        t_end: block.t_end,
        tol: block.tol,
        steps: last,
        halt,
        drift: trajectory
            .invariant_drift
            .iter()
            .map(|d| DriftEntry { label: d.label.clone(), value: d.value })
            .collect(),
        max_drift,
        drift_bound: block.drift_bound,
        drift_ok: max_drift < block.drift_bound,
        closure,
        closure_note,
    };
    Ok(Simulation { trajectory, table, report })
}

pub fn run(ctx: &Context) -> Result<(), CliError> {
    let sim = simulate(ctx)?;
    let csv = ctx.sink.write_csv("trajectory.csv", &sim.table)?;
    ctx.sink.write_json("simulate.json", &sim.report)?;
    let r = &sim.report;
    ctx.say(format!("simulate: wrote {} ({} steps, halt: {})", csv.display(), r.steps, r.halt.kind));
    ctx.say(format!("  max relative drift {:.3e} (bound {:.1e})", r.max_drift, r.drift_bound));
    if let Some(c) = &r.closure {
        ctx.say(format!("  closure distance {:.3e} at t = {:.6}", c.distance, c.time));
    }
    if r.drift_ok {
        Ok(())
    } else {
        Err(CliError::Verification(format!("drift {:.3e} exceeds bound {:.1e}", r.max_drift, r.drift_bound)))
    }
}
