//! `verify`: classical integrals, Poisson algebra, functional independence
//! and the discretized operator algebra.

use etakepler::integrals::{algebra_residuals, functional_independence, IntegralSet};
use etakepler::operators::{
    commutator_residual, convergence_study, random_test_field, runge_lenz_identity_residual,
    self_adjointness_residual, standard_setup, Operator,
};
use etakepler::sampling::{random_states, SampleBox};
use etakepler::ModelParams;
use serde::Serialize;

use crate::config::{require, VerifyBlock};
use crate::{CliError, Context};

#[derive(Debug, Clone, Serialize)]
pub struct BracketCheck {
    pub relation: String,
    pub evaluations: usize,
    pub max_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub samples: usize,
    pub max_relative_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankCheck {
    pub rank: usize,
    pub expected: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceCheck {
    pub quantity: String,
    pub spacings: Vec<f64>,
    pub residuals: Vec<f64>,
    pub orders: Vec<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryCheck {
    pub operator: String,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridReport {
    pub base_intervals: usize,
    /// Symmetry residuals are measured on the finest grid.
    pub halvings: usize,
    pub commutators: Vec<ConvergenceCheck>,
    pub self_adjointness: Vec<SymmetryCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Thresholds {
    pub bracket: f64,
    pub identity: f64,
    pub min_order: f64,
    pub self_adjoint: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub eta: f64,
    pub k: f64,
    pub hbar: f64,
    pub dim: usize,
    pub seed: u64,
    pub thresholds: Thresholds,
    pub brackets: Vec<BracketCheck>,
    pub identity: IdentityCheck,
    pub independence: RankCheck,
    pub grid: Option<GridReport>,
    pub grid_note: Option<String>,
    pub pass: bool,
}

fn validate(block: &VerifyBlock) -> Result<(), CliError> {
    require(block.samples >= 1, || "samples must be >= 1".into())?;
    require(block.identity_samples >= 1, || "identity_samples must be >= 1".into())?;
    for (name, v) in [
        ("bracket_tol", block.bracket_tol),
        ("identity_tol", block.identity_tol),
        ("self_adjoint_tol", block.self_adjoint_tol),
    ] {
        require(v > 0.0 && v.is_finite(), || format!("{name} must be a positive number, got {v}"))?;
    }
    require(block.min_order.is_finite(), || "min_order must be finite".into())?;
    require(block.base_intervals == 0 || block.base_intervals >= 16, || {
        format!("base_intervals must be 0 (default) or >= 16, got {}", block.base_intervals)
    })
}

/// Default `(base intervals, halvings)` per dimension.
fn grid_defaults(dim: usize) -> (usize, usize) {
    if dim == 2 {
        (128, 2)
    } else {
        (48, 1)
    }
}

pub fn verify(ctx: &Context) -> Result<VerifyReport, CliError> {
    let block = &ctx.config.verify;
    validate(block)?;
    let params = ctx.config.params(1.0)?;
    let dim = params.dim();
    let bounds = SampleBox::default();
    let seed = ctx.seed;

    let bracket_states = random_states(seed, dim, block.samples, &bounds);
    let brackets = algebra_residuals(&bracket_states, &params)?
        .into_iter()
        .map(|r| BracketCheck {
            pass: r.max_residual < block.bracket_tol,
            relation: r.relation,
            evaluations: r.evaluations,
            max_residual: r.max_residual,
        })
        .collect::<Vec<_>>();

    let mut max_identity = 0.0f64;
    for s in random_states(seed.wrapping_add(1), dim, block.identity_samples, &bounds) {
        max_identity = max_identity.max(IntegralSet::evaluate(&s, &params)?.identity_residual());
    }
    let identity = IdentityCheck {
        samples: block.identity_samples,
        max_relative_residual: max_identity,
        pass: max_identity < block.identity_tol,
    };

    let expected = 2 * dim - 1;
    let rank_states = random_states(seed.wrapping_add(2), dim, 20, &bounds);
    let rank = match functional_independence(&rank_states, &params) {
        Ok(r) => r,
        Err(etakepler::Error::DegenerateSamples { rank, .. }) => rank,
        Err(e) => return Err(e.into()),
    };
    let independence = RankCheck { rank, expected, pass: rank == expected };

    let (grid, grid_note) = if block.skip_grid {
        (None, Some("grid checks disabled".to_string()))
    } else if dim > 3 {
        (None, Some(format!("grid checks need dim <= 3, got {dim}")))
    } else {
        (Some(grid_checks(block, &params, seed)?), None)
    };

    let pass = brackets.iter().all(|b| b.pass)
        && identity.pass
        && independence.pass
        && grid
            .as_ref()
            .map(|g| g.commutators.iter().all(|c| c.pass) && g.self_adjointness.iter().all(|c| c.pass))
            .unwrap_or(true);

    Ok(VerifyReport {
        eta: params.eta(),
        k: params.k(),
        hbar: params.hbar(),
        dim,
        seed,
        thresholds: Thresholds {
            bracket: block.bracket_tol,
            identity: block.identity_tol,
            min_order: block.min_order,
            self_adjoint: block.self_adjoint_tol,
        },
        brackets,
        identity,
        independence,
        grid,
        grid_note,
        pass,
    })
}

/// Operators commuting with the Hamiltonian on a `dim`-dimensional grid.
pub fn symmetry_operators(dim: usize) -> Vec<Operator> {
    let mut ops: Vec<Operator> = (2..=dim).map(Operator::CasimirUpper).collect();
    ops.extend((2..dim).map(Operator::CasimirLower));
    ops.extend((0..dim).map(Operator::RungeLenz));
    ops
}

fn grid_checks(block: &VerifyBlock, params: &ModelParams, seed: u64) -> Result<GridReport, CliError> {
    let dim = params.dim();
    let (default_base, default_halvings) = grid_defaults(dim);
    let base_intervals = if block.base_intervals == 0 { default_base } else { block.base_intervals };
    let halvings = if block.halvings == 0 { default_halvings } else { block.halvings };
    let (base, spec) = standard_setup(dim, base_intervals)?;
    let field_seed = seed.wrapping_add(3);

    let mut commutators = Vec::new();
    let mut record = |quantity: String, study: etakepler::operators::ConvergenceStudy| {
        commutators.push(ConvergenceCheck {
            pass: study.min_order() >= block.min_order,
            quantity,
            spacings: study.spacings,
            residuals: study.residuals,
            orders: study.orders,
        });
    };
    for op in symmetry_operators(dim) {
        let study = convergence_study(&base, halvings, |g| {
            commutator_residual(Operator::Hamiltonian, op, &random_test_field(g, &spec, field_seed)?, params)
        })?;
        record(format!("[H, {}]", op.label()), study);
    }
    let study = convergence_study(&base, halvings, |g| {
        runge_lenz_identity_residual(&random_test_field(g, &spec, field_seed)?, params)
    })?;
    record("R^2 identity".into(), study);

    let mut finest = base.clone();
    for _ in 0..halvings {
        finest = finest.halved();
    }
    let phi = random_test_field(&finest, &spec, field_seed.wrapping_add(1))?;
    let psi = random_test_field(&finest, &spec, field_seed.wrapping_add(2))?;
    let mut self_adjointness = Vec::new();
    for op in [Operator::Hamiltonian, Operator::CasimirUpper(dim), Operator::RungeLenz(0)] {
        let residual = self_adjointness_residual(op, &phi, &psi, params)?;
        self_adjointness.push(SymmetryCheck { operator: op.label(), residual, pass: residual < block.self_adjoint_tol });
    }
    Ok(GridReport { base_intervals, halvings, commutators, self_adjointness })
}

pub fn run(ctx: &Context) -> Result<(), CliError> {
    let report = verify(ctx)?;
    let path = ctx.sink.write_json("verify.json", &report)?;
    ctx.say(format!("verify: wrote {}", path.display()));
    for b in &report.brackets {
        ctx.say(format!("  {:<8} max residual {:.3e} {}", b.relation, b.max_residual, mark(b.pass)));
    }
    ctx.say(format!(
        "  R^2 identity max relative residual {:.3e} {}",
        report.identity.max_relative_residual,
        mark(report.identity.pass)
    ));
    ctx.say(format!(
        "  Jacobian rank {} of {} {}",
        report.independence.rank,
        report.independence.expected,
        mark(report.independence.pass)
    ));
    if let Some(g) = &report.grid {
        for c in &g.commutators {
            let orders: Vec<String> = c.orders.iter().map(|o| format!("{o:.2}")).collect();
            ctx.say(format!("  {:<14} orders [{}] {}", c.quantity, orders.join(", "), mark(c.pass)));
        }
        for s in &g.self_adjointness {
            ctx.say(format!("  symmetry of {:<6} {:.3e} {}", s.operator, s.residual, mark(s.pass)));
        }
    }
    if let Some(note) = &report.grid_note {
        ctx.say(format!("  {note}"));
    }
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Verification("one or more checks exceeded their thresholds".into()))
    }
}

fn mark(pass: bool) -> &'static str {
    if pass {
        "ok"
    } else {
        "FAIL"
    }
}
