//! `oracle`: closed-form energies against the finite-difference eigensolver.

use etakepler::oracle::{default_r_max, oracle_energy, RadialGrid, Stencil};
use etakepler::spectrum::energy;
use serde::Serialize;

use crate::config::require;
use crate::output::{Cell, Table};
use crate::{CliError, Context};

pub const COLUMNS: [&str; 7] = ["n", "l", "E_formula", "E_oracle", "abs_diff", "grid_h", "observed_order"];

#[derive(Debug, Clone, Serialize)]
pub struct LevelComparison {
    pub n: usize,
    pub l: usize,
    pub r_max: f64,
    pub e_formula: f64,
    pub e_oracle: f64,
    /// Oracle energy on the grid with twice the points.
    pub e_oracle_refined: f64,
    pub abs_diff: f64,
    pub grid_h: f64,
    /// `log2` of the error ratio between the two grids.
    pub observed_order: f64,
    pub bound: f64,
    pub within_bound: bool,
    pub order_in_range: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub eta: f64,
    pub k: f64,
    pub dim: usize,
    pub points: usize,
    pub error_constant: f64,
    pub levels: Vec<LevelComparison>,
    pub max_abs_diff: f64,
    pub pass: bool,
}

pub struct Comparison {
    pub table: Table,
    pub report: OracleReport,
}

pub fn compare(ctx: &Context) -> Result<Comparison, CliError> {
    let block = &ctx.config.oracle;
    let params = ctx.config.params(1.0)?;
    require(params.k() > 0.0, || format!("oracle needs an attractive coupling, got k = {}", params.k()))?;
    require(block.points >= etakepler::oracle::MIN_POINTS, || {
        format!("points must be >= {}, got {}", etakepler::oracle::MIN_POINTS, block.points)
    })?;
    require(block.error_constant > 0.0, || "error_constant must be > 0".into())?;
    require(block.order_range.0 <= block.order_range.1, || "order_range must be ascending".into())?;
    if let Some(r) = block.r_max {
        require(r > 0.0 && r.is_finite(), || format!("r_max must be > 0, got {r}"))?;
    }
    let levels: Vec<(usize, usize)> = if block.levels.is_empty() {
        (0..=block.l_max).flat_map(|l| (0..=block.n_max).map(move |n| (n, l))).collect()
    } else {
        block.levels.clone()
    };

    let stencil = Stencil::for_dim(params.dim());
    let mut table = Table::new(&COLUMNS);
    let mut rows = Vec::with_capacity(levels.len());
    for (n, l) in levels {
        let e_formula = energy(n, l, &params)?;
        let r_max = match block.r_max {
            Some(r) => r,
            None => default_r_max(n, l, &params)?,
        };
        let grid_h = RadialGrid::anchored(r_max, block.points, stencil)?.spacing();
        let e_oracle = oracle_energy(n, l, &params, r_max, block.points)?;
        let e_oracle_refined = oracle_energy(n, l, &params, r_max, 2 * block.points)?;
        let abs_diff = (e_oracle - e_formula).abs();
        let observed_order = (abs_diff / (e_oracle_refined - e_formula).abs()).log2();
        let bound = block.error_constant * grid_h * grid_h;
        table.push(vec![
            Cell::from(n),
            Cell::from(l),
            Cell::from(e_formula),
            Cell::from(e_oracle),
            Cell::from(abs_diff),
            Cell::from(grid_h),
            Cell::from(observed_order),
        ]);
        rows.push(LevelComparison {
            n,
            l,
            r_max,
            e_formula,
            e_oracle,
            e_oracle_refined,
            abs_diff,
            grid_h,
            observed_order,
            bound,
            within_bound: abs_diff <= bound,
            order_in_range: (block.order_range.0..=block.order_range.1).contains(&observed_order),
        });
    }
    let report = OracleReport {
        eta: params.eta(),
        k: params.k(),
        dim: params.dim(),
        points: block.points,
        error_constant: block.error_constant,
        max_abs_diff: rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max),
        pass: rows.iter().all(|r| r.within_bound),
        levels: rows,
    };
    Ok(Comparison { table, report })
}

pub fn run(ctx: &Context) -> Result<(), CliError> {
    let cmp = compare(ctx)?;
    let csv = ctx.sink.write_csv("oracle.csv", &cmp.table)?;
    ctx.sink.write_json("oracle.json", &cmp.report)?;
    ctx.say(format!(
        "oracle: wrote {} ({} levels, max |dE| = {:.3e})",
        csv.display(),
        cmp.report.levels.len(),
        cmp.report.max_abs_diff
    ));
    for r in cmp.report.levels.iter().filter(|r| !r.within_bound) {
        ctx.say(format!("  (n={}, l={}): |dE| = {:.3e} exceeds {:.3e}", r.n, r.l, r.abs_diff, r.bound));
    }
    if cmp.report.pass {
        Ok(())
    } else {
        Err(CliError::Verification("oracle energies outside the C h^2 bound".into()))
    }
}
