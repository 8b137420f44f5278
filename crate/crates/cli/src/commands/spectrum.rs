//! `spectrum`: closed-form level table.

use etakepler::spectrum::{degeneracy, effective_principal, perturbative_energy, QuantumLevel};

use crate::config::require;
use crate::output::{Cell, Table};
use crate::{CliError, Context};

pub const COLUMNS: [&str; 7] = ["n", "l", "N_principal", "E_formula", "K", "E_perturbative", "degeneracy"];

/// Rows ordered by `l`, then `n`.
pub fn table(ctx: &Context) -> Result<Table, CliError> {
    let block = &ctx.config.spectrum;
    let params = ctx.config.params(1.0)?;
    require(params.k() > 0.0, || format!("spectrum needs an attractive coupling, got k = {}", params.k()))?;
    require(block.n_max <= 10_000 && block.l_max <= 10_000, || "n_max and l_max must be <= 10000".into())?;
    let mut table = Table::new(&COLUMNS);
    for l in 0..=block.l_max {
        for n in 0..=block.n_max {
            let level = QuantumLevel::new(n, l, &params)?;
            table.push(vec![
                Cell::from(n),
                Cell::from(l),
                Cell::from(effective_principal(n, l, params.dim())),
                Cell::from(level.energy),
                Cell::from(level.coupling),
                Cell::from(perturbative_energy(n, l, &params)),
                Cell::from(degeneracy(level.principal, &params)),
            ]);
        }
    }
    Ok(table)
}

pub fn run(ctx: &Context) -> Result<(), CliError> {
    let table = table(ctx)?;
    let path = ctx.sink.write_csv("spectrum.csv", &table)?;
    ctx.say(format!("spectrum: wrote {}", path.display()));
    Ok(())
}
