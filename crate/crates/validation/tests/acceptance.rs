//! Acceptance suite: each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::path::Path;
use std::time::Instant;

use etakepler::dynamics::{self, radial_period, EffectiveProblem};
use etakepler::integrals::{algebra_residuals, functional_independence, IntegralSet};
use etakepler::model::eval_hamiltonian;
use etakepler::operators::{
    commutator_residual, convergence_study, random_test_field, runge_lenz_identity_residual, standard_setup, Operator,
};
use etakepler::sampling::{random_states, SampleBox};
use etakepler::spectrum::{degeneracy, effective_principal, energy, inner_product, radial_residual_norm, RadialWavefunction};
use etakepler::{ModelParams, PhaseState};
use tempfile::TempDir;

struct Outcome {
    pass: bool,
    detail: String,
}

fn params(eta: f64, k: f64, dim: usize) -> ModelParams {
    ModelParams::new(eta, k, 1.0, dim).expect("valid parameters")
}

/// Runs the command-line tool in a scratch directory and returns it.
fn cli(command: &str, config: &str) -> (i32, TempDir) {
    let dir = TempDir::new().expect("temp dir");
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, config).expect("write config");
    let args = [
        "etakepler".to_string(),
        command.to_string(),
        "--quiet".to_string(),
        "--config".to_string(),
        cfg.display().to_string(),
        "--out".to_string(),
        dir.path().display().to_string(),
    ];
    (etakepler_cli::run(args), dir)
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).expect("csv output");
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect()).collect();
    (header, rows)
}

fn spectrum_oracle_agreement() -> Outcome {
    let start = Instant::now();
    let mut max_diff = 0.0f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut failures = Vec::new();
    for eta in [0.0, 0.1, 0.5] {
        let cfg = format!(r#"{{"eta":{eta},"k":1,"hbar":1,"dim":3,"oracle":{{"n_max":3,"l_max":2,"points":6000}}}}"#);
        let (code, dir) = cli("oracle", &cfg);
        if code != 0 {
            failures.push(format!("eta={eta}: exit {code}"));
        }
        let (_, rows) = read_csv(&dir.path().join("oracle.csv"));
        if rows.len() != 12 {
            failures.push(format!("eta={eta}: {} rows", rows.len()));
        }
        for r in rows {
            max_diff = max_diff.max(r[4]);
            lo = lo.min(r[6]);
            hi = hi.max(r[6]);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && max_diff < 5e-5 && lo >= 1.8 && hi <= 2.2 && secs < 60.0;
    Outcome {
        pass,
        detail: format!(
            "36 levels, max |E_formula - E_oracle| = {max_diff:.2e} (< 5e-5), orders in [{lo:.3}, {hi:.3}], {secs:.1} s{}",
            if failures.is_empty() { String::new() } else { format!(", {}", failures.join("; ")) }
        ),
    }
}

fn kepler_anchor() -> Outcome {
    let exact = energy(0, 0, &params(0.0, 1.0, 3)).map(|e| e == -0.5).unwrap_or(false);
    let (code, dir) = cli("oracle", r#"{"eta":0,"k":1,"dim":3,"oracle":{"levels":[[0,0]]}}"#);
    let (_, rows) = read_csv(&dir.path().join("oracle.csv"));
    let diff = rows.first().map(|r| r[4]).unwrap_or(f64::NAN);
    Outcome {
        pass: exact && code == 0 && diff < 2e-5,
        detail: format!("formula E = -0.5 exactly: {exact}, oracle |dE| = {diff:.2e} (< 2e-5)"),
    }
}

fn perturbative_slope() -> Outcome {
    let start = Instant::now();
    let k = 1.3;
    let delta = 1e-7;
    let mut worst = 0.0f64;
    for (n, l) in [(0, 0), (1, 0), (0, 1), (2, 1), (1, 2)] {
        let e0 = energy(n, l, &params(0.0, k, 3)).unwrap();
        let e1 = energy(n, l, &params(delta, k, 3)).unwrap();
        let slope = (e1 - e0) / delta;
        let nt = effective_principal(n, l, 3);
        let expected = k.powi(3) / (2.0 * nt.powi(4));
        worst = worst.max((slope / expected - 1.0).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: worst < 0.01 && secs < 1.0,
        detail: format!("5 levels, max relative slope error {worst:.2e} (< 1%), {:.3} s", secs),
    }
}

fn classical_conservation() -> Outcome {
    let start = Instant::now();
    let cases: [(usize, f64, f64, Vec<f64>, Vec<f64>); 4] = [
        (2, 0.5, 1.0, vec![1.0, 0.0], vec![0.1, 0.8]),
        (2, 0.0, 1.0, vec![1.2, 0.3], vec![-0.2, 0.7]),
        (3, 0.5, 1.0, vec![1.0, 0.0, 0.2], vec![0.1, 0.8, 0.1]),
        (3, 0.2, 8.0, vec![0.5, 0.0, 0.1], vec![0.3, 2.5, 0.0]),
    ];
    let mut worst = 0.0f64;
    let mut min_periods = usize::MAX;
    let mut errors = Vec::new();
    for (dim, eta, k, q, p) in cases {
        let prm = params(eta, k, dim);
        let state = PhaseState::new(q, p).unwrap();
        let run = || -> etakepler::Result<(f64, usize)> {
            let problem = EffectiveProblem::from_state(&state, &prm)?;
            let e = eval_hamiltonian(&state, &prm)?;
            let period = radial_period(e, &problem)?;
            let traj = dynamics::integrate(&state, 21.0 * period, 1e-12, &prm)?;
            if traj.halt != dynamics::Halt::Completed {
                return Err(etakepler::Error::Domain("orbit did not complete".into()));
            }
            let detected = traj.radial_period()?;
            Ok((traj.max_drift(), (traj.final_time() / detected + 1e-9).floor() as usize))
        };
        match run() {
            Ok((drift, periods)) => {
                worst = worst.max(drift);
                min_periods = min_periods.min(periods);
            }
            Err(e) => errors.push(e.to_string()),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: errors.is_empty() && worst < 1e-9 && min_periods >= 20 && secs < 30.0,
        detail: format!(
            "N in {{2,3}}, 4 orbits, >= {min_periods} radial periods, max relative drift {worst:.2e} (< 1e-9), {secs:.1} s{}",
            if errors.is_empty() { String::new() } else { format!(", errors: {}", errors.join("; ")) }
        ),
    }
}

fn runge_lenz_identity() -> Outcome {
    let mut worst = 0.0f64;
    for dim in [2, 3, 4] {
        let prm = params(0.7, 1.0, dim);
        for s in random_states(100 + dim as u64, dim, 1000, &SampleBox::default()) {
            worst = worst.max(IntegralSet::evaluate(&s, &prm).unwrap().identity_residual());
        }
    }
    Outcome { pass: worst < 1e-10, detail: format!("3000 states, max relative residual {worst:.2e} (< 1e-10)") }
}

fn poisson_algebra() -> Outcome {
    let mut worst = 0.0f64;
    let mut relations = 0;
    for dim in [2, 3] {
        let prm = params(0.5, 1.0, dim);
        let samples = random_states(200 + dim as u64, dim, 100, &SampleBox::default());
        for r in algebra_residuals(&samples, &prm).unwrap() {
            worst = worst.max(r.max_residual);
            relations += 1;
        }
    }
    Outcome {
        pass: worst < 1e-7,
        detail: format!("{relations} relation families x 100 states, max residual {worst:.2e} (< 1e-7)"),
    }
}

fn functional_rank() -> Outcome {
    let mut ranks = Vec::new();
    let mut pass = true;
    for dim in [2, 3] {
        let prm = params(0.5, 1.0, dim);
        let samples = random_states(300 + dim as u64, dim, 10, &SampleBox::default());
        let rank = functional_independence(&samples, &prm).unwrap_or(0);
        pass &= rank == 2 * dim - 1;
        ranks.push(format!("N={dim}: {rank}/{}", 2 * dim - 1));
    }
    Outcome { pass, detail: format!("Jacobian rank {}", ranks.join(", ")) }
}

fn eigenfunction_residual() -> Outcome {
    let prm = params(0.5, 1.0, 3);
    let mut worst = 0.0f64;
    for (n, l) in [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (0, 2)] {
        let wf = RadialWavefunction::for_level(n, l, &prm).unwrap();
        worst = worst.max(radial_residual_norm(&wf, 2e-3));
    }
    Outcome { pass: worst < 1e-6, detail: format!("6 levels at eta = 0.5, max residual {worst:.2e} (< 1e-6)") }
}

fn weighted_orthonormality() -> Outcome {
    let mut worst = 0.0f64;
    for eta in [0.0, 0.5] {
        let prm = params(eta, 1.0, 3);
        for l in [0, 1] {
            let wfs: Vec<_> = (0..5).map(|n| RadialWavefunction::for_level(n, l, &prm).unwrap()).collect();
            for i in 0..5 {
                for j in 0..5 {
                    let g = inner_product(&wfs[i], &wfs[j]).unwrap();
                    let target = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((g - target).abs());
                }
            }
        }
    }
    Outcome { pass: worst < 1e-8, detail: format!("4 Gram matrices 5x5, max |G - I| = {worst:.2e} (< 1e-8)") }
}

fn quantum_commutators() -> Outcome {
    let start = Instant::now();
    let prm = params(0.5, 1.0, 2);
    let (base, spec) = standard_setup(2, 256).unwrap();
    let mut lines = Vec::new();
    let mut pass = true;
    let mut study = |label: &str, f: &dyn Fn(&etakepler::operators::GridBox) -> etakepler::Result<f64>| {
        match convergence_study(&base, 2, f) {
            Ok(s) => {
                pass &= s.min_order() >= 2.0;
                let orders: Vec<String> = s.orders.iter().map(|o| format!("{o:.2}")).collect();
                lines.push(format!("{label} [{}]", orders.join(", ")));
            }
            Err(e) => {
                pass = false;
                lines.push(format!("{label} error: {e}"));
            }
        }
    };
    study("[H,C]", &|g| {
        commutator_residual(Operator::Hamiltonian, Operator::CasimirUpper(2), &random_test_field(g, &spec, 11)?, &prm)
    });
    study("[H,R1]", &|g| {
        commutator_residual(Operator::Hamiltonian, Operator::RungeLenz(0), &random_test_field(g, &spec, 11)?, &prm)
    });
    study("R^2", &|g| runge_lenz_identity_residual(&random_test_field(g, &spec, 11)?, &prm));
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: pass && secs < 120.0,
        detail: format!("256^2 base, 2 halvings, orders {} (>= 2), {secs:.1} s", lines.join(", ")),
    }
}

fn potential_curves() -> Outcome {
    let (code, dir) = cli("effpot", r#"{"k":8,"effpot":{"l2":2,"etas":[0,0.05,0.2,0.4],"r_min":0.05,"r_max":2}}"#);
    let (header, rows) = read_csv(&dir.path().join("effpot.csv"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("effpot.json")).unwrap_or_default())
            .unwrap_or_default();
    let columns_ok = header == ["r", "U_eta=0", "U_eta=0.05", "U_eta=0.2", "U_eta=0.4"];
    let violating: Vec<f64> =
        rows.iter().filter(|r| !(r[1] < r[2] && r[2] < r[3] && r[3] < r[4])).map(|r| r[0]).collect();
    let monotone = violating.is_empty() && !rows.is_empty();
    let r_min = report["minima"][0]["r_min"].as_f64().unwrap_or(f64::NAN);
    let u_min = report["minima"][0]["u_min"].as_f64().unwrap_or(f64::NAN);
    let minimum_ok = (r_min - 0.25).abs() <= 1e-9 && (u_min + 16.0).abs() <= 1e-9;
    let ordering = if monotone {
        format!("pointwise increasing in eta at all {} radii", rows.len())
    } else {
        format!(
            "NOT increasing in eta at {} of {} radii (r in [{}, {}])",
            violating.len(),
            rows.len(),
            violating.first().copied().unwrap_or(f64::NAN),
            violating.last().copied().unwrap_or(f64::NAN)
        )
    };
    Outcome {
        pass: code == 0 && columns_ok && monotone && minimum_ok,
        detail: format!("{ordering}; eta=0 minimum U({r_min:.12}) = {u_min:.12}"),
    }
}

fn degeneracy_check() -> Outcome {
    let mut equal = true;
    for dim in [2, 3, 5] {
        for eta in [0.0, 0.1, 0.5] {
            let prm = params(eta, 1.0, dim);
            for total in 0..=12 {
                let reference = energy(total, 0, &prm).unwrap().to_bits();
                equal &= (0..=total).all(|l| energy(total - l, l, &prm).unwrap().to_bits() == reference);
            }
        }
    }
    let prm = params(0.5, 1.0, 3);
    let counts = (0..=40usize).all(|p| degeneracy(p, &prm) == ((p + 1) * (p + 1)) as u128);
    Outcome {
        pass: equal && counts,
        detail: format!("bit-exact equality over n+l <= 12: {equal}; N=3 count (n+l+1)^2 for n+l <= 40: {counts}"),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("Spectrum oracle agreement", spectrum_oracle_agreement),
        ("Kepler-limit anchor", kepler_anchor),
        ("Perturbative slope", perturbative_slope),
        ("Classical conservation", classical_conservation),
        ("Classical R^2 identity", runge_lenz_identity),
        ("Poisson algebra", poisson_algebra),
        ("Functional independence", functional_rank),
        ("Eigenfunction residual", eigenfunction_residual),
        ("Weighted orthonormality", weighted_orthonormality),
        ("Quantum commutators", quantum_commutators),
        ("Effective potential curves", potential_curves),
        ("Degeneracy", degeneracy_check),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {}",
            i + 1,
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
