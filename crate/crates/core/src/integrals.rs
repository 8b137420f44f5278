//! Constants of motion of `H_η`: the angular Casimirs of the nested
//! rotation subalgebras, the deformed Laplace-Runge-Lenz vector, a numerical
//! Poisson bracket and a functional-independence test.
//!
//! Coordinate indices are zero-based throughout the API.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{check_radius, eval_hamiltonian, ModelParams, PhaseState};

/// `J_ij = q_i p_j − q_j p_i`.
pub fn angular_momentum(state: &PhaseState, i: usize, j: usize) -> f64 {
    state.q[i] * state.p[j] - state.q[j] * state.p[i]
}

/// Total squared angular momentum `L² = r² p² − (q·p)²`.
pub fn total_angular_momentum_squared(state: &PhaseState) -> f64 {
    let n = state.dim();
    let mut l2 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            l2 += angular_momentum(state, i, j).powi(2);
        }
    }
    l2
}

/// `(C^(m), C_(m))`: sums of `J_ij²` over the leading block `i < j < m` and
/// the trailing block `N − m ≤ i < j < N`.
pub fn angular_casimirs(state: &PhaseState, m: usize) -> Result<(f64, f64)> {
    let n = state.dim();
    if !(2..=n).contains(&m) {
        return Err(Error::IndexOutOfRange { index: m, min: 2, max: n });
    }
    Ok((block_casimir(state, 0, m), block_casimir(state, n - m, n)))
}

fn block_casimir(state: &PhaseState, start: usize, end: usize) -> f64 {
    let mut c = 0.0;
    for i in start..end {
        for j in i + 1..end {
            c += angular_momentum(state, i, j).powi(2);
        }
    }
    c
}

/// `R_i = Σ_j p_j (q_j p_i − q_i p_j) + (q_i/|q|)(η H_η + k)`.
pub fn runge_lenz(state: &PhaseState, params: &ModelParams) -> Result<Vec<f64>> {
    let h = eval_hamiltonian(state, params)?;
    let r = state.radius();
    let qp = state.radial_action();
    let p2 = state.momentum_squared();
    let shift = (params.eta() * h + params.k()) / r;
    Ok((0..state.dim())
        .map(|i| state.p[i] * qp - state.q[i] * p2 + state.q[i] * shift)
        .collect())
}

/// Every integral of motion evaluated at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSet {
    /// `C^(m)` for `m = 2..=N`.
    pub casimirs_upper: Vec<f64>,
    /// `C_(m)` for `m = 2..=N`.
    pub casimirs_lower: Vec<f64>,
    pub runge_lenz: Vec<f64>,
    pub energy: f64,
    eta: f64,
    k: f64,
}

impl IntegralSet {
    pub fn evaluate(state: &PhaseState, params: &ModelParams) -> Result<Self> {
        let energy = eval_hamiltonian(state, params)?;
        let n = state.dim();
        let mut casimirs_upper = Vec::with_capacity(n - 1);
        let mut casimirs_lower = Vec::with_capacity(n - 1);
        for m in 2..=n {
            let (up, low) = angular_casimirs(state, m)?;
            casimirs_upper.push(up);
            casimirs_lower.push(low);
        }
        Ok(Self {
            casimirs_upper,
            casimirs_lower,
            runge_lenz: runge_lenz(state, params)?,
            energy,
            eta: params.eta(),
            k: params.k(),
        })
    }

    pub fn l2(&self) -> f64 {
        *self.casimirs_upper.last().expect("dimension >= 2")
    }

    pub fn runge_lenz_squared(&self) -> f64 {
        self.runge_lenz.iter().map(|x| x * x).sum()
    }

    /// `2 L² H + (ηH + k)²`, the predicted value of `R²`.
    pub fn runge_lenz_squared_prediction(&self) -> f64 {
        2.0 * self.l2() * self.energy + (self.eta * self.energy + self.k).powi(2)
    }

    /// `|R² − 2L²H − (ηH+k)²|` relative to the largest term involved.
    pub fn identity_residual(&self) -> f64 {
        let lhs = self.runge_lenz_squared();
        let shift = (self.eta * self.energy + self.k).powi(2);
        let cross = 2.0 * self.l2() * self.energy;
        let scale = lhs.max(shift).max(cross.abs()).max(f64::MIN_POSITIVE);
        (lhs - cross - shift).abs() / scale
    }

    /// The flattened list `H, C^(2..N), C_(2..N), R_1..R_N`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = vec![self.energy];
        v.extend(&self.casimirs_upper);
        v.extend(&self.casimirs_lower);
        v.extend(&self.runge_lenz);
        v
    }
}

/// Catalog of phase-space functions used by the bracket and rank checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Hamiltonian,
    Angular(usize, usize),
    CasimirUpper(usize),
    CasimirLower(usize),
    RungeLenz(usize),
    Position(usize),
    Momentum(usize),
}

impl Observable {
    pub fn eval(&self, state: &PhaseState, params: &ModelParams) -> Result<f64> {
        match *self {
            Observable::Hamiltonian => eval_hamiltonian(state, params),
            Observable::Angular(i, j) => Ok(angular_momentum(state, i, j)),
            Observable::CasimirUpper(m) => angular_casimirs(state, m).map(|c| c.0),
            Observable::CasimirLower(m) => angular_casimirs(state, m).map(|c| c.1),
            Observable::RungeLenz(i) => {
                check_radius(state.radius())?;
                runge_lenz(state, params).map(|r| r[i])
            }
            Observable::Position(i) => Ok(state.q[i]),
            Observable::Momentum(i) => Ok(state.p[i]),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Observable::Hamiltonian => "H".into(),
            Observable::Angular(i, j) => format!("J{}{}", i + 1, j + 1),
            Observable::CasimirUpper(m) => format!("C^({m})"),
            Observable::CasimirLower(m) => format!("C_({m})"),
            Observable::RungeLenz(i) => format!("R{}", i + 1),
            Observable::Position(i) => format!("q{}", i + 1),
            Observable::Momentum(i) => format!("p{}", i + 1),
        }
    }
}

/// The `2N − 1` functions `{H, C^(2..N), C_(2..N−1), R_i}`; `C_(N)` is left
/// out because it coincides with `C^(N)`.
pub fn independence_set(dim: usize, runge_lenz_index: usize) -> Vec<Observable> {
    let mut set = vec![Observable::Hamiltonian];
    set.extend((2..=dim).map(Observable::CasimirUpper));
    set.extend((2..dim).map(Observable::CasimirLower));
    set.push(Observable::RungeLenz(runge_lenz_index));
    set
}

fn fd_step(state: &PhaseState) -> f64 {
    let scale = state.q.iter().chain(&state.p).map(|x| x * x).sum::<f64>().sqrt();
    1e-4 * scale.max(1.0)
}

/// Phase-space gradient `(∂f/∂q, ∂f/∂p)` by central differences with one
/// Richardson step; truncation error is `O(h⁴)`.
pub fn gradient<F>(f: F, state: &PhaseState) -> Result<Vec<f64>>
where
    F: Fn(&PhaseState) -> Result<f64>,
{
    let n = state.dim();
    let h = fd_step(state);
    let mut flat = state.to_flat();
    let mut grad = Vec::with_capacity(2 * n);
    for a in 0..2 * n {
        let x0 = flat[a];
        let mut central = |step: f64| -> Result<f64> {
            flat[a] = x0 + step;
            let fp = f(&PhaseState::from_flat(&flat))?;
            flat[a] = x0 - step;
            let fm = f(&PhaseState::from_flat(&flat))?;
            flat[a] = x0;
            Ok((fp - fm) / (2.0 * step))
        };
        let coarse = central(h)?;
        let fine = central(0.5 * h)?;
        grad.push((4.0 * fine - coarse) / 3.0);
    }
    Ok(grad)
}

/// `{f, g} = Σ_i ∂f/∂q_i ∂g/∂p_i − ∂f/∂p_i ∂g/∂q_i`, evaluated numerically.
pub fn poisson_bracket<F, G>(f: F, g: G, state: &PhaseState) -> Result<f64>
where
    F: Fn(&PhaseState) -> Result<f64>,
    G: Fn(&PhaseState) -> Result<f64>,
{
    let n = state.dim();
    let df = gradient(f, state)?;
    let dg = gradient(g, state)?;
    Ok((0..n).map(|i| df[i] * dg[n + i] - df[n + i] * dg[i]).sum())
}

/// Bracket of two catalog observables.
pub fn bracket(a: Observable, b: Observable, state: &PhaseState, params: &ModelParams) -> Result<f64> {
    poisson_bracket(|s| a.eval(s, params), |s| b.eval(s, params), state)
}

/// Numerical rank of the Jacobian of `observables` at one state.
pub fn jacobian_rank(observables: &[Observable], state: &PhaseState, params: &ModelParams) -> Result<usize> {
    let n2 = 2 * state.dim();
    let mut rows = Vec::with_capacity(observables.len() * n2);
    for obs in observables {
        rows.extend(gradient(|s| obs.eval(s, params), state)?);
    }
    let jac = DMatrix::from_row_slice(observables.len(), n2, &rows);
    let sv = jac.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > 1e-8 * max).count())
}

/// Maximum Jacobian rank of the `2N − 1` integrals over the samples.
///
/// Fails with [`Error::DegenerateSamples`] when no sample reaches `2N − 1`.
pub fn functional_independence(samples: &[PhaseState], params: &ModelParams) -> Result<usize> {
    let dim = params.dim();
    let expected = 2 * dim - 1;
    let set = independence_set(dim, 0);
    let mut best = 0;
    for s in samples {
        s.check_dim(params)?;
        best = best.max(jacobian_rank(&set, s, params)?);
        if best == expected {
            return Ok(best);
        }
    }
    Err(Error::DegenerateSamples { rank: best, expected })
}

/// Largest absolute deviation of one family of bracket relations.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationResidual {
    pub relation: String,
    pub max_residual: f64,
    pub evaluations: usize,
}

fn kron(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Checks the Poisson algebra of the integrals at every sample:
/// `{J_ij, J_kl} = δ_ik J_jl − δ_il J_jk − δ_jk J_il + δ_jl J_ik`,
/// `{J_ij, R_k} = δ_ik R_j − δ_jk R_i`, `{R_i, R_j} = −2 H J_ij`, and the
/// vanishing brackets of `J_ij`, `R_i`, `C^(m)`, `C_(m)` with `H`.
pub fn algebra_residuals(samples: &[PhaseState], params: &ModelParams) -> Result<Vec<RelationResidual>> {
    let dim = params.dim();
    let pairs: Vec<(usize, usize)> = (0..dim).flat_map(|i| (i + 1..dim).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    let mut record = |relation: &str, f: &dyn Fn(&PhaseState) -> Result<Vec<f64>>| -> Result<()> {
        let mut max_residual = 0.0f64;
        let mut evaluations = 0;
        for s in samples {
            s.check_dim(params)?;
            for r in f(s)? {
                max_residual = max_residual.max(r.abs());
                evaluations += 1;
            }
        }
        out.push(RelationResidual { relation: relation.into(), max_residual, evaluations });
        Ok(())
    };

    record("{J,J}", &|s| {
        let mut res = Vec::new();
        for &(i, j) in &pairs {
            for &(k, l) in &pairs {
                let b = bracket(Observable::Angular(i, j), Observable::Angular(k, l), s, params)?;
                let j_of = |a: usize, c: usize| angular_momentum(s, a, c);
                let expected = kron(i, k) * j_of(j, l) - kron(i, l) * j_of(j, k) - kron(j, k) * j_of(i, l)
                    + kron(j, l) * j_of(i, k);
                res.push(b - expected);
            }
        }
        Ok(res)
    })?;
    record("{J,R}", &|s| {
        let rl = runge_lenz(s, params)?;
        let mut res = Vec::new();
        for &(i, j) in &pairs {
            for k in 0..dim {
                let b = bracket(Observable::Angular(i, j), Observable::RungeLenz(k), s, params)?;
                res.push(b - (kron(i, k) * rl[j] - kron(j, k) * rl[i]));
            }
        }
        Ok(res)
    })?;
    record("{R,R}", &|s| {
        let h = eval_hamiltonian(s, params)?;
        let mut res = Vec::new();
        for &(i, j) in &pairs {
            let b = bracket(Observable::RungeLenz(i), Observable::RungeLenz(j), s, params)?;
            res.push(b + 2.0 * h * angular_momentum(s, i, j));
        }
        Ok(res)
    })?;
    record("{J,H}", &|s| {
        pairs.iter().map(|&(i, j)| bracket(Observable::Angular(i, j), Observable::Hamiltonian, s, params)).collect()
    })?;
    record("{R,H}", &|s| {
        (0..dim).map(|i| bracket(Observable::RungeLenz(i), Observable::Hamiltonian, s, params)).collect()
    })?;
    record("{C,H}", &|s| {
        let mut res = Vec::new();
        for m in 2..=dim {
            res.push(bracket(Observable::CasimirUpper(m), Observable::Hamiltonian, s, params)?);
            res.push(bracket(Observable::CasimirLower(m), Observable::Hamiltonian, s, params)?);
        }
        Ok(res)
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_states, SampleBox};
    use approx::assert_relative_eq;

    fn st(q: &[f64], p: &[f64]) -> PhaseState {
        PhaseState::new(q.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn casimir_examples() {
        let s = st(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        assert_eq!(angular_casimirs(&s, 3).unwrap(), (1.0, 1.0));
        assert_eq!(total_angular_momentum_squared(&s), 1.0);

        let s = st(&[1.0, 2.0, -0.5], &[2.0, 4.0, -1.0]);
        for m in 2..=3 {
            assert_eq!(angular_casimirs(&s, m).unwrap(), (0.0, 0.0));
        }

        let s = st(&[1.0, 2.0, 0.0, 1.0], &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(angular_casimirs(&s, 2).unwrap().0, 1.0);
        // trailing pair (q3, q4): J_34 = 0·0 − 1·1
        assert_eq!(angular_casimirs(&s, 2).unwrap().1, 1.0);
    }

    #[test]
    fn casimir_index_range() {
        let s = st(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        assert!(matches!(angular_casimirs(&s, 1), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(angular_casimirs(&s, 4), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn full_casimirs_agree_with_l2() {
        for s in random_states(3, 4, 50, &SampleBox::default()) {
            let (up, low) = angular_casimirs(&s, 4).unwrap();
            let l2 = s.radius().powi(2) * s.momentum_squared() - s.radial_action().powi(2);
            assert_relative_eq!(up, low, max_relative = 1e-13);
            assert_relative_eq!(up, l2, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn runge_lenz_examples() {
        let p = ModelParams::new(0.0, 1.0, 1.0, 3).unwrap();
        let r = runge_lenz(&st(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]), &p).unwrap();
        assert!(r.iter().all(|x| x.abs() < 1e-15));

        let r = runge_lenz(&st(&[2.0, 0.0, 0.0], &[0.0, 0.5, 0.0]), &p).unwrap();
        assert_relative_eq!(r[0], 0.5, epsilon = 1e-15);
        assert_eq!(r[1], 0.0);
        assert_eq!(r[2], 0.0);
    }

    #[test]
    fn runge_lenz_matches_p_cross_l_form_in_kepler_limit() {
        let p = ModelParams::new(0.0, 1.3, 1.0, 3).unwrap();
        for s in random_states(11, 3, 50, &SampleBox::default()) {
            let (q, m) = (&s.q, &s.p);
            let l = [
                q[1] * m[2] - q[2] * m[1],
                q[2] * m[0] - q[0] * m[2],
                q[0] * m[1] - q[1] * m[0],
            ];
            let pxl = [m[1] * l[2] - m[2] * l[1], m[2] * l[0] - m[0] * l[2], m[0] * l[1] - m[1] * l[0]];
            let r = s.radius();
            let classic: Vec<f64> = (0..3).map(|i| -(pxl[i] - 1.3 * q[i] / r)).collect();
            let ours = runge_lenz(&s, &p).unwrap();
            for i in 0..3 {
                assert!((ours[i] - classic[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn runge_lenz_identity_on_random_states() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 3).unwrap();
        for s in random_states(5, 3, 1000, &SampleBox::default()) {
            let set = IntegralSet::evaluate(&s, &p).unwrap();
            assert!(set.identity_residual() < 1e-10, "{}", set.identity_residual());
        }
    }

    #[test]
    fn bracket_of_coordinates_is_canonical() {
        let p = ModelParams::new(0.5, 1.0, 1.0, 3).unwrap();
        let s = st(&[0.7, -0.3, 1.1], &[0.2, 0.9, -0.4]);
        for i in 0..3 {
            for j in 0..3 {
                let b = bracket(Observable::Position(i), Observable::Momentum(j), &s, &p).unwrap();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((b - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn angular_bracket_example() {
        let p = ModelParams::new(0.5, 1.0, 1.0, 3).unwrap();
        for s in random_states(7, 3, 20, &SampleBox::default()) {
            let b = bracket(Observable::Angular(0, 1), Observable::Angular(0, 2), &s, &p).unwrap();
            assert!((b - angular_momentum(&s, 1, 2)).abs() < 1e-8);
        }
    }

    #[test]
    fn algebra_holds_on_random_states() {
        for (eta, dim) in [(0.5, 3), (0.0, 2), (1.2, 4)] {
            let p = ModelParams::new(eta, 1.0, 1.0, dim).unwrap();
            let samples = random_states(21, dim, 10, &SampleBox::default());
            let res = algebra_residuals(&samples, &p).unwrap();
            assert_eq!(res.len(), 6);
            for r in res {
                assert!(r.evaluations > 0);
                assert!(r.max_residual < 1e-7, "{r:?}");
            }
        }
    }

    #[test]
    fn algebra_detects_a_wrong_structure_constant() {
        let p = ModelParams::new(0.5, 1.0, 1.0, 3).unwrap();
        let s = &random_states(4, 3, 1, &SampleBox::default())[0];
        let b = bracket(Observable::RungeLenz(0), Observable::RungeLenz(1), s, &p).unwrap();
        let h = eval_hamiltonian(s, &p).unwrap();
        // opposite sign would not match
        assert!((b - 2.0 * h * angular_momentum(s, 0, 1)).abs() > 1e-3);
    }

    #[test]
    fn bracket_stencil_hitting_origin_is_reported() {
        let p = ModelParams::new(0.5, 1.0, 1.0, 2).unwrap();
        let s = st(&[0.0, 0.0], &[0.3, 0.2]);
        assert!(matches!(
            bracket(Observable::Hamiltonian, Observable::Angular(0, 1), &s, &p),
            Err(Error::SingularOrigin { .. })
        ));
    }

    #[test]
    fn independence_examples() {
        let p = ModelParams::new(0.5, 1.0, 1.0, 3).unwrap();
        let samples = random_states(1, 3, 5, &SampleBox::default());
        assert_eq!(functional_independence(&samples, &p).unwrap(), 5);

        let p = ModelParams::new(0.0, 1.0, 1.0, 2).unwrap();
        let samples = random_states(2, 2, 3, &SampleBox::default());
        assert_eq!(functional_independence(&samples, &p).unwrap(), 3);
    }

    #[test]
    fn radial_samples_are_degenerate() {
        let p = ModelParams::new(0.5, 1.0, 1.0, 3).unwrap();
        let samples: Vec<PhaseState> = random_states(9, 3, 6, &SampleBox::default())
            .into_iter()
            .map(|s| {
                let p: Vec<f64> = s.q.iter().map(|x| 0.7 * x).collect();
                PhaseState { q: s.q, p }
            })
            .collect();
        match functional_independence(&samples, &p) {
            Err(Error::DegenerateSamples { rank, expected }) => {
                assert!(rank < expected);
                assert_eq!(expected, 5);
            }
            other => panic!("expected degenerate samples, got {other:?}"),
        }
    }
}
