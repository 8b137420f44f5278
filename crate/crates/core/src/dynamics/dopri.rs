//! Dormand-Prince 5(4) with the fourth-order continuous extension.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Interpolant valid on one accepted step `[t0, t0 + h]`.
#[derive(Debug, Clone)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    coeffs: [Vec<f64>; 5],
}

impl DenseSegment {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let [c1, c2, c3, c4, c5] = &self.coeffs;
        (0..c1.len())
            .map(|i| c1[i] + theta * (c2[i] + theta1 * (c3[i] + theta * (c4[i] + theta1 * c5[i]))))
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub safety: f64,
    pub min_factor: f64,
    pub max_factor: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn with_tolerance(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, safety: 0.9, min_factor: 0.2, max_factor: 5.0, max_steps: 50_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Completed,
    /// The step observer asked to stop at this time.
    Stopped(f64),
    /// Step size fell below the resolvable limit at time `t`.
    Underflow { t: f64, h: f64 },
    /// The right-hand side failed at time `t`.
    RhsFailure(f64),
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`.
///
/// `rhs` writes the derivative and returns `false` if the state is outside
/// its domain. `on_step` sees every accepted step and returns `false` to stop.
pub fn integrate<F, O>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    control: &StepControl,
    mut on_step: O,
) -> (Outcome, Stats)
where
    F: FnMut(f64, &[f64], &mut [f64]) -> bool,
    O: FnMut(f64, &[f64], &DenseSegment) -> bool,
{
    let n = y0.len();
    let mut stats = Stats::default();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; 7];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];

    if !rhs(t, &y, &mut k[0]) {
        return (Outcome::RhsFailure(t), stats);
    }
    stats.evaluations += 1;

    let scale = |a: &[f64], b: &[f64], i: usize| control.atol + control.rtol * a[i].abs().max(b[i].abs());
    let mut h = initial_step(&mut rhs, t, &y, &k[0], t_end - t0, control, &mut stats);
    let mut last_rejected = false;

    while t < t_end {
        if stats.accepted + stats.rejected >= control.max_steps {
            return (Outcome::Underflow { t, h }, stats);
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return (Outcome::Underflow { t, h }, stats);
        }
        if t + h > t_end {
            h = t_end - t;
        }

        let stages: [(f64, &[f64]); 5] = [
            (C2, &[A21]),
            (C3, &[A31, A32]),
            (C4, &[A41, A42, A43]),
            (C5, &[A51, A52, A53, A54]),
            (1.0, &[A61, A62, A63, A64, A65]),
        ];
        let mut ok = true;
        for (s, (c, a)) in stages.iter().enumerate() {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, aj) in a.iter().enumerate() {
                    acc += aj * k[j][i];
                }
                ytmp[i] = y[i] + h * acc;
            }
            if !rhs(t + c * h, &ytmp, &mut k[s + 1]) {
                ok = false;
                break;
            }
            stats.evaluations += 1;
        }
        if ok {
            for i in 0..n {
                ynew[i] = y[i]
                    + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
            }
            ok = rhs(t + h, &ynew, &mut k[6]);
            stats.evaluations += 1;
        }
        if !ok {
            // Shrink into the domain before giving up.
            h *= 0.25;
            stats.rejected += 1;
            last_rejected = true;
            if h < 1e-14 * t.abs().max(1.0) {
                return (Outcome::RhsFailure(t), stats);
            }
            continue;
        }

        let mut err = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i]
                    + E7 * k[6][i]);
            err += (e / scale(&y, &ynew, i)).powi(2);
        }
        let err = (err / n as f64).sqrt();

        if err <= 1.0 {
            let mut coeffs: [Vec<f64>; 5] = Default::default();
            coeffs[0] = y.clone();
            coeffs[1] = (0..n).map(|i| ynew[i] - y[i]).collect();
            coeffs[2] = (0..n).map(|i| h * k[0][i] - coeffs[1][i]).collect();
            coeffs[3] = (0..n).map(|i| coeffs[1][i] - h * k[6][i] - coeffs[2][i]).collect();
            coeffs[4] = (0..n)
                .map(|i| {
                    h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i]
                        + D7 * k[6][i])
                })
                .collect();
            let segment = DenseSegment { t0: t, h, coeffs };

            stats.accepted += 1;
            t = if t + h >= t_end { t_end } else { t + h };
            std::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6);

            if !on_step(t, &y, &segment) {
                return (Outcome::Stopped(t), stats);
            }

            let mut factor = control.safety * err.max(1e-10).powf(-0.2);
            factor = factor.clamp(control.min_factor, control.max_factor);
            if last_rejected {
                factor = factor.min(1.0);
            }
            h *= factor;
            last_rejected = false;
        } else {
            let factor = (control.safety * err.powf(-0.2)).max(control.min_factor);
            h *= factor;
            stats.rejected += 1;
            last_rejected = true;
        }
    }
    (Outcome::Completed, stats)
}

fn initial_step<F>(
    rhs: &mut F,
    t: f64,
    y: &[f64],
    f0: &[f64],
    span: f64,
    control: &StepControl,
    stats: &mut Stats,
) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]) -> bool,
{
    let n = y.len();
    let sc: Vec<f64> = y.iter().map(|v| control.atol + control.rtol * v.abs()).collect();
    let rms = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<f64> = (0..n).map(|i| y[i] + h0 * f0[i]).collect();
    let mut f1 = vec![0.0; n];
    if !rhs(t + h0, &y1, &mut f1) {
        return h0 * 1e-3;
    }
    stats.evaluations += 1;
    let diff: Vec<f64> = (0..n).map(|i| f1[i] - f0[i]).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_and_dense_output() {
        let ctl = StepControl::with_tolerance(1e-11);
        let mut max_dense_err: f64 = 0.0;
        let (outcome, stats) = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                true
            },
            0.0,
            &[1.0, 0.0],
            20.0,
            &ctl,
            |_, _, seg| {
                for j in 1..8 {
                    let t = seg.t0 + seg.h * j as f64 / 8.0;
                    let y = seg.eval(t);
                    max_dense_err = max_dense_err.max((y[0] - t.cos()).abs()).max((y[1] + t.sin()).abs());
                }
                true
            },
        );
        assert_eq!(outcome, Outcome::Completed);
        assert!(stats.accepted > 10);
        assert!(max_dense_err < 1e-8, "dense output error {max_dense_err}");
    }

    #[test]
    fn fifth_order_convergence() {
        // fixed-step comparison via very loose tolerance is noisy, so check
        // the end-point error shrinks with the tolerance instead
        let run = |tol: f64| {
            let mut last = vec![];
            integrate(
                |t, y, dy| {
                    dy[0] = -2.0 * t * y[0];
                    true
                },
                0.0,
                &[1.0],
                2.0,
                &StepControl::with_tolerance(tol),
                |_, y, _| {
                    last = y.to_vec();
                    true
                },
            );
            (last[0] - (-4.0f64).exp()).abs()
        };
        let coarse = run(1e-6);
        let fine = run(1e-10);
        assert!(fine < coarse);
        assert!(fine < 1e-10);
    }

    #[test]
    fn observer_can_stop() {
        let (outcome, _) = integrate(
            |_, _, dy| {
                dy[0] = 1.0;
                true
            },
            0.0,
            &[0.0],
            10.0,
            &StepControl::with_tolerance(1e-8),
            |_, y, _| y[0] < 3.0,
        );
        assert!(matches!(outcome, Outcome::Stopped(t) if t >= 3.0));
    }
}
