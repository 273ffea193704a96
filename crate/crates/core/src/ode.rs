//! Dormand–Prince 5(4) Runge–Kutta integration with local error control and
//! the standard fourth-order continuous extension for dense output.
//!
//! States are slices of [`Component`]s, so the same stepper drives both the
//! real moment vector and the complex density matrix of the Fock oracle.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

pub trait Component:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn modulus(self) -> f64;
}

impl Component for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Component for C64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepMode {
    /// Error-controlled steps.
    Adaptive,
    /// Constant step `h` (the final step is shortened to land on the last
    /// sample). Output is bit-reproducible for identical inputs.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub mode: StepMode,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            mode: StepMode::Adaptive,
            max_steps: 50_000_000,
        }
    }
}

impl IntegrateOptions {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        IntegrateOptions {
            rel_tol,
            abs_tol,
            ..Default::default()
        }
    }

    pub fn fixed(step: f64) -> Self {
        IntegrateOptions {
            mode: StepMode::Fixed(step),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::invalid("tolerance", "rel_tol and abs_tol must be > 0"));
        }
        if let StepMode::Fixed(h) = self.mode {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::invalid("step", "fixed step must be > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

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

// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Work<E> {
    k: [Vec<E>; 7],
    stage: Vec<E>,
    y_new: Vec<E>,
    dense: [Vec<E>; 5],
    out: Vec<E>,
}

impl<E: Component> Work<E> {
    fn new(n: usize) -> Self {
        let z = || vec![E::default(); n];
        Work {
            k: [z(), z(), z(), z(), z(), z(), z()],
            stage: z(),
            y_new: z(),
            dense: [z(), z(), z(), z(), z()],
            out: z(),
        }
    }
}

/// Integrates `dy/dt = f(t, y)` from `(t0, y0)` and calls `on_sample` with the
/// interpolated state at each of `samples` (sorted, all `>= t0`).
///
/// `project`, if given, is applied to the state after every accepted step
/// (e.g. to re-symmetrize a density matrix); the derivative is then
/// re-evaluated instead of reused.
pub fn integrate<E, F, S>(
    mut f: F,
    project: Option<&dyn Fn(&mut [E])>,
    t0: f64,
    y0: &[E],
    samples: &[f64],
    opts: &IntegrateOptions,
    mut on_sample: S,
) -> Result<Stats>
where
    E: Component,
    F: FnMut(f64, &[E], &mut [E]),
    S: FnMut(f64, &[E]) -> Result<()>,
{
    opts.validate()?;
    if samples.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("sample times must be sorted".into()));
    }
    if samples.first().is_some_and(|&s| s < t0) || samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::Domain("sample times must be finite and >= t0".into()));
    }

    let n = y0.len();
    let mut stats = Stats::default();
    let mut next = 0;
    while next < samples.len() && samples[next] == t0 {
        on_sample(t0, y0)?;
        next += 1;
    }
    if next == samples.len() {
        return Ok(stats);
    }
    let t_last = samples[samples.len() - 1];

    let mut w = Work::<E>::new(n);
    let mut y = y0.to_vec();
    let mut t = t0;
    f(t, &y, &mut w.k[0]);
    stats.evaluations += 1;

    let (mut h, fixed) = match opts.mode {
        StepMode::Fixed(h) => (h, true),
        StepMode::Adaptive => (initial_step(&mut f, t, &y, &w.k[0], opts, &mut stats), false),
    };
    let mut fixed_index: u64 = 0;
    let mut last_rejected = false;

    while next < samples.len() {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::TooManySteps {
                time: t,
                max_steps: opts.max_steps,
            });
        }
        let mut t_new = if fixed {
            t0 + (fixed_index + 1) as f64 * h
        } else {
            t + h
        };
        if t_new >= t_last || (fixed && t_last - t_new < 1e-12 * h) {
            t_new = t_last;
        }
        let step = t_new - t;
        if !fixed && step <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::Stiffness { time: t, step });
        }

        stages(&mut f, t, step, &y, &mut w);
        stats.evaluations += 6;

        let accept = if fixed {
            true
        } else {
            let err = error_norm(&y, &w, step, opts);
            if err <= 1.0 {
                let fac = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
                let fac = if last_rejected { fac.min(1.0) } else { fac.min(5.0) };
                h = step * fac.max(0.2);
                last_rejected = false;
                true
            } else {
                h = step * (0.9 * err.powf(-0.2)).max(0.2);
                last_rejected = true;
                stats.rejected += 1;
                false
            }
        };
        if !accept {
            continue;
        }
        stats.accepted += 1;
        fixed_index += 1;

        if next < samples.len() && samples[next] <= t_new {
            prepare_dense(&y, step, &mut w);
            while next < samples.len() && samples[next] <= t_new {
                let s = samples[next];
                if s == t_new {
                    on_sample(s, &w.y_new)?;
                } else {
                    interpolate(&mut w, (s - t) / step);
                    on_sample(s, &w.out)?;
                }
                next += 1;
            }
        }

        t = t_new;
        core::mem::swap(&mut y, &mut w.y_new);
        match project {
            Some(p) => {
                p(&mut y);
                f(t, &y, &mut w.k[0]);
                stats.evaluations += 1;
            }
            None => {
                let (first, rest) = w.k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
            }
        }
    }
    Ok(stats)
}

fn stages<E: Component, F: FnMut(f64, &[E], &mut [E])>(
    f: &mut F,
    t: f64,
    h: f64,
    y: &[E],
    w: &mut Work<E>,
) {
    let n = y.len();
    let Work { k, stage, y_new, .. } = w;

    for i in 0..n {
        stage[i] = y[i] + k[0][i] * (h * A21);
    }
    f(t + C2 * h, stage, &mut k[1]);
    for i in 0..n {
        stage[i] = y[i] + (k[0][i] * A31 + k[1][i] * A32) * h;
    }
    f(t + C3 * h, stage, &mut k[2]);
    for i in 0..n {
        stage[i] = y[i] + (k[0][i] * A41 + k[1][i] * A42 + k[2][i] * A43) * h;
    }
    f(t + C4 * h, stage, &mut k[3]);
    for i in 0..n {
        stage[i] =
            y[i] + (k[0][i] * A51 + k[1][i] * A52 + k[2][i] * A53 + k[3][i] * A54) * h;
    }
    f(t + C5 * h, stage, &mut k[4]);
    for i in 0..n {
        stage[i] = y[i]
            + (k[0][i] * A61 + k[1][i] * A62 + k[2][i] * A63 + k[3][i] * A64 + k[4][i] * A65)
                * h;
    }
    f(t + h, stage, &mut k[5]);
    for i in 0..n {
        y_new[i] = y[i]
            + (k[0][i] * A71 + k[2][i] * A73 + k[3][i] * A74 + k[4][i] * A75 + k[5][i] * A76)
                * h;
    }
    f(t + h, y_new, &mut k[6]);
}

fn error_norm<E: Component>(y: &[E], w: &Work<E>, h: f64, opts: &IntegrateOptions) -> f64 {
    let k = &w.k;
    let mut acc = 0.0;
    for i in 0..y.len() {
        let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6
            + k[6][i] * E7)
            * h;
        let scale = opts.abs_tol + opts.rel_tol * y[i].modulus().max(w.y_new[i].modulus());
        let r = e.modulus() / scale;
        acc += r * r;
    }
    (acc / y.len().max(1) as f64).sqrt()
}

fn prepare_dense<E: Component>(y: &[E], h: f64, w: &mut Work<E>) {
    let Work { k, y_new, dense, .. } = w;
    let [r1, r2, r3, r4, r5] = dense;
    for i in 0..y.len() {
        let diff = y_new[i] - y[i];
        let bspl = k[0][i] * h - diff;
        r1[i] = y[i];
        r2[i] = diff;
        r3[i] = bspl;
        r4[i] = diff - k[6][i] * h - bspl;
        r5[i] = (k[0][i] * D1 + k[2][i] * D3 + k[3][i] * D4 + k[4][i] * D5 + k[5][i] * D6
            + k[6][i] * D7)
            * h;
    }
}

fn interpolate<E: Component>(w: &mut Work<E>, theta: f64) {
    let th1 = 1.0 - theta;
    let [r1, r2, r3, r4, r5] = &w.dense;
    for i in 0..w.out.len() {
        w.out[i] = r1[i] + (r2[i] + (r3[i] + (r4[i] + r5[i] * th1) * theta) * th1) * theta;
    }
}

fn initial_step<E: Component, F: FnMut(f64, &[E], &mut [E])>(
    f: &mut F,
    t: f64,
    y: &[E],
    f0: &[E],
    opts: &IntegrateOptions,
    stats: &mut Stats,
) -> f64 {
    let scale = |v: E| opts.abs_tol + opts.rel_tol * v.modulus();
    let rms = |v: &[E], s: &[E]| -> f64 {
        let sum: f64 = v
            .iter()
            .zip(s)
            .map(|(x, y)| {
                let r = x.modulus() / scale(*y);
                r * r
            })
            .sum();
        (sum / v.len().max(1) as f64).sqrt()
    };
    let d0 = rms(y, y);
    let d1 = rms(f0, y);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };

    let y1: Vec<E> = y.iter().zip(f0).map(|(a, b)| *a + *b * h0).collect();
    let mut f1 = vec![E::default(); y.len()];
    f(t + h0, &y1, &mut f1);
    stats.evaluations += 1;
    let diff: Vec<E> = f1.iter().zip(f0).map(|(a, b)| *a - *b).collect();
    let d2 = rms(&diff, y) / h0;

    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

/// `n` equally spaced points from `t0` to `t1` inclusive.
pub fn uniform_grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t0],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    t1
                } else {
                    t0 + (t1 - t0) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::vec::Vec;

    fn run<E: Component>(
        f: impl FnMut(f64, &[E], &mut [E]),
        y0: &[E],
        samples: &[f64],
        opts: &IntegrateOptions,
    ) -> Result<(Vec<Vec<E>>, Stats)> {
        let mut out = Vec::new();
        let stats = integrate(f, None, 0.0, y0, samples, opts, |_, y| {
            out.push(y.to_vec());
            Ok(())
        })?;
        Ok((out, stats))
    }

    #[test]
    fn exponential_decay_dense_output() {
        let grid = uniform_grid(0.0, 10.0, 101);
        let (out, _) = run(
            |_, y: &[f64], dy: &mut [f64]| dy[0] = -0.7 * y[0],
            &[1.0],
            &grid,
            &IntegrateOptions::default(),
        )
        .unwrap();
        for (t, y) in grid.iter().zip(&out) {
            let exact = (-0.7 * t).exp();
            assert!((y[0] - exact).abs() <= 1e-9 * exact + 1e-11, "t={t}");
        }
    }

    #[test]
    fn complex_rotation_keeps_modulus() {
        let grid = uniform_grid(0.0, 30.0, 301);
        let w = 4.5;
        let (out, _) = run(
            |_, y: &[C64], dy: &mut [C64]| dy[0] = C64::new(0.0, -w) * y[0],
            &[C64::new(1.0, 0.0)],
            &grid,
            &IntegrateOptions::default(),
        )
        .unwrap();
        for (t, y) in grid.iter().zip(&out) {
            let exact = C64::new(0.0, -w * t).exp();
            assert!((y[0] - exact).norm() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn zero_system_is_constant() {
        let grid = uniform_grid(0.0, 5.0, 11);
        let (out, _) = run(
            |_, _: &[f64], dy: &mut [f64]| dy.iter_mut().for_each(|d| *d = 0.0),
            &[1.0, -2.0, 0.5],
            &grid,
            &IntegrateOptions::default(),
        )
        .unwrap();
        for y in out {
            assert_eq!(y, [1.0, -2.0, 0.5]);
        }
    }

    #[test]
    fn fixed_step_is_fifth_order_and_reproducible() {
        let grid = uniform_grid(0.0, 2.0, 5);
        let go = |h: f64| {
            run(
                |_, y: &[f64], dy: &mut [f64]| dy[0] = y[0].cos(),
                &[0.0],
                &grid,
                &IntegrateOptions::fixed(h),
            )
            .unwrap()
            .0
        };
        // exact solution of y' = cos y, y(0)=0: y = 2 atan(tanh(t/2))
        let exact = 2.0 * (1.0f64).tanh().atan();
        let e1 = (go(0.1).last().unwrap()[0] - exact).abs();
        let e2 = (go(0.05).last().unwrap()[0] - exact).abs();
        assert!(e1 / e2 > 20.0, "order check: {e1} / {e2}");
        assert_eq!(go(0.05), go(0.05));
    }

    #[test]
    fn samples_before_start_rejected() {
        let r = run(
            |_, _: &[f64], dy: &mut [f64]| dy[0] = 0.0,
            &[0.0],
            &[-1.0, 1.0],
            &IntegrateOptions::default(),
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn blow_up_reports_failure_time() {
        // y' = y^2 with y(0)=1 diverges at t=1
        let r = run(
            |_, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0],
            &[1.0],
            &[2.0],
            &IntegrateOptions::default(),
        );
        match r {
            Err(Error::Stiffness { time, .. }) => assert!((time - 1.0).abs() < 1e-2),
            Err(Error::TooManySteps { time, .. }) => assert!((time - 1.0).abs() < 1e-2),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn grid_endpoints_exact() {
        let g = uniform_grid(0.0, 20.0, 2000);
        assert_eq!(g.len(), 2000);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1999], 20.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
