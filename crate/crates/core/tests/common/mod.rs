//! Test-only second-moment route that keeps every product of
//! `(a, a†, b, b†, c, c†)` and integrates `dS/dt = A S + S Aᵀ + D` with
//! `S_jk = <X_j X_k>`, built from the Langevin equations directly. Nothing
//! here uses the crate's reduced equations, so the commutators are not
//! enforced by construction.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use optocascade::moments::SourceSpec;
use optocascade::ode::{self, IntegrateOptions};
use optocascade::{Complex64 as C, SimParams};

pub const N: usize = 6;
pub const A: usize = 0;
pub const AD: usize = 1;
pub const B: usize = 2;
pub const BD: usize = 3;
pub const CC: usize = 4;
pub const CD: usize = 5;

pub type Mat = [[C; N]; N];

fn zero() -> Mat {
    [[C::new(0.0, 0.0); N]; N]
}

/// `dX/dt = A X + noise`.
pub fn drift6(p: &SimParams) -> Mat {
    let i = C::new(0.0, 1.0);
    let mut m = zero();
    let r = (p.gamma * p.kappa).sqrt();
    let gc = if p.rwa { 0.0 } else { p.g };
    m[A][A] = -(i * p.delta + p.kappa / 2.0);
    m[A][B] = -i * p.g;
    m[A][BD] = -i * gc;
    m[A][CC] = C::new(-r, 0.0);
    m[B][B] = -(i * p.omega_m + p.mu / 2.0);
    m[B][A] = -i * p.g;
    m[B][AD] = -i * gc;
    m[CC][CC] = -(i * p.delta + p.gamma / 2.0);
    for (x, xd) in [(A, AD), (B, BD), (CC, CD)] {
        for (y, yd) in [(A, AD), (B, BD), (CC, CD)] {
            m[xd][yd] = m[x][y].conj();
            m[xd][y] = m[x][yd].conj();
        }
    }
    m
}

/// `D_jk` with `d<X_j X_k> = (...) dt + D_jk dt`; the source and the cavity
/// share one input field.
pub fn diffusion6(p: &SimParams) -> Mat {
    let mut d = zero();
    let r = (p.gamma * p.kappa).sqrt();
    d[A][AD] = C::new(p.kappa, 0.0);
    d[A][CD] = C::new(r, 0.0);
    d[CC][AD] = C::new(r, 0.0);
    d[CC][CD] = C::new(p.gamma, 0.0);
    d[B][BD] = C::new(p.mu * (p.nbar + 1.0), 0.0);
    d[BD][B] = C::new(p.mu * p.nbar, 0.0);
    d
}

pub fn rhs(a: &Mat, d: &Mat, s: &[C], ds: &mut [C]) {
    for j in 0..N {
        for k in 0..N {
            let mut v = d[j][k];
            for l in 0..N {
                v += a[j][l] * s[l * N + k] + a[k][l] * s[j * N + l];
            }
            ds[j * N + k] = v;
        }
    }
}

/// Stationary `<A_j A_k>` over `(a, a†, b, b†)` with the source decoupled,
/// from a dense solve of `K S + S Kᵀ + D = 0`.
pub fn stationary4(p: &SimParams, nbar: f64) -> [[C; 4]; 4] {
    let q = SimParams { gamma: 0.0, nbar, ..*p };
    let a = drift6(&q);
    let d = diffusion6(&q);
    let n = 4;
    let mut m = DMatrix::<C>::zeros(n * n, n * n);
    let mut rhs = DVector::<C>::zeros(n * n);
    for j in 0..n {
        for k in 0..n {
            let row = j * n + k;
            for l in 0..n {
                m[(row, l * n + k)] += a[j][l];
                m[(row, j * n + l)] += a[k][l];
            }
            rhs[row] = -d[j][k];
        }
    }
    let x = m.lu().solve(&rhs).expect("stationary covariance");
    let mut out = [[C::new(0.0, 0.0); 4]; 4];
    for j in 0..n {
        for k in 0..n {
            out[j][k] = x[j * n + k];
        }
    }
    out
}

/// Full `S` at injection: stationary system block, source block per `s`.
pub fn injected(system: &[[C; 4]; 4], s: &SourceSpec) -> Vec<C> {
    let mut m = vec![C::new(0.0, 0.0); N * N];
    for j in 0..4 {
        for k in 0..4 {
            m[j * N + k] = system[j][k];
        }
    }
    let (cc, nc) = match s {
        SourceSpec::Fock { n } => (C::new(0.0, 0.0), *n as f64),
        SourceSpec::Coherent { beta } => (beta * beta, beta.norm_sqr()),
    };
    m[CC * N + CC] = cc;
    m[CD * N + CD] = cc.conj();
    m[CC * N + CD] = C::new(nc + 1.0, 0.0);
    m[CD * N + CC] = C::new(nc, 0.0);
    m
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub times: Vec<f64>,
    pub n_a: Vec<f64>,
    pub n_b: Vec<f64>,
    pub re_cross: Vec<f64>,
    pub n_c: Vec<f64>,
    /// `max |<a a†> - <a† a> - 1|`, likewise for `b`, `c`.
    pub max_commutator_defect: f64,
}

pub fn run(p: &SimParams, s: &SourceSpec, nbar_init: f64, samples: &[f64], opts: &IntegrateOptions) -> Trace {
    let s0 = injected(&stationary4(p, nbar_init), s);
    run_from(p, &s0, samples, opts)
}

pub fn run_from(p: &SimParams, s0: &[C], samples: &[f64], opts: &IntegrateOptions) -> Trace {
    let a = drift6(p);
    let d = diffusion6(p);
    let mut tr = Trace::default();
    ode::integrate(
        |_, y: &[C], dy: &mut [C]| rhs(&a, &d, y, dy),
        None,
        0.0,
        s0,
        samples,
        opts,
        |t, y| {
            let at = |j: usize, k: usize| y[j * N + k];
            tr.times.push(t);
            tr.n_a.push(at(AD, A).re);
            tr.n_b.push(at(BD, B).re);
            tr.n_c.push(at(CD, CC).re);
            tr.re_cross.push((at(AD, CC) + at(CD, A)).re);
            for (x, xd) in [(A, AD), (B, BD), (CC, CD)] {
                let defect = (at(x, xd) - at(xd, x) - 1.0).norm();
                tr.max_commutator_defect = tr.max_commutator_defect.max(defect);
            }
            Ok(())
        },
    )
    .expect("unreduced moment integration");
    tr
}

pub fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}
