//! Exact second-moment dynamics of the cascaded source → opto-mechanics system.
//!
//! The tracked moments are six system correlations and four source–system
//! cross moments (see [`Moment`]); every other entry of the 4×4 correlation
//! matrix follows from conjugation and the canonical commutators. The source
//! moments `<c c>` and `<c† c>` have closed forms and enter as forcing.
//!
//! Because some equations couple a moment to the conjugate of another, the
//! system is linear over the reals: the state is the 20-vector of real and
//! imaginary parts, `dx/dt = M x + d(t)`. The equation for every entry is
//! written out in `docs/moment-equations.md`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{is_hurwitz4, solve_in_place};
use crate::model::{drift_matrix_unchecked, SimParams, A, AD, B, BD};
use crate::ode::{self, IntegrateOptions};

/// Imaginary residue of `<a† a>` or `<b† b>` above which a warning is logged.
pub const IMAG_RESIDUE_WARN: f64 = 1e-8;

/// Index of each tracked complex moment in the state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(usize)]
pub enum Moment {
    /// `<a a>`
    Aa = 0,
    /// `<a† a>`
    Na = 1,
    /// `<b b>`
    Bb = 2,
    /// `<b† b>`
    Nb = 3,
    /// `<a b>`
    Ab = 4,
    /// `<a b†>`
    AbD = 5,
    /// `<a c>`
    Ac = 6,
    /// `<a† c>`
    AdC = 7,
    /// `<b c>`
    Bc = 8,
    /// `<b† c>`
    BdC = 9,
}

pub const N_MOMENTS: usize = 10;
pub const N_CORR: usize = 6;
/// Real dimension of the state vector.
pub const DIM: usize = 2 * N_MOMENTS;

/// Initial state of the source cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceSpec {
    Fock { n: u32 },
    Coherent { beta: C64 },
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SourceSpec::Fock { .. } => Ok(()),
            SourceSpec::Coherent { beta } if beta.re.is_finite() && beta.im.is_finite() => Ok(()),
            SourceSpec::Coherent { .. } => Err(Error::invalid("beta", "must be finite")),
        }
    }

    pub fn mean_photons(&self) -> f64 {
        match self {
            SourceSpec::Fock { n } => f64::from(*n),
            SourceSpec::Coherent { beta } => beta.norm_sqr(),
        }
    }
}

/// `<c c>` and `<c† c>` of the freely decaying source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceMoments {
    pub cc: C64,
    pub nc: f64,
}

pub fn source_moments(s: &SourceSpec, gamma: f64, delta: f64, t: f64) -> Result<SourceMoments> {
    if !(t >= 0.0) {
        return Err(Error::Domain(alloc::format!("source time must be >= 0, got {t}")));
    }
    s.validate()?;
    Ok(source_moments_at(s, gamma, delta, t))
}

fn source_moments_at(s: &SourceSpec, gamma: f64, delta: f64, t: f64) -> SourceMoments {
    let decay = (-gamma * t).exp();
    match s {
        SourceSpec::Fock { n } => SourceMoments {
            cc: C64::new(0.0, 0.0),
            nc: f64::from(*n) * decay,
        },
        SourceSpec::Coherent { beta } => SourceMoments {
            cc: beta * beta * (C64::new(-gamma, -2.0 * delta) * t).exp(),
            nc: beta.norm_sqr() * decay,
        },
    }
}

/// Cross moments between the system and the source.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseVector {
    pub ac: C64,
    pub adc: C64,
    pub bc: C64,
    pub bdc: C64,
}

impl NoiseVector {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `<a† c + c† a>`, the quantity that pumps photons into the cavity.
    pub fn re_cross(&self) -> f64 {
        2.0 * self.adc.re
    }
}

/// `C[j][k] = <A_j A_k>` for `A = (a, a†, b, b†)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationMatrix {
    pub c: [[C64; 4]; 4],
}

impl CorrelationMatrix {
    pub fn vacuum() -> Self {
        Self::number_state(0.0, 0.0)
    }

    /// Phase-insensitive state with `<a† a> = n_a`, `<b† b> = n_b` and no
    /// other correlations (Fock or thermal states share these moments).
    pub fn number_state(n_a: f64, n_b: f64) -> Self {
        let z = C64::new(0.0, 0.0);
        let mut r = [z; N_CORR];
        r[Moment::Na as usize] = C64::new(n_a, 0.0);
        r[Moment::Nb as usize] = C64::new(n_b, 0.0);
        Self::from_reduced(&r)
    }

    /// Builds the full matrix from `[<aa>, <a†a>, <bb>, <b†b>, <ab>, <ab†>]`.
    pub fn from_reduced(r: &[C64; N_CORR]) -> Self {
        let one = C64::new(1.0, 0.0);
        let [aa, na, bb, nb, ab, abd] = *r;
        let c = [
            [aa, na + one, ab, abd],
            [na, aa.conj(), abd.conj(), ab.conj()],
            [ab, abd.conj(), bb, nb + one],
            [abd, ab.conj(), nb, bb.conj()],
        ];
        CorrelationMatrix { c }
    }

    pub fn reduced(&self) -> [C64; N_CORR] {
        [
            self.c[A][A],
            self.c[AD][A],
            self.c[B][B],
            self.c[BD][B],
            self.c[A][B],
            self.c[A][BD],
        ]
    }

    pub fn n_a(&self) -> f64 {
        self.c[AD][A].re
    }

    pub fn n_b(&self) -> f64 {
        self.c[BD][B].re
    }

    /// `(|<aa†> - <a†a> - 1|, |<bb†> - <b†b> - 1|)`.
    pub fn commutator_defects(&self) -> (f64, f64) {
        let one = C64::new(1.0, 0.0);
        (
            (self.c[A][AD] - self.c[AD][A] - one).norm(),
            (self.c[B][BD] - self.c[BD][B] - one).norm(),
        )
    }

    /// Largest violation of `<A_j A_k>* = <A_k† A_j†>` over all entries.
    pub fn conjugation_defect(&self) -> f64 {
        let dag = [AD, A, BD, B];
        let mut worst = 0.0f64;
        for j in 0..4 {
            for k in 0..4 {
                worst = worst.max((self.c[j][k].conj() - self.c[dag[k]][dag[j]]).norm());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentState {
    pub time: f64,
    pub corr: CorrelationMatrix,
    pub noise: NoiseVector,
    pub source: SourceMoments,
}

impl MomentState {
    /// State at the moment the source is switched on: the given system
    /// correlations, no system–source correlation, the source's own moments.
    pub fn at_injection(corr: CorrelationMatrix, source: &SourceSpec, p: &SimParams) -> Self {
        MomentState {
            time: 0.0,
            corr,
            noise: NoiseVector::zero(),
            source: source_moments_at(source, p.gamma, p.delta, 0.0),
        }
    }
}

/// The drift of the source–system cross moments, as a 4×4 matrix over
/// `(<ac>, <a†c>, <bc>, <b†c>)`, with the full (non-RWA) coupling.
pub fn noise_drift(p: &SimParams) -> Result<[[C64; 4]; 4]> {
    p.validate()?;
    let r = p.rates();
    let (i, g) = (C64::i(), p.g);
    let z = C64::new(0.0, 0.0);
    let half = C64::new((p.kappa + p.gamma) / 2.0, 0.0);
    Ok([
        [-r.sigma, z, -i * g, -i * g],
        [z, -half, i * g, i * g],
        [-i * g, -i * g, -r.tau_plus, z],
        [i * g, i * g, z, -r.tau_minus.conj()],
    ])
}

/// `dx/dt = M x + d(t)` over the real and imaginary parts of the tracked
/// moments (layout `[re m0, im m0, re m1, ...]`, order of [`Moment`]).
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSystem {
    /// `DIM × DIM`, row-major.
    pub m: Vec<f64>,
    /// Time-independent part of `d` (thermal and operator-ordering terms).
    pub constant: [f64; DIM],
    cascade: f64,
    source: SourceSpec,
    gamma: f64,
    delta: f64,
}

struct Builder {
    m: Vec<f64>,
    constant: [f64; DIM],
}

impl Builder {
    /// `d m_row/dt += alpha m_col + beta conj(m_col)`
    fn term(&mut self, row: Moment, col: Moment, alpha: C64, beta: C64) {
        let (r, c) = (2 * row as usize, 2 * col as usize);
        let m = &mut self.m;
        m[r * DIM + c] += alpha.re + beta.re;
        m[r * DIM + c + 1] += -alpha.im + beta.im;
        m[(r + 1) * DIM + c] += alpha.im + beta.im;
        m[(r + 1) * DIM + c + 1] += alpha.re - beta.re;
    }

    fn lin(&mut self, row: Moment, col: Moment, alpha: C64) {
        self.term(row, col, alpha, C64::new(0.0, 0.0));
    }

    fn conj(&mut self, row: Moment, col: Moment, beta: C64) {
        self.term(row, col, C64::new(0.0, 0.0), beta);
    }

    fn constant(&mut self, row: Moment, v: C64) {
        self.constant[2 * row as usize] += v.re;
        self.constant[2 * row as usize + 1] += v.im;
    }
}

pub fn assemble_affine_system(p: &SimParams, s: &SourceSpec) -> Result<AffineSystem> {
    p.validate_dynamics()?;
    s.validate()?;
    Ok(assemble_unchecked(p, s))
}

pub(crate) fn assemble_unchecked(p: &SimParams, s: &SourceSpec) -> AffineSystem {
    use Moment::*;
    let rates = p.rates();
    let (kt, mt) = (rates.kappa_t, rates.mu_t);
    let (gr, gc) = p.couplings();
    let r = p.cascade_rate();
    let i = C64::i();
    let re = |x: f64| C64::new(x, 0.0);

    let mut b = Builder {
        m: vec![0.0; DIM * DIM],
        constant: [0.0; DIM],
    };

    // <aa>' = -2κ̃<aa> - 2i g_r <ab> - 2i g_c <ab†> - 2r <ac>
    b.lin(Aa, Aa, -2.0 * kt);
    b.lin(Aa, Ab, -2.0 * i * gr);
    b.lin(Aa, AbD, -2.0 * i * gc);
    b.lin(Aa, Ac, re(-2.0 * r));

    // <a†a>' = -κ<a†a> + i g_r(<ab†> - <ab†>*) + i g_c(<ab> - <ab>*) - r(<a†c> + <a†c>*)
    b.lin(Na, Na, re(-p.kappa));
    b.term(Na, AbD, i * gr, -i * gr);
    b.term(Na, Ab, i * gc, -i * gc);
    b.term(Na, AdC, re(-r), re(-r));

    // <bb>' = -2μ̃<bb> - 2i g_r <ab> - 2i g_c <ab†>*
    b.lin(Bb, Bb, -2.0 * mt);
    b.lin(Bb, Ab, -2.0 * i * gr);
    b.conj(Bb, AbD, -2.0 * i * gc);

    // <b†b>' = -μ<b†b> - i g_r(<ab†> - <ab†>*) + i g_c(<ab> - <ab>*) + μ n̄
    b.lin(Nb, Nb, re(-p.mu));
    b.term(Nb, AbD, -i * gr, i * gr);
    b.term(Nb, Ab, i * gc, -i * gc);
    b.constant(Nb, re(p.mu * p.nbar));

    // <ab>' = -(κ̃+μ̃)<ab> - i g_r(<aa> + <bb>) - i g_c(<a†a> + <b†b> + 1) - r<bc>
    b.lin(Ab, Ab, -(kt + mt));
    b.lin(Ab, Aa, -i * gr);
    b.lin(Ab, Bb, -i * gr);
    b.lin(Ab, Na, -i * gc);
    b.lin(Ab, Nb, -i * gc);
    b.constant(Ab, -i * gc);
    b.lin(Ab, Bc, re(-r));

    // <ab†>' = -(κ̃+μ̃*)<ab†> + i g_r(<a†a> - <b†b>) + i g_c(<aa> - <bb>*) - r<b†c>
    b.lin(AbD, AbD, -(kt + mt.conj()));
    b.lin(AbD, Na, i * gr);
    b.lin(AbD, Nb, -i * gr);
    b.lin(AbD, Aa, i * gc);
    b.conj(AbD, Bb, -i * gc);
    b.lin(AbD, BdC, re(-r));

    // <A_j c>' = sum_l K_jl <A_l c> - (iΔ + γ/2)<A_j c> - r (<cc>, <c†c>, 0, 0)_j
    let k = drift_matrix_unchecked(p).k;
    let source_rot = C64::new(p.gamma / 2.0, p.delta);
    let noise = [Ac, AdC, Bc, BdC];
    for (j, &row) in noise.iter().enumerate() {
        for (l, &col) in noise.iter().enumerate() {
            let mut v = k[j][l];
            if j == l {
                v -= source_rot;
            }
            if v != C64::new(0.0, 0.0) {
                b.lin(row, col, v);
            }
        }
    }

    AffineSystem {
        m: b.m,
        constant: b.constant,
        cascade: r,
        source: *s,
        gamma: p.gamma,
        delta: p.delta,
    }
}

impl AffineSystem {
    pub const DIM: usize = DIM;

    pub fn source_spec(&self) -> &SourceSpec {
        &self.source
    }

    /// Full forcing `d(t)`; the source terms switch on at `t = 0`.
    pub fn forcing(&self, t: f64) -> [f64; DIM] {
        let mut d = self.constant;
        if t >= 0.0 && self.cascade != 0.0 {
            let s = source_moments_at(&self.source, self.gamma, self.delta, t);
            d[2 * Moment::Ac as usize] -= self.cascade * s.cc.re;
            d[2 * Moment::Ac as usize + 1] -= self.cascade * s.cc.im;
            d[2 * Moment::AdC as usize] -= self.cascade * s.nc;
        }
        d
    }

    pub fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        let d = self.forcing(t);
        for (r, out) in dx.iter_mut().enumerate().take(DIM) {
            let row = &self.m[r * DIM..(r + 1) * DIM];
            *out = d[r] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    pub fn pack(state: &MomentState) -> [f64; DIM] {
        let r = state.corr.reduced();
        let n = &state.noise;
        let all = [r[0], r[1], r[2], r[3], r[4], r[5], n.ac, n.adc, n.bc, n.bdc];
        let mut x = [0.0; DIM];
        for (k, v) in all.iter().enumerate() {
            x[2 * k] = v.re;
            x[2 * k + 1] = v.im;
        }
        x
    }

    pub fn unpack(&self, t: f64, x: &[f64]) -> MomentState {
        let z = |k: usize| C64::new(x[2 * k], x[2 * k + 1]);
        let mut r = [C64::new(0.0, 0.0); N_CORR];
        for (k, v) in r.iter_mut().enumerate() {
            *v = z(k);
        }
        MomentState {
            time: t,
            corr: CorrelationMatrix::from_reduced(&r),
            noise: NoiseVector {
                ac: z(6),
                adc: z(7),
                bc: z(8),
                bdc: z(9),
            },
            source: source_moments_at(&self.source, self.gamma, self.delta, t.max(0.0)),
        }
    }
}

/// Integrates the moment system from `init` and returns the state at each
/// time in `samples` (sorted, `>= init.time`).
pub fn integrate(
    sys: &AffineSystem,
    init: &MomentState,
    samples: &[f64],
    opts: &IntegrateOptions,
) -> Result<Vec<MomentState>> {
    let x0 = AffineSystem::pack(init);
    let mut out = Vec::with_capacity(samples.len());
    ode::integrate(
        |t, x: &[f64], dx: &mut [f64]| sys.rhs(t, x, dx),
        None,
        init.time,
        &x0,
        samples,
        opts,
        |t, x| {
            out.push(sys.unpack(t, x));
            Ok(())
        },
    )?;
    Ok(out)
}

/// Integrates to `t_end` and returns `samples` equally spaced states.
pub fn integrate_to(
    sys: &AffineSystem,
    init: &MomentState,
    t_end: f64,
    samples: usize,
    opts: &IntegrateOptions,
) -> Result<Vec<MomentState>> {
    if !(t_end > init.time) {
        return Err(Error::Domain(alloc::format!(
            "t_end ({t_end}) must exceed the initial time ({})",
            init.time
        )));
    }
    integrate(sys, init, &ode::uniform_grid(init.time, t_end, samples), opts)
}

/// Stationary correlations of the opto-mechanical system with the source
/// decoupled (`gamma = 0`) and bath occupation `nbar`.
pub fn steady_state(p: &SimParams, nbar: f64) -> Result<CorrelationMatrix> {
    let q = SimParams { gamma: 0.0, nbar, ..*p };
    q.validate()?;
    let k = drift_matrix_unchecked(&q).k;
    if !is_hurwitz4(&k) {
        return Err(Error::NoSteadyState(
            "drift matrix has an eigenvalue with non-negative real part".into(),
        ));
    }
    let sys = assemble_unchecked(&q, &SourceSpec::Fock { n: 0 });
    const NC: usize = 2 * N_CORR;
    let mut a = vec![0.0; NC * NC];
    for r in 0..NC {
        a[r * NC..(r + 1) * NC].copy_from_slice(&sys.m[r * DIM..r * DIM + NC]);
    }
    let mut rhs: Vec<f64> = sys.constant[..NC].iter().map(|v| -v).collect();
    solve_in_place(&mut a, NC, &mut rhs)
        .ok_or_else(|| Error::NoSteadyState("moment system is singular".into()))?;
    let mut red = [C64::new(0.0, 0.0); N_CORR];
    for (k, v) in red.iter_mut().enumerate() {
        *v = C64::new(rhs[2 * k], rhs[2 * k + 1]);
    }
    Ok(CorrelationMatrix::from_reduced(&red))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    /// Added cavity photon number `<a† a>`.
    pub n_a: f64,
    /// Added phonon number `<b† b>`.
    pub n_b: f64,
    /// `<a† c + c† a>`.
    pub re_cross: f64,
    pub im_n_a: f64,
    pub im_n_b: f64,
}

pub fn observables(st: &MomentState) -> Observables {
    let na = st.corr.c[AD][A];
    let nb = st.corr.c[BD][B];
    if na.im.abs() > IMAG_RESIDUE_WARN || nb.im.abs() > IMAG_RESIDUE_WARN {
        log::warn!(
            "imaginary residue in number moments at t={}: Im<a†a>={:e}, Im<b†b>={:e}",
            st.time,
            na.im,
            nb.im
        );
    }
    Observables {
        n_a: na.re,
        n_b: nb.re,
        re_cross: st.noise.re_cross(),
        im_n_a: na.im,
        im_n_b: nb.im,
    }
}
