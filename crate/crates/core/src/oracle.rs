//! Brute-force integration of the cascaded master equation on a truncated
//! three-mode Fock space `(a, b, c)`, used as ground truth for the moment
//! solver.
//!
//! The generator is kept as a sum of left products, right products and
//! sandwiches `A ρ B`, and applied to the dense density matrix directly. For
//! small spaces it can also be materialized as a sparse superoperator.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use num_complex::Complex64 as C64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::is_positive_definite;
use crate::model::SimParams;
use crate::moments::SourceSpec;
use crate::ode::{self, IntegrateOptions};
use crate::sparse::Csr;

pub const DEFAULT_DIM_LIMIT: usize = 20_000;
/// Liouville-space size up to which [`Propagation::Auto`] uses the
/// materialized superoperator.
pub const SUPEROPERATOR_MAX: usize = 2_000;
/// Default population threshold for [`leakage`] certification.
pub const LEAKAGE_THRESHOLD: f64 = 1e-5;
/// Negative eigenvalues below `-POSITIVITY_LIMIT` abort an evolution.
pub const POSITIVITY_LIMIT: f64 = 1e-4;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationSpec {
    pub n_a_max: usize,
    pub n_b_max: usize,
    pub n_c_max: usize,
    pub dim_limit: usize,
}

impl TruncationSpec {
    pub fn new(n_a_max: usize, n_b_max: usize, n_c_max: usize) -> Self {
        TruncationSpec {
            n_a_max,
            n_b_max,
            n_c_max,
            dim_limit: DEFAULT_DIM_LIMIT,
        }
    }

    /// Cutoffs for the system modes with the source cutoff chosen for `s`.
    pub fn for_source(n_a_max: usize, n_b_max: usize, s: &SourceSpec) -> Self {
        Self::new(n_a_max, n_b_max, source_cutoff(s))
    }

    pub fn dim(&self) -> usize {
        (self.n_a_max + 1) * (self.n_b_max + 1) * (self.n_c_max + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_a_max < 1 || self.n_b_max < 1 || self.n_c_max < 1 {
            return Err(Error::invalid("cutoff", "every Fock cutoff must be >= 1"));
        }
        let dim = self.dim();
        if dim > self.dim_limit {
            return Err(Error::DimensionOverflow {
                dim,
                limit: self.dim_limit,
            });
        }
        Ok(())
    }

    pub fn index(&self, na: usize, nb: usize, nc: usize) -> usize {
        (na * (self.n_b_max + 1) + nb) * (self.n_c_max + 1) + nc
    }

    /// Inverse of [`TruncationSpec::index`].
    pub fn levels(&self, idx: usize) -> (usize, usize, usize) {
        let nc = idx % (self.n_c_max + 1);
        let rest = idx / (self.n_c_max + 1);
        (rest / (self.n_b_max + 1), rest % (self.n_b_max + 1), nc)
    }
}

/// Smallest source cutoff holding the initial state: `n` for a Fock state,
/// otherwise the first level beyond which the Poisson tail is below 1e-6.
pub fn source_cutoff(s: &SourceSpec) -> usize {
    match s {
        SourceSpec::Fock { n } => (*n as usize).max(1),
        SourceSpec::Coherent { beta } => {
            let mean = beta.norm_sqr();
            let mut p = (-mean).exp();
            let mut cumulative = p;
            let mut n = 0usize;
            while 1.0 - cumulative >= 1e-6 && n < 10_000 {
                n += 1;
                p *= mean / n as f64;
                cumulative += p;
            }
            n.max(1)
        }
    }
}

/// Ladder operators on the truncated product space.
#[derive(Debug, Clone)]
pub struct Ladder {
    pub a: Csr,
    pub b: Csr,
    pub c: Csr,
}

impl Ladder {
    pub fn new(tr: &TruncationSpec) -> Self {
        let dim = tr.dim();
        let mut ta = Vec::new();
        let mut tb = Vec::new();
        let mut tc = Vec::new();
        for idx in 0..dim {
            let (na, nb, nc) = tr.levels(idx);
            if na > 0 {
                ta.push((tr.index(na - 1, nb, nc), idx, C64::new((na as f64).sqrt(), 0.0)));
            }
            if nb > 0 {
                tb.push((tr.index(na, nb - 1, nc), idx, C64::new((nb as f64).sqrt(), 0.0)));
            }
            if nc > 0 {
                tc.push((tr.index(na, nb, nc - 1), idx, C64::new((nc as f64).sqrt(), 0.0)));
            }
        }
        Ladder {
            a: Csr::from_triplets(dim, dim, ta),
            b: Csr::from_triplets(dim, dim, tb),
            c: Csr::from_triplets(dim, dim, tc),
        }
    }
}

#[derive(Debug, Clone)]
struct Sandwich {
    left: Csr,
    right: Csr,
}

/// `L ρ = left·ρ + ρ·right + Σ A_k ρ B_k`.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub truncation: TruncationSpec,
    left: Csr,
    right: Csr,
    sandwiches: Vec<Sandwich>,
    terms: Vec<&'static str>,
}

impl Liouvillian {
    fn empty(tr: TruncationSpec) -> Self {
        let dim = tr.dim();
        Liouvillian {
            truncation: tr,
            left: Csr::zeros(dim, dim),
            right: Csr::zeros(dim, dim),
            sandwiches: Vec::new(),
            terms: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.truncation.dim()
    }

    /// Labels of the master-equation terms with non-zero rate.
    pub fn terms(&self) -> &[&'static str] {
        &self.terms
    }

    /// `-i rate [h, ρ]`
    fn commutator(&mut self, label: &'static str, rate: f64, h: &Csr) {
        if rate == 0.0 {
            return;
        }
        let s = C64::new(0.0, rate);
        self.left = self.left.add(&h.scale(-s));
        self.right = self.right.add(&h.scale(s));
        self.terms.push(label);
    }

    /// `rate (x ρ x† - ½{x†x, ρ})`
    fn dissipator(&mut self, label: &'static str, rate: f64, x: &Csr) {
        if rate == 0.0 {
            return;
        }
        let xd = x.adjoint();
        let n = xd.matmul(x).scale(C64::new(-0.5 * rate, 0.0));
        self.left = self.left.add(&n);
        self.right = self.right.add(&n);
        self.sandwiches.push(Sandwich {
            left: x.scale(C64::new(rate, 0.0)),
            right: xd,
        });
        self.terms.push(label);
    }

    /// `rate ([s ρ, t†] + [t, ρ s†])` with source `s` driving target `t`.
    fn cascade(&mut self, label: &'static str, rate: f64, s: &Csr, t: &Csr) {
        if rate == 0.0 {
            return;
        }
        let (sd, td) = (s.adjoint(), t.adjoint());
        let r = C64::new(rate, 0.0);
        self.sandwiches.push(Sandwich { left: s.scale(r), right: td.clone() });
        self.sandwiches.push(Sandwich { left: t.scale(r), right: sd.clone() });
        self.left = self.left.add(&td.matmul(s).scale(-r));
        self.right = self.right.add(&sd.matmul(t).scale(-r));
        self.terms.push(label);
    }

    /// `out = L ρ`; `scratch` must have the length of `rho`.
    pub fn apply(&self, rho: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        let n = self.dim();
        out.iter_mut().for_each(|v| *v = ZERO);
        self.left.left_mul_add(rho, n, ONE, out);
        self.right.right_mul_add(rho, n, ONE, out);
        for s in &self.sandwiches {
            scratch.iter_mut().for_each(|v| *v = ZERO);
            s.right.right_mul_add(rho, n, ONE, scratch);
            s.left.left_mul_add(scratch, n, ONE, out);
        }
    }

    /// Sparse superoperator acting on the row-major vectorization of ρ.
    pub fn superoperator(&self) -> Csr {
        let id = Csr::identity(self.dim());
        let mut s = self.left.kron(&id).add(&id.kron(&self.right.transpose()));
        for w in &self.sandwiches {
            s = s.add(&w.left.kron(&w.right.transpose()));
        }
        s
    }
}

/// Generator of the cascaded master equation for parameters `p`.
pub fn build_liouvillian(p: &SimParams, tr: &TruncationSpec) -> Result<Liouvillian> {
    p.validate_dynamics()?;
    tr.validate()?;
    let ops = Ladder::new(tr);
    let (a, b, c) = (&ops.a, &ops.b, &ops.c);
    let (ad, bd, cd) = (a.adjoint(), b.adjoint(), c.adjoint());

    let mut l = Liouvillian::empty(*tr);
    l.commutator("-iΔ[a†a,ρ]", p.delta, &ad.matmul(a));
    l.commutator("-iω_m[b†b,ρ]", p.omega_m, &bd.matmul(b));
    let coupling = if p.rwa {
        a.matmul(&bd).add(&ad.matmul(b))
    } else {
        a.add(&ad).matmul(&b.add(&bd))
    };
    l.commutator("-ig[(a+a†)(b+b†),ρ]", p.g, &coupling);
    l.dissipator("κD[a]ρ", p.kappa, a);
    l.dissipator("γD[c]ρ", p.gamma, c);
    l.dissipator("μ(n̄+1)D[b]ρ", p.mu * (p.nbar + 1.0), b);
    l.dissipator("μn̄D[b†]ρ", p.mu * p.nbar, &bd);
    l.commutator("-iΔ[c†c,ρ]", p.delta, &cd.matmul(c));
    l.cascade("√(γκ)([cρ,a†]+[a,ρc†])", p.cascade_rate(), c, a);
    Ok(l)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub truncation: TruncationSpec,
    /// Row-major `dim × dim`, basis ordered `(a, b, c)` with `c` fastest.
    pub rho: Vec<C64>,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.truncation.dim()
    }

    pub fn vacuum(tr: &TruncationSpec) -> Self {
        let mut rho = vec![ZERO; tr.dim() * tr.dim()];
        rho[0] = ONE;
        DensityMatrix { truncation: *tr, rho }
    }

    /// `ρ_a ⊗ ρ_b ⊗ ρ_c` from single-mode matrices of matching cutoffs.
    pub fn product(tr: &TruncationSpec, rho_a: &[C64], rho_b: &[C64], rho_c: &[C64]) -> Result<Self> {
        let (da, db, dc) = (tr.n_a_max + 1, tr.n_b_max + 1, tr.n_c_max + 1);
        if rho_a.len() != da * da || rho_b.len() != db * db || rho_c.len() != dc * dc {
            return Err(Error::invalid("rho", "single-mode state does not match the cutoffs"));
        }
        let ab = kron_dense(rho_a, da, rho_b, db);
        Ok(DensityMatrix {
            truncation: *tr,
            rho: kron_dense(&ab, da * db, rho_c, dc),
        })
    }

    /// Replaces the source factor: `Tr_c(ρ) ⊗ ρ_c`.
    pub fn with_source(&self, rho_c: &[C64], tr: &TruncationSpec) -> Result<Self> {
        let (ds, dc) = ((tr.n_a_max + 1) * (tr.n_b_max + 1), tr.n_c_max + 1);
        if rho_c.len() != dc * dc {
            return Err(Error::invalid("rho_c", "does not match the source cutoff"));
        }
        let sys = self.trace_out_source();
        if sys.len() != ds * ds {
            return Err(Error::invalid("truncation", "system cutoffs differ"));
        }
        Ok(DensityMatrix {
            truncation: *tr,
            rho: kron_dense(&sys, ds, rho_c, dc),
        })
    }

    /// Reduced state of `(a, b)`.
    pub fn trace_out_source(&self) -> Vec<C64> {
        let dc = self.truncation.n_c_max + 1;
        let ds = self.dim() / dc;
        let n = self.dim();
        let mut out = vec![ZERO; ds * ds];
        for i in 0..ds {
            for j in 0..ds {
                out[i * ds + j] = (0..dc).map(|k| self.rho[(i * dc + k) * n + j * dc + k]).sum();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        let n = self.dim();
        (0..n).map(|i| self.rho[i * n + i]).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.rho[i * n + j] - self.rho[j * n + i].conj()).norm());
            }
        }
        worst
    }

    pub fn symmetrize(&mut self) {
        let n = self.dim();
        symmetrize(&mut self.rho, n);
    }

    /// True if the smallest eigenvalue is above `-eps` (Cholesky of ρ + eps·1).
    pub fn eigenvalues_above(&self, eps: f64) -> bool {
        let n = self.dim();
        let mut shifted = self.rho.clone();
        for i in 0..n {
            shifted[i * n + i] += C64::new(eps, 0.0);
        }
        is_positive_definite(&shifted, n)
    }
}

fn symmetrize(rho: &mut [C64], n: usize) {
    for i in 0..n {
        rho[i * n + i].im = 0.0;
        for j in i + 1..n {
            let v = 0.5 * (rho[i * n + j] + rho[j * n + i].conj());
            rho[i * n + j] = v;
            rho[j * n + i] = v.conj();
        }
    }
}

fn kron_dense(x: &[C64], dx: usize, y: &[C64], dy: usize) -> Vec<C64> {
    let n = dx * dy;
    let mut out = vec![ZERO; n * n];
    for i1 in 0..dx {
        for j1 in 0..dx {
            let v = x[i1 * dx + j1];
            if v == ZERO {
                continue;
            }
            for i2 in 0..dy {
                for j2 in 0..dy {
                    out[(i1 * dy + i2) * n + j1 * dy + j2] = v * y[i2 * dy + j2];
                }
            }
        }
    }
    out
}

/// Single-mode `|n><n|` with the given cutoff.
pub fn fock_dm(n: usize, cutoff: usize) -> Result<Vec<C64>> {
    if n > cutoff {
        return Err(Error::TruncationTooSmall(alloc::format!(
            "Fock level {n} above cutoff {cutoff}"
        )));
    }
    let d = cutoff + 1;
    let mut m = vec![ZERO; d * d];
    m[n * d + n] = ONE;
    Ok(m)
}

/// Single-mode thermal state, truncated and renormalized.
pub fn thermal_dm(nbar: f64, cutoff: usize) -> Vec<C64> {
    let d = cutoff + 1;
    let q = if nbar > 0.0 { nbar / (nbar + 1.0) } else { 0.0 };
    let weights: Vec<f64> = (0..d).map(|k| q.powi(k as i32)).collect();
    let z: f64 = weights.iter().sum();
    let mut m = vec![ZERO; d * d];
    for (k, w) in weights.iter().enumerate() {
        m[k * d + k] = C64::new(w / z, 0.0);
    }
    m
}

/// Single-mode coherent state `|β><β|`, truncated and renormalized.
pub fn coherent_dm(beta: C64, cutoff: usize) -> Vec<C64> {
    let d = cutoff + 1;
    let mut amp = vec![ZERO; d];
    amp[0] = C64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    for k in 1..d {
        amp[k] = amp[k - 1] * beta / (k as f64).sqrt();
    }
    let norm: f64 = amp.iter().map(|v| v.norm_sqr()).sum();
    let mut m = vec![ZERO; d * d];
    for i in 0..d {
        for j in 0..d {
            m[i * d + j] = amp[i] * amp[j].conj() / norm;
        }
    }
    m
}

/// Initial state of the source mode for `s` at the given cutoff.
pub fn source_dm(s: &SourceSpec, cutoff: usize) -> Result<Vec<C64>> {
    match s {
        SourceSpec::Fock { n } => fock_dm(*n as usize, cutoff),
        SourceSpec::Coherent { beta } => Ok(coherent_dm(*beta, cutoff)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// `a† a`
    Na,
    /// `b† b`
    Nb,
    /// `c† c`
    Nc,
    /// `c c`
    Cc,
    /// `a c`
    Ac,
    /// `a† c`
    AdC,
    /// `b c`
    Bc,
    /// `b† c`
    BdC,
    /// `a a`
    Aa,
    /// `b b`
    Bb,
    /// `a b`
    Ab,
    /// `a b†`
    AbD,
    /// `a a†`
    AAd,
    /// `b b†`
    BBd,
}

impl Observable {
    pub const ALL: [Observable; 14] = [
        Observable::Na,
        Observable::Nb,
        Observable::Nc,
        Observable::Cc,
        Observable::Ac,
        Observable::AdC,
        Observable::Bc,
        Observable::BdC,
        Observable::Aa,
        Observable::Bb,
        Observable::Ab,
        Observable::AbD,
        Observable::AAd,
        Observable::BBd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::Na => "n_a",
            Observable::Nb => "n_b",
            Observable::Nc => "n_c",
            Observable::Cc => "cc",
            Observable::Ac => "ac",
            Observable::AdC => "adc",
            Observable::Bc => "bc",
            Observable::BdC => "bdc",
            Observable::Aa => "aa",
            Observable::Bb => "bb",
            Observable::Ab => "ab",
            Observable::AbD => "abd",
            Observable::AAd => "aad",
            Observable::BBd => "bbd",
        }
    }

    pub fn operator(self, ops: &Ladder) -> Csr {
        let (a, b, c) = (&ops.a, &ops.b, &ops.c);
        match self {
            Observable::Na => a.adjoint().matmul(a),
            Observable::Nb => b.adjoint().matmul(b),
            Observable::Nc => c.adjoint().matmul(c),
            Observable::Cc => c.matmul(c),
            Observable::Ac => a.matmul(c),
            Observable::AdC => a.adjoint().matmul(c),
            Observable::Bc => b.matmul(c),
            Observable::BdC => b.adjoint().matmul(c),
            Observable::Aa => a.matmul(a),
            Observable::Bb => b.matmul(b),
            Observable::Ab => a.matmul(b),
            Observable::AbD => a.matmul(&b.adjoint()),
            Observable::AAd => a.matmul(&a.adjoint()),
            Observable::BBd => b.matmul(&b.adjoint()),
        }
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let alias = match s {
            "a†a" | "ada" => "n_a",
            "b†b" | "bdb" => "n_b",
            "c†c" | "cdc" => "n_c",
            "a†c" => "adc",
            "b†c" => "bdc",
            "ab†" => "abd",
            "aa†" => "aad",
            "bb†" => "bbd",
            other => other,
        };
        Observable::ALL
            .iter()
            .copied()
            .find(|o| o.name() == alias)
            .ok_or_else(|| Error::UnknownObservable(String::from(s)))
    }
}

/// `Tr(O ρ)`.
pub fn expectation(rho: &DensityMatrix, which: Observable) -> C64 {
    let op = which.operator(&Ladder::new(&rho.truncation));
    trace_product(&op, rho)
}

fn trace_product(op: &Csr, rho: &DensityMatrix) -> C64 {
    let n = rho.dim();
    op.triplets().map(|(i, j, v)| v * rho.rho[j * n + i]).sum()
}

/// Population of the highest retained Fock level of each mode `(a, b, c)`.
pub fn leakage(rho: &DensityMatrix) -> [f64; 3] {
    let tr = &rho.truncation;
    let n = rho.dim();
    let mut out = [0.0; 3];
    for i in 0..n {
        let (na, nb, nc) = tr.levels(i);
        let p = rho.rho[i * n + i].re;
        if na == tr.n_a_max {
            out[0] += p;
        }
        if nb == tr.n_b_max {
            out[1] += p;
        }
        if nc == tr.n_c_max {
            out[2] += p;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagation {
    /// Superoperator when the Liouville space is at most [`SUPEROPERATOR_MAX`].
    Auto,
    Matrix,
    Superoperator,
}

/// Evolves `rho0` under `gen` and calls `on_sample` at each time in
/// `samples` (absolute times, the evolution starts at `t0`).
pub fn evolve_rho_with(
    gen: &Liouvillian,
    rho0: &DensityMatrix,
    t0: f64,
    samples: &[f64],
    opts: &IntegrateOptions,
    path: Propagation,
    mut on_sample: impl FnMut(f64, &DensityMatrix) -> Result<()>,
) -> Result<()> {
    if rho0.truncation != gen.truncation {
        return Err(Error::invalid("rho0", "truncation differs from the generator"));
    }
    let n = gen.dim();
    let superop = match path {
        Propagation::Superoperator => true,
        Propagation::Matrix => false,
        Propagation::Auto => n * n <= SUPEROPERATOR_MAX,
    };
    let project = move |y: &mut [C64]| symmetrize(y, n);
    let mut sample = DensityMatrix {
        truncation: gen.truncation,
        rho: vec![ZERO; n * n],
    };
    let mut emit = |t: f64, y: &[C64]| -> Result<()> {
        sample.rho.copy_from_slice(y);
        sample.symmetrize();
        if !sample.eigenvalues_above(POSITIVITY_LIMIT) {
            return Err(Error::TruncationTooSmall(alloc::format!(
                "density matrix lost positivity (eigenvalue < -{POSITIVITY_LIMIT:e}) at t = {t}"
            )));
        }
        on_sample(t, &sample)
    };

    if superop {
        let s = gen.superoperator();
        ode::integrate(
            |_, y: &[C64], dy: &mut [C64]| {
                dy.iter_mut().for_each(|v| *v = ZERO);
                s.mul_vec_add(y, dy);
            },
            Some(&project),
            t0,
            &rho0.rho,
            samples,
            opts,
            &mut emit,
        )?;
    } else {
        let mut scratch = vec![ZERO; n * n];
        ode::integrate(
            |_, y: &[C64], dy: &mut [C64]| gen.apply(y, dy, &mut scratch),
            Some(&project),
            t0,
            &rho0.rho,
            samples,
            opts,
            &mut emit,
        )?;
    }
    Ok(())
}

/// Collecting variant of [`evolve_rho_with`], starting at `t = 0`.
pub fn evolve_rho(
    gen: &Liouvillian,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    opts: &IntegrateOptions,
) -> Result<Vec<DensityMatrix>> {
    let mut out = Vec::with_capacity(t_grid.len());
    evolve_rho_with(gen, rho0, 0.0, t_grid, opts, Propagation::Auto, |_, r| {
        out.push(r.clone());
        Ok(())
    })?;
    Ok(out)
}

/// Largest entry of `|L ρ|`.
pub fn residual(gen: &Liouvillian, rho: &DensityMatrix) -> f64 {
    let n = gen.dim();
    let mut out = vec![ZERO; n * n];
    let mut scratch = vec![ZERO; n * n];
    gen.apply(&rho.rho, &mut out, &mut scratch);
    out.iter().fold(0.0, |m, v| m.max(v.norm()))
}

/// Evolves `rho` in chunks of `chunk` until `max |L ρ| <= tol`.
pub fn relax(
    gen: &Liouvillian,
    rho: &DensityMatrix,
    tol: f64,
    chunk: f64,
    t_max: f64,
    opts: &IntegrateOptions,
) -> Result<DensityMatrix> {
    let mut current = rho.clone();
    let mut t = 0.0;
    while residual(gen, &current) > tol {
        if t >= t_max {
            return Err(Error::NoSteadyState(alloc::format!(
                "oracle did not relax to residual {tol:e} within t = {t_max}"
            )));
        }
        let mut next = None;
        evolve_rho_with(gen, &current, t, &[t + chunk], opts, Propagation::Matrix, |_, r| {
            next = Some(r.clone());
            Ok(())
        })?;
        current = next.expect("one sample requested");
        t += chunk;
    }
    Ok(current)
}

/// Liouville-space size of the `(a, b)` block up to which the stationary
/// state is found by a direct linear solve instead of [`relax`].
pub const DIRECT_STATIONARY_MAX: usize = 4_096;

/// Stationary state of a generator without cascade coupling, restricted to
/// states with the source mode in vacuum: the null vector of the `(a, b)`
/// block of the superoperator, normalized to unit trace.
pub fn stationary_source_vacuum(gen: &Liouvillian) -> Result<DensityMatrix> {
    let tr = gen.truncation;
    let n = gen.dim();
    let dc = tr.n_c_max + 1;
    let kept: Vec<usize> = (0..n).filter(|i| i % dc == 0).collect();
    let m = kept.len() * kept.len();
    let mut slot = vec![usize::MAX; n * n];
    for (a, &i) in kept.iter().enumerate() {
        for (b, &j) in kept.iter().enumerate() {
            slot[i * n + j] = a * kept.len() + b;
        }
    }
    let s = gen.superoperator();
    let mut mat = vec![ZERO; m * m];
    for (r, c, v) in s.triplets() {
        match (slot[r], slot[c]) {
            (usize::MAX, usize::MAX) => {}
            (rr, cc) if rr != usize::MAX && cc != usize::MAX => mat[rr * m + cc] += v,
            _ => return Err(Error::Domain("generator couples the source mode".into())),
        }
    }
    // the equation for the first diagonal entry is replaced by Tr ρ = 1
    let mut rhs = vec![ZERO; m];
    mat[..m].iter_mut().for_each(|v| *v = ZERO);
    for a in 0..kept.len() {
        mat[a * kept.len() + a] = ONE;
    }
    rhs[0] = ONE;
    crate::linalg::solve_in_place(&mut mat, m, &mut rhs)
        .ok_or_else(|| Error::NoSteadyState("stationary state is not unique".into()))?;
    let mut rho = DensityMatrix { truncation: tr, rho: vec![ZERO; n * n] };
    for (a, &i) in kept.iter().enumerate() {
        for (b, &j) in kept.iter().enumerate() {
            rho.rho[i * n + j] = rhs[a * kept.len() + b];
        }
    }
    rho.symmetrize();
    Ok(rho)
}

/// Oracle counterpart of the scenario protocol: relax the opto-mechanical
/// system with the source decoupled, load the source, evolve, and record
/// observables at `samples`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleRun {
    pub times: Vec<f64>,
    pub n_a: Vec<f64>,
    pub n_b: Vec<f64>,
    pub n_c: Vec<f64>,
    /// `<a† c + c† a>`
    pub re_cross: Vec<f64>,
    /// `<a a†> - <a† a> - 1`
    pub commutator_a: Vec<f64>,
    pub max_leakage: [f64; 3],
    pub max_trace_drift: f64,
    pub max_hermiticity_defect: f64,
    /// Extra observables requested through [`OracleConfig::track`].
    pub tracked: Vec<(Observable, Vec<C64>)>,
}

impl OracleRun {
    /// True if the highest retained level of the cavity and the mechanics
    /// stayed below `threshold`. The source mode is exempt: it only decays,
    /// so a cutoff at its initial highest level is exact.
    pub fn certified(&self, threshold: f64) -> bool {
        self.max_leakage[0] < threshold && self.max_leakage[1] < threshold
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub truncation: TruncationSpec,
    pub opts: IntegrateOptions,
    pub path: Propagation,
    /// Residual tolerance of the pre-injection relaxation.
    pub relax_tol: f64,
    pub relax_t_max: f64,
    /// Integrator settings of the relaxation; the residual it can reach is
    /// bounded by these tolerances.
    pub relax_opts: IntegrateOptions,
    pub track: Vec<Observable>,
}

impl OracleConfig {
    pub fn new(truncation: TruncationSpec) -> Self {
        OracleConfig {
            truncation,
            opts: IntegrateOptions::with_tolerances(1e-8, 1e-10),
            path: Propagation::Auto,
            relax_tol: 1e-8,
            relax_t_max: 2_000.0,
            relax_opts: IntegrateOptions::with_tolerances(1e-12, 1e-14),
            track: Vec::new(),
        }
    }
}

/// Pre-injection state: the stationary opto-mechanical state (source
/// decoupled) with the source mode loaded according to `s`.
pub fn prepared_state(p: &SimParams, s: &SourceSpec, cfg: &OracleConfig) -> Result<DensityMatrix> {
    let tr = &cfg.truncation;
    tr.validate()?;
    let rho_c = source_dm(s, tr.n_c_max)?;
    let thermal_b = thermal_dm(p.nbar, tr.n_b_max);
    let start = DensityMatrix::product(tr, &fock_dm(0, tr.n_a_max)?, &thermal_b, &fock_dm(0, tr.n_c_max)?)?;
    let sys = if p.g == 0.0 {
        start
    } else {
        let pre = build_liouvillian(&SimParams { gamma: 0.0, ..*p }, tr)?;
        let block = (tr.n_a_max + 1) * (tr.n_b_max + 1);
        match (block * block <= DIRECT_STATIONARY_MAX).then(|| stationary_source_vacuum(&pre)) {
            Some(Ok(rho)) => rho,
            _ => relax(&pre, &start, cfg.relax_tol, 5.0, cfg.relax_t_max, &cfg.relax_opts)?,
        }
    };
    sys.with_source(&rho_c, tr)
}

pub fn run_oracle(p: &SimParams, s: &SourceSpec, samples: &[f64], cfg: &OracleConfig) -> Result<OracleRun> {
    let rho0 = prepared_state(p, s, cfg)?;
    let gen = build_liouvillian(p, &cfg.truncation)?;
    let ops = Ladder::new(&cfg.truncation);
    let na = Observable::Na.operator(&ops);
    let nb = Observable::Nb.operator(&ops);
    let nc = Observable::Nc.operator(&ops);
    let adc = Observable::AdC.operator(&ops);
    let aad = Observable::AAd.operator(&ops);
    let extra: Vec<(Observable, Csr)> = cfg.track.iter().map(|o| (*o, o.operator(&ops))).collect();

    let mut run = OracleRun {
        tracked: cfg.track.iter().map(|o| (*o, Vec::new())).collect(),
        ..Default::default()
    };
    evolve_rho_with(&gen, &rho0, 0.0, samples, &cfg.opts, cfg.path, |t, rho| {
        let n_a = trace_product(&na, rho).re;
        run.times.push(t);
        run.n_a.push(n_a);
        run.n_b.push(trace_product(&nb, rho).re);
        run.n_c.push(trace_product(&nc, rho).re);
        run.re_cross.push(2.0 * trace_product(&adc, rho).re);
        run.commutator_a.push(trace_product(&aad, rho).re - n_a - 1.0);
        for (slot, (_, op)) in run.tracked.iter_mut().zip(&extra) {
            slot.1.push(trace_product(op, rho));
        }
        let leak = leakage(rho);
        for k in 0..3 {
            run.max_leakage[k] = run.max_leakage[k].max(leak[k]);
        }
        run.max_trace_drift = run.max_trace_drift.max((rho.trace() - ONE).norm());
        Ok(())
    })?;
    Ok(run)
}
