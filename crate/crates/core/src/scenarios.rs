//! Named presets for the reference figures and the run protocol: prepare the
//! stationary opto-mechanical state with the source decoupled, switch the
//! source on at `t = 0`, and integrate the moment equations.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::model::SimParams;
use crate::moments::{self, observables, MomentState, SourceSpec};
use crate::ode::IntegrateOptions;

pub const DEFAULT_T_END: f64 = 20.0;
pub const DEFAULT_SAMPLES: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub params: SimParams,
    pub source: SourceSpec,
    /// Bath occupation used to prepare the initial correlations.
    pub nbar_init: f64,
    pub t_end: f64,
    pub samples: usize,
}

impl Scenario {
    pub fn new(name: &str, params: SimParams, source: SourceSpec) -> Self {
        Scenario {
            name: name.to_string(),
            params,
            source,
            nbar_init: params.nbar,
            t_end: DEFAULT_T_END,
            samples: DEFAULT_SAMPLES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.source.validate()?;
        if self.name.is_empty() {
            return Err(Error::invalid("name", "must not be empty"));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::invalid("t_end", alloc::format!("must be positive, got {}", self.t_end)));
        }
        if self.samples < 2 {
            return Err(Error::invalid("samples", "need at least 2"));
        }
        if !(self.nbar_init >= 0.0) || !self.nbar_init.is_finite() {
            return Err(Error::invalid("nbar_init", "must be finite and >= 0"));
        }
        Ok(())
    }

    fn thermal(mut self, nbar: f64) -> Self {
        self.params.nbar = nbar;
        self.nbar_init = nbar;
        self
    }
}

pub const FIG2A_COUPLINGS: [f64; 4] = [0.1, 0.5, 1.0, 1.5];

/// Names of every registered preset, in registry order.
pub const PRESET_NAMES: [&str; 12] = [
    "fig2a-g0.1",
    "fig2a-g0.5",
    "fig2a-g1.0",
    "fig2a-g1.5",
    "fig2b",
    "fig3",
    "fig4-fock5",
    "fig4-coh-real",
    "fig4-coh-imag",
    "fig5",
    "fig5-nbar0",
    "experiment",
];

/// Figure identifiers accepted by `reproduce`, with the presets they use.
pub const FIGURES: [(&str, &[&str]); 5] = [
    ("fig2a", &["fig2a-g0.1", "fig2a-g0.5", "fig2a-g1.0", "fig2a-g1.5"]),
    ("fig2b", &["fig2b"]),
    ("fig3", &["fig3"]),
    ("fig4", &["fig4-fock5", "fig4-coh-real", "fig4-coh-imag"]),
    ("fig5", &["fig5", "fig5-nbar0"]),
];

pub fn preset(name: &str) -> Result<Scenario> {
    let fock1 = SourceSpec::Fock { n: 1 };
    let root5 = 5f64.sqrt();
    let s = match name {
        "fig2a-g0.1" => Scenario::new(name, SimParams::reference(0.1), fock1),
        "fig2a-g0.5" => Scenario::new(name, SimParams::reference(0.5), fock1),
        "fig2a-g1.0" => Scenario::new(name, SimParams::reference(1.0), fock1),
        "fig2a-g1.5" => Scenario::new(name, SimParams::reference(1.5), fock1),
        "fig2b" => Scenario::new(name, SimParams::reference(1.5), fock1),
        "fig3" => Scenario::new(name, SimParams::reference(2.0), fock1),
        "fig4-fock5" => Scenario::new(name, SimParams::reference(1.5), SourceSpec::Fock { n: 5 }),
        "fig4-coh-real" => Scenario::new(
            name,
            SimParams::reference(1.5),
            SourceSpec::Coherent { beta: C64::new(root5, 0.0) },
        ),
        "fig4-coh-imag" => Scenario::new(
            name,
            SimParams::reference(1.5),
            SourceSpec::Coherent { beta: C64::new(0.0, root5) },
        ),
        "fig5" => Scenario::new(name, SimParams::reference(1.5), fock1).thermal(1000.0),
        "fig5-nbar0" => Scenario::new(name, SimParams::reference(1.5), fock1),
        "experiment" => Scenario::new(name, SimParams::experiment(1.5), fock1),
        _ => return Err(Error::UnknownScenario(name.to_string())),
    };
    Ok(s)
}

pub fn registry() -> Vec<Scenario> {
    PRESET_NAMES.iter().map(|n| preset(n).expect("registered")).collect()
}

pub fn figure_presets(figure: &str) -> Result<&'static [&'static str]> {
    FIGURES
        .iter()
        .find(|(id, _)| *id == figure)
        .map(|(_, names)| *names)
        .ok_or_else(|| Error::UnknownScenario(figure.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub scenario: Scenario,
    pub options: IntegrateOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub n_a: Vec<f64>,
    pub n_b: Vec<f64>,
    /// `<a† c + c† a>`
    pub cross: Vec<f64>,
    /// Largest `|<a a†> - <a† a> - 1|` over the samples.
    pub max_commutator_defect: f64,
    pub metadata: RunMetadata,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Initial moment state of a scenario at the moment of injection.
pub fn initial_state(s: &Scenario) -> Result<MomentState> {
    let corr = moments::steady_state(&s.params, s.nbar_init)?;
    Ok(MomentState::at_injection(corr, &s.source, &s.params))
}

pub fn run_scenario(s: &Scenario, opts: &IntegrateOptions) -> Result<TimeSeries> {
    s.validate()?;
    opts.validate()?;
    let init = initial_state(s)?;
    let sys = moments::assemble_affine_system(&s.params, &s.source)?;
    let states = moments::integrate_to(&sys, &init, s.t_end, s.samples, opts)?;
    Ok(series_from_states(&states, s, opts))
}

pub fn series_from_states(states: &[MomentState], s: &Scenario, opts: &IntegrateOptions) -> TimeSeries {
    let mut ts = TimeSeries {
        times: Vec::with_capacity(states.len()),
        n_a: Vec::with_capacity(states.len()),
        n_b: Vec::with_capacity(states.len()),
        cross: Vec::with_capacity(states.len()),
        max_commutator_defect: 0.0,
        metadata: RunMetadata {
            scenario: s.clone(),
            options: *opts,
        },
    };
    for st in states {
        let o = observables(st);
        ts.times.push(st.time);
        ts.n_a.push(o.n_a);
        ts.n_b.push(o.n_b);
        ts.cross.push(o.re_cross);
        let (da, db) = st.corr.commutator_defects();
        ts.max_commutator_defect = ts.max_commutator_defect.max(da).max(db);
    }
    ts
}

/// Strict local maxima of `y` (3-point comparison) after a centred moving
/// average of width `window` (1 = none). A plateau counts once, at its first
/// index.
pub fn local_maxima(y: &[f64], window: usize) -> Vec<usize> {
    let n = y.len();
    if n < 3 {
        return Vec::new();
    }
    let smooth: Vec<f64> = if window <= 1 {
        y.to_vec()
    } else {
        let half = window / 2;
        (0..n)
            .map(|i| {
                let lo = i.saturating_sub(half);
                let hi = (i + half + 1).min(n);
                y[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            })
            .collect()
    };
    let mut out = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        if smooth[i] > smooth[i - 1] {
            let mut j = i;
            while j + 1 < n && smooth[j + 1] == smooth[i] {
                j += 1;
            }
            if j + 1 < n && smooth[j + 1] < smooth[i] {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// `(time, value)` of the local maxima of `n_a`.
pub fn peak_census(ts: &TimeSeries, window: usize) -> Vec<(f64, f64)> {
    local_maxima(&ts.n_a, window)
        .into_iter()
        .map(|i| (ts.times[i], ts.n_a[i]))
        .collect()
}

/// Peaks of the discrete Fourier amplitude of `y` on the uniform grid
/// `times`, after removing the mean and applying a Hann window:
/// `(angular frequency, amplitude)` for every local maximum of the one-sided
/// spectrum at non-zero frequency whose amplitude is at least `rel` times
/// the largest such maximum, strongest first. The zero-frequency bin takes
/// part in the neighbour comparison only.
pub fn spectral_peaks(times: &[f64], y: &[f64], rel: f64) -> Vec<(f64, f64)> {
    let n = y.len();
    if n < 4 || times.len() != n {
        return Vec::new();
    }
    let span = times[n - 1] - times[0];
    let dt = span / (n - 1) as f64;
    let mean = y.iter().sum::<f64>() / n as f64;
    let tau = 2.0 * core::f64::consts::PI;
    let windowed: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(j, v)| (v - mean) * (0.5 - 0.5 * (tau * j as f64 / (n - 1) as f64).cos()))
        .collect();
    let amp: Vec<f64> = (0..=n / 2)
        .map(|k| {
            let w = tau * k as f64 / n as f64;
            windowed
                .iter()
                .enumerate()
                .map(|(j, v)| C64::from_polar(*v, -w * j as f64))
                .sum::<C64>()
                .norm()
        })
        .collect();
    let candidates = local_maxima(&amp, 1);
    let top = candidates.iter().fold(0.0f64, |m, &k| m.max(amp[k]));
    let mut peaks: Vec<(f64, f64)> = candidates
        .into_iter()
        .filter(|&k| amp[k] >= rel * top)
        .map(|k| (tau * k as f64 / (n as f64 * dt), amp[k]))
        .collect();
    peaks.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(core::cmp::Ordering::Equal));
    peaks
}
