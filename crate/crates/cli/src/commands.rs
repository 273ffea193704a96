use std::path::{Path, PathBuf};

use optocascade::model::{normal_mode_frequencies, A, AD, B};
use optocascade::moments;
use optocascade::oracle::{run_oracle, OracleConfig, OracleRun, LEAKAGE_THRESHOLD};
use optocascade::scenarios::{self, local_maxima, run_scenario, spectral_peaks, TimeSeries};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{self, Mode, RunConfig};
use crate::output::{self, Trace};
use crate::plot::Series;
use crate::{CliError, Inputs};

/// Maxima below this fraction of the largest one are not counted as peaks.
pub const PEAK_FLOOR: f64 = 0.01;

const AXIS_KEYS: &[&str] = &["kappa", "gamma", "mu", "nbar", "omega_m", "delta", "g", "nbar_init", "beta_re", "beta_im"];

pub fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Moments => "moments",
        Mode::Oracle => "oracle",
        Mode::Both => "both",
    }
}

fn meta_text(cfg: &RunConfig) -> String {
    format!("# optocascade {}\n{}", env!("CARGO_PKG_VERSION"), cfg.to_toml())
}

fn with_suffix(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn moment_trace(ts: &TimeSeries) -> Trace<'_> {
    Trace { t: &ts.times, n_a: &ts.n_a, n_b: &ts.n_b, re_cross: &ts.cross }
}

fn oracle_trace(run: &OracleRun) -> Trace<'_> {
    Trace { t: &run.times, n_a: &run.n_a, n_b: &run.n_b, re_cross: &run.re_cross }
}

/// Maxima of `n_a` at or above `PEAK_FLOOR` times the highest one, as
/// `(t, n_a)`.
pub fn peaks(ts: &TimeSeries) -> Vec<(f64, f64)> {
    peaks_of(&ts.times, &ts.n_a)
}

fn oracle_for(cfg: &RunConfig, times: &[f64]) -> Result<OracleRun, CliError> {
    let s = cfg.scenario()?;
    let ocfg = OracleConfig::new(cfg.truncation()?);
    let run = run_oracle(&s.params, &s.source, times, &ocfg)?;
    if !run.certified(LEAKAGE_THRESHOLD) {
        log::warn!(
            "truncation ({}, {}, {}) not certified: top-level populations {:.2e} / {:.2e}",
            ocfg.truncation.n_a_max,
            ocfg.truncation.n_b_max,
            ocfg.truncation.n_c_max,
            run.max_leakage[0],
            run.max_leakage[1]
        );
    }
    Ok(run)
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let s = cfg.scenario()?;
    let opts = cfg.options()?;
    let base = match &cfg.output.csv {
        Some(p) => Path::new(p).with_extension(""),
        None => cfg.out_dir().join(cfg.stem()),
    };
    let moment_csv = cfg.output.csv.as_ref().map(PathBuf::from).unwrap_or_else(|| with_suffix(&base, ".csv"));
    let oracle_csv = with_suffix(&base, ".oracle.csv");

    let ts = match cfg.solver.mode {
        Mode::Moments | Mode::Both => Some(run_scenario(&s, &opts)?),
        Mode::Oracle => None,
    };
    let times = match &ts {
        Some(ts) => ts.times.clone(),
        None => optocascade::ode::uniform_grid(0.0, s.t_end, s.samples),
    };
    let orc = match cfg.solver.mode {
        Mode::Oracle | Mode::Both => Some(oracle_for(cfg, &times)?),
        Mode::Moments => None,
    };

    if let Some(ts) = &ts {
        output::write(&moment_csv, &output::csv(&moment_trace(ts)))?;
        println!("csv: {}", moment_csv.display());
        if let Some((t, n)) = peaks(ts).first() {
            println!("first n_a peak: {} at t = {}", output::num(*n), output::num(*t));
        }
    }
    if let Some(run) = &orc {
        output::write(&oracle_csv, &output::csv(&oracle_trace(run)))?;
        println!("oracle csv: {}", oracle_csv.display());
        println!("certified: {}", run.certified(LEAKAGE_THRESHOLD));
    }
    if let (Some(ts), Some(run)) = (&ts, &orc) {
        let d = ts.n_a.iter().zip(&run.n_a).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        println!("max|Δn_a| = {}", output::num(d));
    }
    output::write(&with_suffix(&base, ".meta.toml"), &meta_text(cfg))?;

    if cfg.output.plot {
        let mut series = Vec::new();
        if let Some(ts) = &ts {
            series.push(Series { label: "n_a".into(), x: &ts.times, y: &ts.n_a });
            series.push(Series { label: "n_b".into(), x: &ts.times, y: &ts.n_b });
        }
        if let Some(run) = &orc {
            series.push(Series { label: "n_a (Fock)".into(), x: &run.times, y: &run.n_a });
            series.push(Series { label: "n_b (Fock)".into(), x: &run.times, y: &run.n_b });
        }
        output::write_plot(&with_suffix(&base, ".svg"), &s.name, &series);
    }
    Ok(())
}

fn real_or_null(z: optocascade::Complex64) -> serde_json::Value {
    if z.im == 0.0 {
        json!(z.re)
    } else {
        serde_json::Value::Null
    }
}

pub fn modes(cfg: &RunConfig) -> Result<(), CliError> {
    let p = cfg.scenario()?.params;
    let m = normal_mode_frequencies(&p)?;
    let rec = json!({
        "omega_plus": real_or_null(m.omega_plus),
        "omega_minus": real_or_null(m.omega_minus),
        "omega_plus_sq": m.omega_plus_sq,
        "omega_minus_sq": m.omega_minus_sq,
        "oscillatory": m.oscillatory,
        "strong_coupling": p.g > p.kappa,
    });
    println!("{rec}");
    Ok(())
}

pub fn steady_state(cfg: &RunConfig) -> Result<(), CliError> {
    let s = cfg.scenario()?;
    let c = moments::steady_state(&s.params, s.nbar_init)?;
    let pair = |z: optocascade::Complex64| json!([z.re, z.im]);
    let rec = json!({
        "nbar": s.nbar_init,
        "n_a": c.n_a(),
        "n_b": c.n_b(),
        "aa": pair(c.c[A][A]),
        "bb": pair(c.c[B][B]),
        "ab": pair(c.c[A][B]),
        "ad_b": pair(c.c[AD][B]),
    });
    println!("{rec}");
    Ok(())
}

pub fn oracle(cfg: &RunConfig) -> Result<(), CliError> {
    let s = cfg.scenario()?;
    let times = optocascade::ode::uniform_grid(0.0, s.t_end, s.samples);
    let tr = cfg.truncation()?;
    let run = oracle_for(cfg, &times)?;
    let path = cfg.out_dir().join(format!("{}.oracle.csv", cfg.stem()));
    output::write(&path, &output::csv(&oracle_trace(&run)))?;
    let rec = json!({
        "csv": path.display().to_string(),
        "truncation": [tr.n_a_max, tr.n_b_max, tr.n_c_max],
        "dimension": tr.dim(),
        "max_leakage": run.max_leakage,
        "certified": run.certified(LEAKAGE_THRESHOLD),
        "max_trace_drift": run.max_trace_drift,
        "max_hermiticity_defect": run.max_hermiticity_defect,
    });
    println!("{rec}");
    Ok(())
}

/// Parses `KEY=SPEC` into the key and its grid.
pub fn parse_axis(spec: &str) -> Result<(String, Vec<f64>), CliError> {
    let bad = |why: &str| CliError::Config(format!("malformed axis `{spec}`: {why}"));
    let (key, grid) = spec.split_once('=').ok_or_else(|| bad("expected KEY=VALUES"))?;
    let key = key.trim();
    let (_, bare) = config::locate(key)?;
    if !AXIS_KEYS.contains(&bare.as_str()) {
        return Err(bad("not a numeric parameter"));
    }
    let num = |s: &str| s.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad("not a number"));
    let parts: Vec<&str> = grid.split(':').collect();
    let values = match parts.as_slice() {
        [kind @ ("lin" | "log"), a, b, n] => {
            let (a, b) = (num(a)?, num(b)?);
            let n: usize = n.trim().parse().map_err(|_| bad("point count"))?;
            if n == 0 {
                return Err(bad("point count must be at least 1"));
            }
            if *kind == "log" && !(a > 0.0 && b > 0.0) {
                return Err(bad("log grid needs positive bounds"));
            }
            (0..n)
                .map(|i| {
                    let f = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                    if *kind == "lin" {
                        a + f * (b - a)
                    } else {
                        (a.ln() + f * (b.ln() - a.ln())).exp()
                    }
                })
                .collect()
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(bad("expected a list or lin:/log:START:STOP:N")),
    };
    if values.is_empty() {
        return Err(bad("empty grid"));
    }
    Ok((key.to_string(), values))
}

pub struct SweepRow {
    pub value: f64,
    pub peak_n_a: f64,
    pub revivals: usize,
    pub first_peak_t: f64,
    pub n_a0: f64,
    pub n_b0: f64,
}

pub fn sweep(inputs: &Inputs, axis: &str, jobs: Option<usize>, out: Option<&Path>) -> Result<(), CliError> {
    let (key, values) = parse_axis(axis)?;
    let configs = values
        .iter()
        .map(|v| inputs.load(&[format!("{key}={v:?}")]))
        .collect::<Result<Vec<_>, _>>()?;
    let point = |cfg: &RunConfig| -> Result<TimeSeries, CliError> { Ok(run_scenario(&cfg.scenario()?, &cfg.options()?)?) };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let series: Vec<Result<TimeSeries, CliError>> = pool.install(|| configs.par_iter().map(point).collect());

    let mut table = format!("{},peak_n_a,revivals,first_peak_t,n_a0,n_b0\n", key.rsplit('.').next().unwrap_or(&key));
    for (v, ts) in values.iter().zip(series) {
        let ts = ts?;
        let p = peaks(&ts);
        let row = SweepRow {
            value: *v,
            peak_n_a: p.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max),
            revivals: p.len().saturating_sub(1),
            first_peak_t: p.first().map_or(f64::NAN, |x| x.0),
            n_a0: ts.n_a[0],
            n_b0: ts.n_b[0],
        };
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            output::num(row.value),
            output::num(row.peak_n_a),
            row.revivals,
            output::num(row.first_peak_t),
            output::num(row.n_a0),
            output::num(row.n_b0)
        ));
    }
    match out {
        Some(p) => output::write(p, &table),
        None => {
            print!("{table}");
            Ok(())
        }
    }
}

pub fn reproduce(figure: &str, out_dir: Option<PathBuf>, plot: bool) -> Result<(), CliError> {
    let names = scenarios::figure_presets(figure)?;
    let mut runs = Vec::with_capacity(names.len());
    for name in names {
        let mut cfg = RunConfig::from_scenario(&scenarios::preset(name)?);
        cfg.output.dir = out_dir.as_ref().map(|d| d.to_string_lossy().into_owned());
        let ts = run_scenario(&cfg.scenario()?, &cfg.options()?)?;
        let base = cfg.out_dir().join(cfg.stem());
        output::write(&with_suffix(&base, ".csv"), &output::csv(&moment_trace(&ts)))?;
        output::write(&with_suffix(&base, ".meta.toml"), &meta_text(&cfg))?;

        let p = peaks(&ts);
        let list: Vec<String> = p.iter().map(|(t, n)| format!("{t:.3}:{n:.4}")).collect();
        let spectrum: Vec<String> = spectral_peaks(&ts.times, &ts.n_a, 0.05).iter().map(|(w, _)| format!("{w:.2}")).collect();
        println!("{name}: {} peaks of n_a (t:n_a) {}", p.len(), list.join(" "));
        println!("{name}: n_a spectral lines {}", spectrum.join(" "));
        if let Some((t, _)) = peaks_of(&ts.times, &ts.n_b).first() {
            println!("{name}: first n_b peak at t = {t:.3}");
        }
        runs.push((name, cfg, ts));
    }
    if plot {
        let series: Vec<Series<'_>> = runs
            .iter()
            .flat_map(|(name, _, ts)| {
                [
                    Series { label: format!("{name} n_a"), x: &ts.times[..], y: &ts.n_a[..] },
                    Series { label: format!("{name} n_b"), x: &ts.times[..], y: &ts.n_b[..] },
                ]
            })
            .collect();
        let dir = out_dir.unwrap_or_else(|| runs[0].1.out_dir());
        output::write_plot(&dir.join(format!("{figure}.svg")), figure, &series);
    }
    Ok(())
}

fn peaks_of(t: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    let top = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    local_maxima(y, 1).into_iter().filter(|&i| y[i] >= PEAK_FLOOR * top).map(|i| (t[i], y[i])).collect()
}

pub fn presets() -> Result<(), CliError> {
    for (fig, names) in scenarios::FIGURES {
        println!("{fig}: {}", names.join(" "));
    }
    for s in scenarios::registry() {
        println!("{}  g={} nbar={} rwa={} source={:?}", s.name, s.params.g, s.params.nbar, s.params.rwa, s.source);
    }
    Ok(())
}
