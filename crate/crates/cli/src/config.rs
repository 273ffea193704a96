//! Run configuration: a TOML document with `[params] [source] [solver]
//! [output]` sections, layered as preset < file < `KEY=VALUE` overrides.

use std::path::{Path, PathBuf};

use optocascade::moments::SourceSpec;
use optocascade::oracle::{source_cutoff, TruncationSpec};
use optocascade::scenarios::{self, Scenario, DEFAULT_SAMPLES, DEFAULT_T_END};
use optocascade::{Complex64, IntegrateOptions, SimParams, StepMode};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::CliError;

pub const OUT_DIR_ENV: &str = "OPTOCASCADE_OUT";

const TOP_KEYS: &[&str] = &["name"];
const SECTIONS: &[(&str, &[&str])] = &[
    ("params", &["kappa", "gamma", "mu", "nbar", "omega_m", "delta", "g", "rwa", "nbar_init"]),
    ("source", &["kind", "n", "beta_re", "beta_im"]),
    (
        "solver",
        &["rel_tol", "abs_tol", "step", "max_steps", "t_end", "samples", "mode", "n_a_max", "n_b_max", "n_c_max"],
    ),
    ("output", &["dir", "stem", "plot", "csv"]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Moments,
    Oracle,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    #[default]
    Fock,
    Coherent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    pub kappa: f64,
    pub gamma: f64,
    pub mu: f64,
    pub nbar: f64,
    pub omega_m: f64,
    pub delta: f64,
    pub g: f64,
    #[serde(default)]
    pub rwa: bool,
    /// Bath occupation for the initial state; `nbar` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar_init: Option<f64>,
}

impl Default for ParamsSection {
    fn default() -> Self {
        ParamsSection::from_params(&SimParams::reference(1.5), None)
    }
}

impl ParamsSection {
    fn from_params(p: &SimParams, nbar_init: Option<f64>) -> Self {
        ParamsSection {
            kappa: p.kappa,
            gamma: p.gamma,
            mu: p.mu,
            nbar: p.nbar,
            omega_m: p.omega_m,
            delta: p.delta,
            g: p.g,
            rwa: p.rwa,
            nbar_init,
        }
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            kappa: self.kappa,
            gamma: self.gamma,
            mu: self.mu,
            nbar: self.nbar,
            omega_m: self.omega_m,
            delta: self.delta,
            g: self.g,
            rwa: self.rwa,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSection {
    #[serde(default)]
    pub kind: SourceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_im: Option<f64>,
}

impl Default for SourceSection {
    fn default() -> Self {
        SourceSection {
            kind: SourceKind::Fock,
            n: None,
            beta_re: None,
            beta_im: None,
        }
    }
}

impl SourceSection {
    fn from_spec(s: &SourceSpec) -> Self {
        match s {
            SourceSpec::Fock { n } => SourceSection {
                kind: SourceKind::Fock,
                n: Some(*n),
                beta_re: None,
                beta_im: None,
            },
            SourceSpec::Coherent { beta } => SourceSection {
                kind: SourceKind::Coherent,
                n: None,
                beta_re: Some(beta.re),
                beta_im: Some(beta.im),
            },
        }
    }

    pub fn spec(&self) -> Result<SourceSpec, CliError> {
        match self.kind {
            SourceKind::Fock => {
                if self.beta_re.is_some() || self.beta_im.is_some() {
                    return Err(CliError::Config("a Fock source takes `n`, not `beta_re`/`beta_im`".into()));
                }
                Ok(SourceSpec::Fock { n: self.n.unwrap_or(1) })
            }
            SourceKind::Coherent => {
                if self.n.is_some() {
                    return Err(CliError::Config("a coherent source takes `beta_re`/`beta_im`, not `n`".into()));
                }
                Ok(SourceSpec::Coherent {
                    beta: Complex64::new(self.beta_re.unwrap_or(0.0), self.beta_im.unwrap_or(0.0)),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Fixed step size; adaptive stepping when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    pub max_steps: u64,
    pub t_end: f64,
    pub samples: usize,
    #[serde(default)]
    pub mode: Mode,
    pub n_a_max: usize,
    pub n_b_max: usize,
    /// Source cutoff; chosen from the source state when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_c_max: Option<usize>,
}

impl Default for SolverSection {
    fn default() -> Self {
        let o = IntegrateOptions::default();
        SolverSection {
            rel_tol: o.rel_tol,
            abs_tol: o.abs_tol,
            step: None,
            max_steps: o.max_steps as u64,
            t_end: DEFAULT_T_END,
            samples: DEFAULT_SAMPLES,
            mode: Mode::Moments,
            n_a_max: 7,
            n_b_max: 7,
            n_c_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory; `$OPTOCASCADE_OUT` or the working directory when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// File stem; the run name when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
    #[serde(default = "yes")]
    pub plot: bool,
    /// Explicit CSV path for the moment trace.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

fn yes() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: None,
            stem: None,
            plot: true,
            csv: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub source: SourceSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_scenario(s: &Scenario) -> Self {
        let nbar_init = (s.nbar_init != s.params.nbar).then_some(s.nbar_init);
        RunConfig {
            name: Some(s.name.clone()),
            params: ParamsSection::from_params(&s.params, nbar_init),
            source: SourceSection::from_spec(&s.source),
            solver: SolverSection {
                t_end: s.t_end,
                samples: s.samples,
                ..SolverSection::default()
            },
            output: OutputSection::default(),
        }
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or("run")
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let params = self.params.sim_params();
        let s = Scenario {
            name: self.name().to_string(),
            params,
            source: self.source.spec()?,
            nbar_init: self.params.nbar_init.unwrap_or(params.nbar),
            t_end: self.solver.t_end,
            samples: self.solver.samples,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn options(&self) -> Result<IntegrateOptions, CliError> {
        let o = IntegrateOptions {
            rel_tol: self.solver.rel_tol,
            abs_tol: self.solver.abs_tol,
            mode: match self.solver.step {
                Some(h) => StepMode::Fixed(h),
                None => StepMode::Adaptive,
            },
            max_steps: usize::try_from(self.solver.max_steps)
                .map_err(|_| CliError::Config("max_steps out of range".into()))?,
        };
        o.validate()?;
        Ok(o)
    }

    pub fn truncation(&self) -> Result<TruncationSpec, CliError> {
        let source = self.source.spec()?;
        let tr = TruncationSpec::new(
            self.solver.n_a_max,
            self.solver.n_b_max,
            self.solver.n_c_max.unwrap_or_else(|| source_cutoff(&source)),
        );
        tr.validate()?;
        Ok(tr)
    }

    /// Checks everything a run needs, without running it.
    pub fn validate(&self) -> Result<(), CliError> {
        self.scenario()?;
        self.options()?;
        if self.solver.mode != Mode::Moments {
            self.truncation()?;
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        match &self.output.dir {
            Some(d) => PathBuf::from(d),
            None => std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
        }
    }

    pub fn stem(&self) -> String {
        self.output.stem.clone().unwrap_or_else(|| self.name().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

/// Layered loader.
#[derive(Debug, Default)]
pub struct Layers<'a> {
    pub preset: Option<&'a str>,
    pub file: Option<&'a Path>,
    pub overrides: &'a [String],
}

pub fn load(layers: &Layers<'_>) -> Result<RunConfig, CliError> {
    let mut table = match layers.preset {
        Some(name) => to_table(&RunConfig::from_scenario(&scenarios::preset(name)?)),
        None => Table::new(),
    };
    if let Some(path) = layers.file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let file: Table = text
            .parse()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        check_keys(&file)?;
        let kind = |t: &Table| t.get("source").and_then(|s| s.get("kind")).cloned();
        if kind(&file).is_some() && kind(&file) != kind(&table) {
            table.remove("source");
        }
        merge(&mut table, file);
    }
    for o in layers.overrides {
        apply_override(&mut table, o)?;
    }
    from_table(table)
}

#[cfg(test)]
fn parse_str(text: &str) -> Result<RunConfig, CliError> {
    let table: Table = text.parse().map_err(|e| CliError::Config(format!("{e}")))?;
    check_keys(&table)?;
    from_table(table)
}

fn to_table(cfg: &RunConfig) -> Table {
    cfg.to_toml().parse().expect("own serialization parses")
}

fn from_table(table: Table) -> Result<RunConfig, CliError> {
    check_keys(&table)?;
    let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn check_keys(t: &Table) -> Result<(), CliError> {
    for (k, v) in t {
        if TOP_KEYS.contains(&k.as_str()) {
            continue;
        }
        let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| s == k) else {
            return Err(unknown(k));
        };
        let Value::Table(inner) = v else {
            return Err(CliError::Config(format!("`{k}` must be a section")));
        };
        if let Some(bad) = inner.keys().find(|ik| !keys.contains(&ik.as_str())) {
            return Err(unknown(bad));
        }
    }
    Ok(())
}

fn unknown(key: &str) -> CliError {
    CliError::Config(format!("unknown key `{key}`"))
}

/// Resolves `key` or `section.key` to its section.
pub fn locate(key: &str) -> Result<(Option<&'static str>, String), CliError> {
    if let Some((section, k)) = key.split_once('.') {
        let found = SECTIONS.iter().find(|(s, keys)| *s == section && keys.contains(&k));
        return found.map(|(s, _)| (Some(*s), k.to_string())).ok_or_else(|| unknown(key));
    }
    if TOP_KEYS.contains(&key) {
        return Ok((None, key.to_string()));
    }
    SECTIONS
        .iter()
        .find(|(_, keys)| keys.contains(&key))
        .map(|(s, _)| (Some(*s), key.to_string()))
        .ok_or_else(|| unknown(key))
}

pub fn apply_override(table: &mut Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not KEY=VALUE")))?;
    let (section, key) = locate(key.trim())?;
    let value = parse_value(raw.trim());
    let switches_source = section == Some("source") && key == "kind";
    let slot = match section {
        None => table,
        Some(s) => match table.entry(s).or_insert_with(|| Value::Table(Table::new())) {
            Value::Table(t) => t,
            _ => return Err(CliError::Config(format!("`{s}` must be a section"))),
        },
    };
    if switches_source && slot.get("kind") != Some(&value) {
        for k in ["n", "beta_re", "beta_im"] {
            slot.remove(k);
        }
    }
    slot.insert(key, value);
    Ok(())
}

fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}
