//! TOML experiment configuration.
//!
//! ```toml
//! experiment = "solve-cone-l2"
//! seeds = [0, 1, 2]
//!
//! [cone]
//! degree = 2
//!
//! [grid]
//! n_r = 16
//! refine = 2
//! ```
//!
//! Every violation is collected before failing; unknown keys are errors.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use conedbar::cone::TestFormKind;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ObstructionTable,
    SolveCp1,
    SolveBundle,
    SolveConeL2,
    SolveConeBounded,
    VerifySuite,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::ObstructionTable,
        Experiment::SolveCp1,
        Experiment::SolveBundle,
        Experiment::SolveConeL2,
        Experiment::SolveConeBounded,
        Experiment::VerifySuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::ObstructionTable => "obstruction-table",
            Experiment::SolveCp1 => "solve-cp1",
            Experiment::SolveBundle => "solve-bundle",
            Experiment::SolveConeL2 => "solve-cone-l2",
            Experiment::SolveConeBounded => "solve-cone-bounded",
            Experiment::VerifySuite => "verify-suite",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|e| e.name()).collect();
            format!("unknown experiment `{s}` (expected one of {})", names.join(", "))
        })
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            _ => Err(format!("unknown format `{s}` (expected json, csv or text)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    /// Strong residual threshold for CP^1 and bundle solves.
    pub residual: f64,
    /// Relative weak residual threshold for cone solves.
    pub weak: f64,
    pub obstruction: f64,
    pub tail: f64,
    pub holomorphy: f64,
    /// Weak residual threshold across the CP^1 chart seam.
    pub seam: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { residual: 1e-3, weak: 1e-2, obstruction: 1e-4, tail: 1e-3, holomorphy: 1e-5, seam: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Cone degree `e`.
    pub degree: u32,
    pub genus: u32,
    pub epsilon: f64,
    pub form: String,
    /// Point pairs for the Hölder quotient.
    pub holder_pairs: usize,
    /// Base rings per unit radius on the coarsest grid, so `h = 1/n_r`.
    pub n_r: usize,
    /// Contour points for fiber coefficient extraction.
    pub n_theta: usize,
    pub fiber_rings: usize,
    pub refine: usize,
    pub mu_max: i64,
    /// Weight `k` of the bundle solve and the obstruction table.
    pub k: i64,
    /// Bundle degree of the CP^1 manufactured input.
    pub m: i64,
    /// Integrability exponent of the CP^1 rough input.
    pub p: f64,
    pub seeds: Vec<u64>,
    pub tolerances: Tolerances,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            degree: 2,
            genus: 0,
            epsilon: 1.0,
            form: "exact_smooth".into(),
            holder_pairs: 400,
            n_r: 16,
            n_theta: 64,
            fiber_rings: 16,
            refine: 1,
            mu_max: 8,
            k: 0,
            m: 1,
            p: 4.0,
            seeds: vec![0],
            tolerances: Tolerances::default(),
            out: PathBuf::from("out"),
        }
    }

    /// `(level, h)` for each nested grid, coarsest first.
    pub fn grids(&self) -> Vec<(usize, f64)> {
        (0..self.refine).map(|l| (l, 1.0 / (self.n_r << l) as f64)).collect()
    }

    pub fn form_kind(&self) -> TestFormKind {
        self.form.parse().expect("validated")
    }

    pub fn echo(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// All violations of the invariants, one message per key.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                v.push(msg);
            }
        };
        need(self.degree >= 1, "cone.degree: must be at least 1".into());
        need(self.epsilon > 0.0 && self.epsilon.is_finite(), "cone.epsilon: must be positive".into());
        need(self.form.parse::<TestFormKind>().is_ok(), format!("cone.form: unknown test form `{}`", self.form));
        need(self.n_r >= 4, "grid.n_r: must be at least 4".into());
        need(self.n_theta >= 8 && self.n_theta % 2 == 0, "grid.n_theta: must be even and at least 8".into());
        need(self.fiber_rings >= 4, "grid.fiber_rings: must be at least 4".into());
        need(self.refine >= 1, "grid.refine: must be at least 1".into());
        need(self.mu_max >= self.k, "series.mu_max: must not be below series.k".into());
        need(self.p > 2.0 && self.p.is_finite(), "cp1.p: must exceed 2".into());
        need(!self.seeds.is_empty(), "seeds: must not be empty".into());
        let t = &self.tolerances;
        for (key, x) in [
            ("residual", t.residual),
            ("weak", t.weak),
            ("obstruction", t.obstruction),
            ("tail", t.tail),
            ("holomorphy", t.holomorphy),
            ("seam", t.seam),
        ] {
            need(x > 0.0 && x.is_finite(), format!("tolerances.{key}: must be positive"));
        }
        v
    }
}

/// Reads `value` into `slot`, or records why it could not.
fn take<T: DeserializeOwned>(value: &toml::Value, key: &str, slot: &mut T, errors: &mut Vec<String>) {
    match value.clone().try_into::<T>() {
        Ok(x) => *slot = x,
        Err(e) => errors.push(format!("{key}: {}", e.to_string().trim())),
    }
}

/// Parses and validates a TOML config. On failure returns every problem
/// found: syntax, unknown keys, wrong types and invariant violations.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<String>> {
    parse_config_with(text, None)
}

/// As [`parse_config`], with `fallback` used when `experiment` is absent.
pub fn parse_config_with(text: &str, fallback: Option<Experiment>) -> Result<ExperimentConfig, Vec<String>> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| vec![e.to_string().trim().to_string()])?;
    let mut errors = Vec::new();
    let experiment = match table.get("experiment") {
        Some(toml::Value::String(s)) => match s.parse::<Experiment>() {
            Ok(e) => Some(e),
            Err(msg) => {
                errors.push(format!("experiment: {msg}"));
                None
            }
        },
        Some(_) => {
            errors.push("experiment: expected a string".into());
            None
        }
        None if fallback.is_some() => fallback,
        None => {
            errors.push("experiment: missing".into());
            None
        }
    };
    let mut c = ExperimentConfig::new(experiment.unwrap_or(Experiment::VerifySuite));
    for (key, value) in &table {
        match key.as_str() {
            "experiment" => {}
            "seeds" => take(value, key, &mut c.seeds, &mut errors),
            "out" => take(value, key, &mut c.out, &mut errors),
            "cone" | "grid" | "series" | "cp1" | "tolerances" => {
                let Some(section) = value.as_table() else {
                    errors.push(format!("{key}: expected a table"));
                    continue;
                };
                for (sub, v) in section {
                    let name = format!("{key}.{sub}");
                    let t = &mut c.tolerances;
                    match (key.as_str(), sub.as_str()) {
                        ("cone", "degree") => take(v, &name, &mut c.degree, &mut errors),
                        ("cone", "genus") => take(v, &name, &mut c.genus, &mut errors),
                        ("cone", "epsilon") => take(v, &name, &mut c.epsilon, &mut errors),
                        ("cone", "form") => take(v, &name, &mut c.form, &mut errors),
                        ("cone", "holder_pairs") => take(v, &name, &mut c.holder_pairs, &mut errors),
                        ("grid", "n_r") => take(v, &name, &mut c.n_r, &mut errors),
                        ("grid", "n_theta") => take(v, &name, &mut c.n_theta, &mut errors),
                        ("grid", "fiber_rings") => take(v, &name, &mut c.fiber_rings, &mut errors),
                        ("grid", "refine") => take(v, &name, &mut c.refine, &mut errors),
                        ("series", "mu_max") => take(v, &name, &mut c.mu_max, &mut errors),
                        ("series", "k") => take(v, &name, &mut c.k, &mut errors),
                        ("cp1", "m") => take(v, &name, &mut c.m, &mut errors),
                        ("cp1", "p") => take(v, &name, &mut c.p, &mut errors),
                        ("tolerances", "residual") => take(v, &name, &mut t.residual, &mut errors),
                        ("tolerances", "weak") => take(v, &name, &mut t.weak, &mut errors),
                        ("tolerances", "obstruction") => take(v, &name, &mut t.obstruction, &mut errors),
                        ("tolerances", "tail") => take(v, &name, &mut t.tail, &mut errors),
                        ("tolerances", "holomorphy") => take(v, &name, &mut t.holomorphy, &mut errors),
                        ("tolerances", "seam") => take(v, &name, &mut t.seam, &mut errors),
                        _ => errors.push(format!("{name}: unknown key")),
                    }
                }
            }
            _ => errors.push(format!("{key}: unknown key")),
        }
    }
    errors.extend(c.violations());
    if errors.is_empty() {
        Ok(c)
    } else {
        Err(errors)
    }
}
