//! Experiment dispatch and report emission.

use std::path::{Path, PathBuf};
use std::time::Instant;

use conedbar::bundle::BundleOptions;
use conedbar::obstruction::{obstruction_table, resolution_cohomology, rr_dims, CurveSpec, Dim, ObstructionTable};
use conedbar::report::{csv_table, fmt12, text_table, to_json, write_file};
use serde::Serialize;
use serde_json::{json, Value};

use crate::checks::{self, grid_label, Check, ConeRun, ConeStudy};
use crate::config::{Experiment, ExperimentConfig, Format};

/// One measured step of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage {
    pub name: String,
    pub grid: String,
    pub metrics: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A refinement level of a convergence study. `order` is the `log2` ratio
/// of the previous value to this one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub grid: String,
    pub h: f64,
    pub quantity: String,
    pub value: f64,
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub experiment: Experiment,
    pub config: Value,
    pub stages: Vec<Stage>,
    pub convergence: Vec<ConvergenceRow>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<ObstructionTable>,
    /// Wall-clock seconds per stage; kept out of the serialized report so
    /// that output is reproducible.
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
}

impl RunReport {
    fn new(config: &ExperimentConfig) -> Self {
        Self {
            experiment: config.experiment,
            config: config.echo(),
            stages: Vec::new(),
            convergence: Vec::new(),
            checks: Vec::new(),
            table: None,
            timings: Vec::new(),
        }
    }

    pub fn failed_stages(&self) -> impl Iterator<Item = &Stage> {
        self.stages.iter().filter(|s| s.error.is_some())
    }

    /// True when every check passed and no stage failed.
    pub fn passed(&self) -> bool {
        self.failed_stages().next().is_none() && self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    /// Runs `f` as a stage, recording its metrics or its error.
    fn stage<T, F>(&mut self, name: &str, grid: &str, f: F) -> Option<T>
    where
        T: Serialize,
        F: FnOnce() -> conedbar::Result<T>,
    {
        let start = Instant::now();
        let out = f();
        self.timings.push((format!("{name} [{grid}]"), start.elapsed().as_secs_f64()));
        let (metrics, error, value) = match out {
            Ok(v) => (serde_json::to_value(&v).unwrap_or(Value::Null), None, Some(v)),
            Err(e) => (Value::Null, Some(e.to_string()), None),
        };
        self.stages.push(Stage { name: name.into(), grid: grid.into(), metrics, error });
        value
    }

    fn convergence(&mut self, quantity: &str, levels: &[(f64, f64)]) {
        for (i, &(h, v)) in levels.iter().enumerate() {
            let order = (i > 0).then(|| (levels[i - 1].1 / v).log2());
            self.convergence.push(ConvergenceRow {
                level: i,
                grid: grid_label(h),
                h,
                quantity: quantity.into(),
                value: v,
                order,
            });
        }
    }
}

fn bundle_options(c: &ExperimentConfig, h: f64) -> BundleOptions<f64> {
    BundleOptions {
        base_h: h,
        fiber_rings: c.fiber_rings,
        contour_points: c.n_theta,
        obstruction_tol: c.tolerances.obstruction,
        tail_tol: c.tolerances.tail,
        holomorphy_tol: c.tolerances.holomorphy,
        ..Default::default()
    }
}

/// Deterministic given the config and its seeds.
pub fn run_experiment(config: &ExperimentConfig) -> RunReport {
    let mut report = RunReport::new(config);
    match config.experiment {
        Experiment::ObstructionTable => run_table(config, &mut report),
        Experiment::SolveCp1 => run_cp1(config, &mut report),
        Experiment::SolveBundle => run_bundle(config, &mut report),
        Experiment::SolveConeL2 => run_cone(config, false, &mut report),
        Experiment::SolveConeBounded => run_cone(config, true, &mut report),
        Experiment::VerifySuite => run_verify(config, &mut report),
    }
    report
}

fn run_table(c: &ExperimentConfig, report: &mut RunReport) {
    let curve = CurveSpec::new(c.genus, c.degree);
    let table = obstruction_table(&curve, c.k, 1, -c.mu_max..=c.mu_max);
    let mismatched = table
        .rows
        .iter()
        .filter(|r| {
            let tr = if r.mu == 0 { conedbar::obstruction::Triviality::Trivial } else { conedbar::obstruction::Triviality::NonTrivial };
            (r.h0, r.h1) != rr_dims(c.genus, r.deg, tr)
        })
        .count();
    report.checks.push(Check::equal("table rows match rr_dims", "exact", mismatched as f64, 0.0));
    report.checks.push(Check::equal(
        "Riemann-Roch on determinate rows",
        "exact",
        f64::from(u8::from(!table.riemann_roch_holds())),
        0.0,
    ));
    if c.genus <= 1 {
        let h1 = match resolution_cohomology(&curve) {
            Dim::Exact(n) => n as f64,
            Dim::Indeterminate => f64::NAN,
        };
        report.checks.push(Check::equal("h1(M, O_M) equals the genus", "exact", h1, f64::from(c.genus)));
    }
    report.table = Some(table);
}

fn run_cp1(c: &ExperimentConfig, report: &mut RunReport) {
    let seed = c.seeds[0];
    let mut levels = Vec::new();
    for (_, h) in c.grids() {
        if let Some(l) = report.stage("cp1 solve", &grid_label(h), || checks::cp1_level(c.m, seed, c.p, h)) {
            levels.push(l);
        }
    }
    report.convergence("residual", &levels.iter().map(|l| (l.h, l.residual)).collect::<Vec<_>>());
    report.checks.extend(checks::operator_s(&levels, c.tolerances.seam));
}

#[derive(Serialize)]
struct BundleLevel {
    h: f64,
    monomial_error: f64,
    residual: f64,
}

fn run_bundle(c: &ExperimentConfig, report: &mut RunReport) {
    let seed = c.seeds[0];
    let mut levels = Vec::new();
    for (_, h) in c.grids() {
        let g = grid_label(h);
        let r = report.stage("bundle expansion and solve", &g, || {
            let monomial_error = checks::monomial_recovery(c.k, c.n_theta, h)?;
            let form = checks::manufactured_bundle_form(c.degree, c.k, c.k + 2, seed)?;
            let sol = conedbar::bundle::solve_dbar_k(form.clone(), c.k, c.mu_max, &bundle_options(c, h))?;
            let probes = conedbar::bundle::bundle_probes(form.as_ref(), 40);
            let residual = conedbar::bundle::bundle_residual(&sol.eta, form.as_ref(), &probes, 1e-5);
            Ok(BundleLevel { h, monomial_error, residual })
        });
        if let Some(l) = r {
            report.checks.push(Check::at_most("monomial coefficient error", &g, l.monomial_error, 1e-10));
            levels.push(l);
        }
    }
    report.convergence("residual", &levels.iter().map(|l| (l.h, l.residual)).collect::<Vec<_>>());
    if let Some(l) = levels.last() {
        report.checks.push(Check::at_most("manufactured round-trip residual", &grid_label(l.h), l.residual, c.tolerances.residual));
    }
    if c.degree == 2 && c.k <= -1 {
        let h = c.grids().last().map(|g| g.1).unwrap_or(1.0 / 32.0);
        let r = report.stage("cocycle obstruction", &grid_label(h), || {
            checks::cocycle_obstruction(h).map(|(v, d)| json!({"value": [v.re, v.im], "distance_from_residue": d}))
        });
        if let Some(d) = r.and_then(|v| v["distance_from_residue"].as_f64()) {
            report.checks.push(Check::at_most("cocycle obstruction vs annulus residue", &grid_label(h), d, c.tolerances.obstruction));
        }
    }
}

fn run_cone(c: &ExperimentConfig, bounded: bool, report: &mut RunReport) {
    let study = ConeStudy {
        e: c.degree,
        eps: c.epsilon,
        kind: c.form_kind(),
        bundle: bundle_options(c, 1.0 / c.n_r as f64),
        mu_max: c.mu_max,
        holder_pairs: c.holder_pairs,
        bounded,
    };
    let name = if bounded { "cone bounded solve" } else { "cone L2 solve" };
    let mut runs: Vec<ConeRun> = Vec::new();
    for &seed in &c.seeds {
        for (_, h) in c.grids() {
            let g = format!("{},rings={}", grid_label(h), c.fiber_rings);
            if let Some(r) = report.stage(&format!("{name} seed={seed}"), &g, || checks::cone_run(&study, seed, h)) {
                runs.push(r);
            }
        }
    }
    let worst: Vec<(f64, f64)> = c
        .grids()
        .iter()
        .map(|&(_, h)| (h, runs.iter().filter(|r| r.h == h).map(|r| r.weak_residual).fold(0.0, f64::max)))
        .collect();
    report.convergence("weak_residual", &worst);
    if bounded {
        report.checks.extend(checks::cone_bounded_checks(&runs, c.tolerances.weak));
    } else {
        report.checks.extend(checks::cone_l2_checks(&runs, c.tolerances.weak, c.tolerances.obstruction));
        report.checks.push(checks::norm_transfer(c.degree));
    }
}

fn run_verify(c: &ExperimentConfig, report: &mut RunReport) {
    let h = 1.0 / c.n_r as f64;
    let start = Instant::now();
    report.checks.extend(checks::obstruction_tables());
    report.checks.extend(checks::resolution_sums());
    report.checks.push(checks::norm_transfer(c.degree));
    report.checks.extend(checks::invariants(h));
    report.timings.push(("verify suite".into(), start.elapsed().as_secs_f64()));
}

fn yes_no(b: bool) -> String {
    if b { "pass" } else { "fail" }.to_string()
}

fn opt12(x: Option<f64>) -> String {
    x.map(fmt12).unwrap_or_default()
}

fn convergence_rows(report: &RunReport) -> Vec<Vec<String>> {
    report
        .convergence
        .iter()
        .map(|r| vec![r.level.to_string(), r.grid.clone(), fmt12(r.h), r.quantity.clone(), fmt12(r.value), opt12(r.order)])
        .collect()
}

const CONVERGENCE_HEADER: [&str; 6] = ["level", "grid", "h", "quantity", "value", "order"];
const CHECK_HEADER: [&str; 6] = ["name", "grid", "value", "relation", "threshold", "result"];

fn check_rows(report: &RunReport) -> Vec<Vec<String>> {
    report
        .checks
        .iter()
        .map(|c| {
            let rel = serde_json::to_value(c.relation).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            vec![c.name.clone(), c.grid.clone(), fmt12(c.value), rel, fmt12(c.threshold), yes_no(c.passed)]
        })
        .collect()
}

/// Writes the report into `dir` and returns the files written.
///
/// `json`: `report.json`. `csv`: `convergence.csv`, `checks.csv` and, for
/// tables, `table.csv`. `text`: `report.txt`.
pub fn emit_report(report: &RunReport, format: Format, dir: &Path) -> conedbar::Result<Vec<PathBuf>> {
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    match format {
        Format::Json => {
            let v = serde_json::to_value(report).expect("report serializes");
            files.push((dir.join("report.json"), to_json(&v)));
        }
        Format::Csv => {
            files.push((dir.join("convergence.csv"), csv_table(&CONVERGENCE_HEADER, &convergence_rows(report))));
            files.push((dir.join("checks.csv"), csv_table(&CHECK_HEADER, &check_rows(report))));
            if let Some(t) = &report.table {
                let rows: Vec<Vec<String>> =
                    t.rows.iter().map(|r| vec![r.mu.to_string(), r.deg.to_string(), r.h0.to_string(), r.h1.to_string()]).collect();
                files.push((dir.join("table.csv"), csv_table(&["mu", "deg", "h0", "h1"], &rows)));
            }
        }
        Format::Text => {
            let mut out = format!("experiment {}\n\n", report.experiment);
            if let Some(t) = &report.table {
                out.push_str(&t.to_text());
                out.push('\n');
            }
            for s in report.failed_stages() {
                out.push_str(&format!("stage failed: {} [{}]: {}\n", s.name, s.grid, s.error.as_deref().unwrap_or("")));
            }
            if !report.convergence.is_empty() {
                out.push_str(&text_table(&CONVERGENCE_HEADER, &convergence_rows(report)));
                out.push('\n');
            }
            for c in &report.checks {
                out.push_str(&c.line());
                out.push('\n');
            }
            files.push((dir.join("report.txt"), out));
        }
    }
    for (path, contents) in &files {
        write_file(path, contents)?;
    }
    Ok(files.into_iter().map(|f| f.0).collect())
}
