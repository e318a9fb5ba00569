//! One line per acceptance check, then a summary line per criterion with
//! its time budget. Exits nonzero if anything fails.

use std::time::{Duration, Instant};

use conedbar::bundle::BundleOptions;
use conedbar::cone::TestFormKind;
use conedbar_cli::checks::{self, Check, ConeRun, ConeStudy};

fn criterion(id: u32, title: &str, budget: Duration, f: impl FnOnce() -> Vec<Check>) -> bool {
    let start = Instant::now();
    let results = f();
    let elapsed = start.elapsed();
    for c in &results {
        println!("[{id}] {}", c.line());
    }
    let in_time = elapsed <= budget;
    let ok = !results.is_empty() && results.iter().all(|c| c.passed) && in_time;
    println!(
        "criterion {id} {}: {title} ({} checks, {:.1}s of {}s budget)",
        if ok { "PASS" } else { "FAIL" },
        results.len(),
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    ok
}

fn cone_runs(study: ConeStudy, seeds: &[u64], grids: &[f64]) -> Result<Vec<ConeRun>, Check> {
    let mut runs = Vec::new();
    for &seed in seeds {
        for &h in grids {
            let r = checks::cone_run(&study, seed, h).map_err(|e| {
                Check::failed(&format!("cone solve e={} seed={seed}", study.e), &checks::grid_label(h), e)
            })?;
            runs.push(r);
        }
    }
    Ok(runs)
}

fn main() {
    let secs = Duration::from_secs;
    let mut ok = true;
    ok &= criterion(1, "obstruction tables", secs(1), checks::obstruction_tables);
    ok &= criterion(2, "Cech oracle agreement", secs(60), || checks::cech_agreement(1.0 / 32.0));
    ok &= criterion(3, "resolution cohomology sums", secs(1), checks::resolution_sums);
    ok &= criterion(4, "operator S on CP^1", secs(300), || {
        let mut levels = Vec::new();
        for h in [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0] {
            match checks::cp1_level(1, 3, 4.0, h) {
                Ok(l) => levels.push(l),
                Err(e) => return vec![Check::failed("CP1 solve", &checks::grid_label(h), e)],
            }
        }
        checks::operator_s(&levels, 1e-4)
    });
    ok &= criterion(5, "fiber expansion", secs(300), || checks::expansion(-1, 64, 1.0 / 16.0, 1.0 / 64.0, 1.0 / 32.0));
    ok &= criterion(6, "cone L2 pipeline", secs(600), || {
        let mut out = Vec::new();
        for e in [1, 2] {
            let study = ConeStudy {
                e,
                eps: 1.0,
                kind: TestFormKind::ExactSmooth,
                bundle: BundleOptions { fiber_rings: 16, ..Default::default() },
                mu_max: 8,
                holder_pairs: 400,
                bounded: false,
            };
            match cone_runs(study, &[0, 1, 2, 3, 4], &[1.0 / 16.0, 1.0 / 32.0]) {
                Ok(runs) => out.extend(checks::cone_l2_checks(&runs, 1e-2, 1e-4)),
                Err(c) => out.push(c),
            }
            out.push(checks::norm_transfer(e));
        }
        out
    });
    ok &= criterion(7, "cone bounded pipeline", secs(600), || {
        let study = ConeStudy {
            e: 2,
            eps: 1.0,
            kind: TestFormKind::BoundedRandom,
            bundle: BundleOptions { fiber_rings: 16, ..Default::default() },
            mu_max: 8,
            holder_pairs: 10_000,
            bounded: true,
        };
        match cone_runs(study, &[3, 4], &[1.0 / 16.0, 1.0 / 32.0]) {
            Ok(runs) => checks::cone_bounded_checks(&runs, 1e-2),
            Err(c) => vec![c],
        }
    });
    ok &= criterion(8, "invariant suite", secs(600), || checks::invariants(1.0 / 16.0));
    if !ok {
        std::process::exit(1);
    }
}
