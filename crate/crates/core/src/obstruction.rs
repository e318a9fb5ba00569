//! Exact line-bundle cohomology on compact curves and the obstruction
//! tables built from it.
//!
//! The exceptional curve `X` of the blown-up cone has normal bundle `N` of
//! degree `-e`, so `N^{-mu}` has degree `e*mu`. Everything here is integer
//! arithmetic; a dimension that Riemann–Roch cannot pin down is reported as
//! [`Dim::Indeterminate`] rather than guessed.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A cohomology dimension, or the admission that it depends on more than
/// genus and degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dim {
    Exact(u64),
    Indeterminate,
}

impl Dim {
    pub fn exact(self) -> Option<u64> {
        match self {
            Dim::Exact(n) => Some(n),
            Dim::Indeterminate => None,
        }
    }

    pub fn is_zero(self) -> Option<bool> {
        self.exact().map(|n| n == 0)
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dim::Exact(n) => write!(f, "{n}"),
            Dim::Indeterminate => f.write_str("?"),
        }
    }
}

/// Whether a degree-0 bundle on a genus-1 curve is the trivial class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Triviality {
    Trivial,
    NonTrivial,
}

/// The exceptional curve and the degree of its embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub genus: u32,
    /// `deg N = -e`.
    pub e: u32,
    /// Overrides the default triviality rule for degree-0 rows on genus 1.
    pub triviality_hint: Option<Triviality>,
}

impl CurveSpec {
    pub fn new(genus: u32, e: u32) -> Self {
        Self { genus, e, triviality_hint: None }
    }

    /// Exact mode covers genus 0 and 1; higher genus answers are partial.
    pub fn is_exact_mode(&self) -> bool {
        self.genus <= 1
    }

    /// Degree of `N^{-mu}`.
    pub fn degree_of_row(&self, mu: i64) -> i64 {
        i64::from(self.e) * mu
    }

    /// Triviality used for the degree-0 row at index `mu`: `O_X` at `mu = 0`,
    /// a non-trivial class otherwise, unless the hint says differently.
    fn triviality_for(&self, mu: i64) -> Triviality {
        self.triviality_hint.unwrap_or(if mu == 0 {
            Triviality::Trivial
        } else {
            Triviality::NonTrivial
        })
    }
}

/// `(h0, h1)` of a line bundle of degree `deg` on a curve of genus `genus`.
///
/// Genus 0 and 1 are always exact (genus 1, degree 0 uses `triviality`).
/// For genus `g >= 2` the answer is exact outside the special window
/// `0 <= deg <= 2g-2`.
pub fn rr_dims(genus: u32, deg: i64, triviality: Triviality) -> (Dim, Dim) {
    let g = i64::from(genus);
    match genus {
        0 => (
            Dim::Exact((deg + 1).max(0) as u64),
            Dim::Exact((-deg - 1).max(0) as u64),
        ),
        1 => {
            if deg > 0 {
                (Dim::Exact(deg as u64), Dim::Exact(0))
            } else if deg < 0 {
                (Dim::Exact(0), Dim::Exact((-deg) as u64))
            } else {
                match triviality {
                    Triviality::Trivial => (Dim::Exact(1), Dim::Exact(1)),
                    Triviality::NonTrivial => (Dim::Exact(0), Dim::Exact(0)),
                }
            }
        }
        _ => {
            if deg > 2 * g - 2 {
                (Dim::Exact((deg + 1 - g) as u64), Dim::Exact(0))
            } else if deg < 0 {
                (Dim::Exact(0), Dim::Exact((g - 1 - deg) as u64))
            } else {
                (Dim::Indeterminate, Dim::Indeterminate)
            }
        }
    }
}

/// Three-valued verdict on a theorem hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Indeterminate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Indeterminate => "indeterminate",
        })
    }
}

/// One row `H^*(X, O(N^{-mu}))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObstructionRow {
    pub mu: i64,
    pub deg: i64,
    pub h0: Dim,
    pub h1: Dim,
}

/// Theorems whose hypotheses are decided from the rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    /// L2 solvability: `h1(N^{-mu}) = 0` for all `mu >= -k0`.
    T12,
    /// Continuous solvability: `h1(N^{-mu}) = 0` for all `mu >= 1`.
    T14,
    /// Bounded solution operator exists exactly when `h1(N^{-mu}) = 0`
    /// for all `mu >= 1`.
    T81,
}

impl Theorem {
    fn first_mu(self, k0: i64) -> i64 {
        match self {
            Theorem::T12 => -k0,
            Theorem::T14 | Theorem::T81 => 1,
        }
    }
}

/// A verdict together with the rows that decide it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub theorem: Theorem,
    pub verdict: Verdict,
    /// `(mu, h1)` for every row from the first relevant `mu` up to the
    /// start of the analytically vanishing tail.
    pub witness: Vec<(i64, Dim)>,
    /// First `mu` from which `h1 = 0` is guaranteed by positivity.
    pub tail_start: i64,
}

/// Rows plus the verdicts for the theorem hypotheses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObstructionTable {
    pub curve: CurveSpec,
    pub k: i64,
    pub k0: i64,
    pub rows: Vec<ObstructionRow>,
    pub verdict_t12: Verdict,
    pub verdict_t14: Verdict,
    pub verdict_t81: Verdict,
    /// `dim H^1(M, O_M)`.
    pub h1_resolution: Dim,
    /// Smallest multiple `nu` in the scanned range for which every scanned
    /// row of `N^{-nu*mu}` has `h1 = 0` and `N^{nu*mu}` has `h0 = 0`
    /// (`mu >= 1`). A scanned bound, not a proven index.
    pub scanned_bound: Option<i64>,
}

/// Row for `N^{-mu}`.
pub fn row(curve: &CurveSpec, mu: i64) -> ObstructionRow {
    let deg = curve.degree_of_row(mu);
    let (h0, h1) = rr_dims(curve.genus, deg, curve.triviality_for(mu));
    ObstructionRow { mu, deg, h0, h1 }
}

/// First `mu >= 1` past which `deg N^{-mu} = e*mu > 2g - 2`, so `h1` vanishes
/// for every later row.
fn vanishing_tail_start(curve: &CurveSpec) -> i64 {
    let g = i64::from(curve.genus);
    let e = i64::from(curve.e.max(1));
    // smallest mu with e*mu > 2g-2
    let mut mu = 1;
    while e * mu <= 2 * g - 2 {
        mu += 1;
    }
    mu
}

/// Verdict for a theorem hypothesis, with the witness rows.
pub fn hypothesis_check(theorem: Theorem, curve: &CurveSpec, k0: i64) -> HypothesisCheck {
    let tail_start = vanishing_tail_start(curve);
    let first = theorem.first_mu(k0);
    let mut witness = Vec::new();
    let mut verdict = Verdict::Holds;
    for mu in first..tail_start.max(first) {
        let r = row(curve, mu);
        witness.push((mu, r.h1));
        match r.h1 {
            Dim::Exact(0) => {}
            Dim::Exact(_) => verdict = Verdict::Fails,
            Dim::Indeterminate => {
                if verdict == Verdict::Holds {
                    verdict = Verdict::Indeterminate;
                }
            }
        }
    }
    HypothesisCheck { theorem, verdict, witness, tail_start }
}

/// `dim H^1(M, O_M) = sum_{mu >= 0} h1(N^{-mu})`.
pub fn resolution_cohomology(curve: &CurveSpec) -> Dim {
    let tail_start = vanishing_tail_start(curve);
    let mut total = 0u64;
    for mu in 0..tail_start {
        match row(curve, mu).h1 {
            Dim::Exact(n) => total += n,
            Dim::Indeterminate => return Dim::Indeterminate,
        }
    }
    Dim::Exact(total)
}

fn scanned_bound(curve: &CurveSpec, scan_max: i64) -> Option<i64> {
    let rows_per_nu = 4;
    (1..=scan_max).find(|&nu| {
        (1..=rows_per_nu).all(|mu| {
            let pos = row(curve, nu * mu);
            let neg = row(curve, -nu * mu);
            pos.h1 == Dim::Exact(0) && neg.h0 == Dim::Exact(0)
        })
    })
}

/// Obstruction table for `mu` in `mu_range` (inclusive), weight `k`, and
/// Jacobian vanishing order `k0`.
pub fn obstruction_table(
    curve: &CurveSpec,
    k: i64,
    k0: i64,
    mu_range: std::ops::RangeInclusive<i64>,
) -> ObstructionTable {
    let rows = mu_range.map(|mu| row(curve, mu)).collect();
    ObstructionTable {
        curve: *curve,
        k,
        k0,
        rows,
        verdict_t12: hypothesis_check(Theorem::T12, curve, k0).verdict,
        verdict_t14: hypothesis_check(Theorem::T14, curve, k0).verdict,
        verdict_t81: hypothesis_check(Theorem::T81, curve, k0).verdict,
        h1_resolution: resolution_cohomology(curve),
        scanned_bound: scanned_bound(curve, 8),
    }
}

impl ObstructionTable {
    /// `sum_{mu >= k} h1` over the rows, when all of them are exact.
    pub fn obstruction_dimension(&self) -> Dim {
        let mut total = 0;
        for r in self.rows.iter().filter(|r| r.mu >= self.k) {
            match r.h1 {
                Dim::Exact(n) => total += n,
                Dim::Indeterminate => return Dim::Indeterminate,
            }
        }
        Dim::Exact(total)
    }

    /// Riemann–Roch `h0 - h1 = deg + 1 - g` on every determinate row.
    pub fn riemann_roch_holds(&self) -> bool {
        let g = i64::from(self.curve.genus);
        self.rows.iter().all(|r| match (r.h0, r.h1) {
            (Dim::Exact(a), Dim::Exact(b)) => a as i64 - b as i64 == r.deg + 1 - g,
            _ => true,
        })
    }

    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "genus {}  e {}  k {}  k0 {}\n",
            self.curve.genus, self.curve.e, self.k, self.k0
        ));
        out.push_str(&format!("{:>6} {:>6} {:>6} {:>6}\n", "mu", "deg", "h0", "h1"));
        for r in &self.rows {
            out.push_str(&format!(
                "{:>6} {:>6} {:>6} {:>6}\n",
                r.mu,
                r.deg,
                r.h0.to_string(),
                r.h1.to_string()
            ));
        }
        out.push_str(&format!("T1.2 (L2):        {}\n", self.verdict_t12));
        out.push_str(&format!("T1.4 (C0):        {}\n", self.verdict_t14));
        out.push_str(&format!("T8.1 (operator):  {}\n", self.verdict_t81));
        out.push_str(&format!("h1(M, O_M):       {}\n", self.h1_resolution));
        match self.scanned_bound {
            Some(nu) => out.push_str(&format!("scanned bound:    {nu}\n")),
            None => out.push_str("scanned bound:    none in range\n"),
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genus_zero_sections_of_negative_multiples() {
        for mu in -6..=1 {
            let (h0, h1) = rr_dims(0, -mu, Triviality::NonTrivial);
            assert_eq!(h0, Dim::Exact((1 - mu) as u64), "mu = {mu}");
            assert_eq!(h1, Dim::Exact(0));
        }
        assert_eq!(rr_dims(0, -2, Triviality::Trivial), (Dim::Exact(0), Dim::Exact(1)));
    }

    #[test]
    fn elliptic_functions_with_single_pole() {
        for mu in -6..=-1 {
            let (h0, h1) = rr_dims(1, -mu, Triviality::NonTrivial);
            assert_eq!(h0, Dim::Exact((-mu) as u64));
            assert_eq!(h1, Dim::Exact(0));
        }
        assert_eq!(rr_dims(1, 0, Triviality::Trivial), (Dim::Exact(1), Dim::Exact(1)));
        assert_eq!(rr_dims(1, 0, Triviality::NonTrivial), (Dim::Exact(0), Dim::Exact(0)));
    }

    #[test]
    fn higher_genus_special_window_is_indeterminate() {
        assert_eq!(rr_dims(2, 1, Triviality::NonTrivial), (Dim::Indeterminate, Dim::Indeterminate));
        assert_eq!(rr_dims(2, 3, Triviality::NonTrivial), (Dim::Exact(2), Dim::Exact(0)));
        assert_eq!(rr_dims(2, -1, Triviality::NonTrivial), (Dim::Exact(0), Dim::Exact(2)));
    }

    #[test]
    fn verdicts_for_the_quadric_cone() {
        let c = CurveSpec::new(0, 2);
        let t = obstruction_table(&c, -1, 1, -3..=3);
        assert_eq!(t.verdict_t14, Verdict::Holds);
        assert_eq!(t.verdict_t12, Verdict::Fails);
        let r = t.rows.iter().find(|r| r.mu == -1).unwrap();
        assert_eq!(r.h1, Dim::Exact(1));
        // under a degree -1 normal bundle the L2 hypothesis holds
        let t1 = obstruction_table(&CurveSpec::new(0, 1), -1, 1, -3..=3);
        assert_eq!(t1.verdict_t12, Verdict::Holds);
    }

    #[test]
    fn elliptic_cone_verdicts() {
        for e in 1..=4 {
            let c = CurveSpec::new(1, e);
            assert_eq!(hypothesis_check(Theorem::T14, &c, 1).verdict, Verdict::Holds);
            assert_eq!(hypothesis_check(Theorem::T81, &c, 1).verdict, Verdict::Holds);
        }
    }

    #[test]
    fn genus_two_special_row_is_indeterminate() {
        let c = CurveSpec::new(2, 1);
        let chk = hypothesis_check(Theorem::T14, &c, 1);
        assert_eq!(chk.verdict, Verdict::Indeterminate);
        assert!(chk.witness.contains(&(1, Dim::Indeterminate)));
    }

    #[test]
    fn resolution_cohomology_sums() {
        for e in 1..=4 {
            assert_eq!(resolution_cohomology(&CurveSpec::new(0, e)), Dim::Exact(0));
            assert_eq!(resolution_cohomology(&CurveSpec::new(1, e)), Dim::Exact(1));
        }
    }

    #[test]
    fn text_table_is_aligned() {
        let t = obstruction_table(&CurveSpec::new(0, 2), -1, 1, -2..=2);
        let text = t.to_text();
        let widths: Vec<usize> = text.lines().skip(1).take(6).map(|l| l.len()).collect();
        assert!(widths.windows(2).all(|w| w[0] == w[1]), "{text}");
    }
}
