//! The invariant suite behind `hecke-expsum verify`.
//!
//! Every check prints one line `PASS|FAIL <name>: <detail>`. Details contain
//! only deterministic quantities (no timings), so the rendered report is
//! byte-identical across runs and thread counts.

use std::fmt::Write as _;

use crate::arith::{euler_phi, gcd, primes_up_to};
use crate::characters::CharacterGroup;
use crate::error::Result;
use crate::expsum::{splitting_identity_check, Coefficients};
use crate::farey::{arc_center, dissect, FareyArc, HMap};
use crate::hecke::{build_tau_table, tau_by_hecke_recursion, tau_from_eta_product, Sym2Coeffs};
use crate::phase::{build_g, gprime_taylor_slope, Phase, PhaseFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Quick,
    Full,
}

struct Sizes {
    tau: usize,
    char_q: u64,
    farey_n: f64,
    split_q: u64,
}

impl Mode {
    fn sizes(self) -> Sizes {
        match self {
            Mode::Quick => Sizes {
                tau: 2_000,
                char_q: 40,
                farey_n: 2_000.0,
                split_q: 6,
            },
            Mode::Full => Sizes {
                tau: 10_000,
                char_q: 200,
                farey_n: 10_000.0,
                split_q: 12,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub lines: Vec<CheckLine>,
}

impl VerifyReport {
    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.lines.push(CheckLine {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckLine> {
        self.lines.iter().find(|l| !l.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for l in &self.lines {
            let tag = if l.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{tag} {}: {}", l.name, l.detail);
        }
        s
    }
}

/// Exponent of the Piatetski-Shapiro phase used by the Farey checks.
pub const PS_C: f64 = 1.03;
/// `f(N) = N^θ` for the Farey checks; inside the size window.
pub const PS_THETA: f64 = 1.2;
pub const FAREY_ORDERS: [u64; 3] = [5, 20, 80];

pub fn run(mode: Mode) -> Result<VerifyReport> {
    let sz = mode.sizes();
    let mut r = VerifyReport::default();
    hecke_checks(&mut r, sz.tau)?;
    character_checks(&mut r, sz.char_q)?;
    farey_checks(&mut r, sz.farey_n)?;
    split_checks(&mut r, sz.split_q)?;
    Ok(r)
}

fn hecke_checks(r: &mut VerifyReport, limit: usize) -> Result<()> {
    let eta = tau_from_eta_product(limit)?;
    let rec = tau_by_hecke_recursion(limit)?;
    let mismatches = eta.iter().zip(&rec).filter(|(a, b)| a != b).count();
    r.push(
        "hecke.tau_routes",
        mismatches == 0,
        format!("n <= {limit}, mismatches {mismatches}"),
    );

    let table = build_tau_table(limit)?;
    let mut worst: f64 = 0.0;
    let mut pairs = 0u64;
    for m in 1..=limit as u64 {
        for n in m..=(limit as u64 / m) {
            if gcd(m, n) == 1 {
                worst = worst.max(table.check_mult_identity(m, n)?);
                pairs += 1;
            }
        }
    }
    r.push(
        "hecke.multiplicativity",
        worst < 1e-12,
        format!("{pairs} coprime pairs, max deviation {worst:.3e}"),
    );

    let (p, l) = table.max_abs_lambda_prime().unwrap_or((0, 0.0));
    r.push(
        "hecke.ramanujan_bound",
        l <= 2.0,
        format!("max |lambda(p)| = {l:.6} at p = {p}"),
    );

    let bound = (limit as f64).sqrt() as usize;
    let mut worst: f64 = 0.0;
    for p in primes_up_to(bound) {
        worst = worst.max(table.square_relation_deviation(p)?);
    }
    r.push(
        "hecke.square_relation",
        worst < 1e-12,
        format!("p <= {bound}, max deviation {worst:.3e}"),
    );
    Ok(())
}

fn character_checks(r: &mut VerifyReport, max_q: u64) -> Result<()> {
    let mut count_ok = true;
    let mut orth: f64 = 0.0;
    let mut gauss: f64 = 0.0;
    let mut expansion: f64 = 0.0;
    for q in 1..=max_q {
        let g = CharacterGroup::new(q)?;
        count_ok &= g.characters().len() as u64 == euler_phi(q);
        orth = orth.max(g.orthogonality_defect());
        for (i, chi) in g.characters().iter().enumerate() {
            if chi.is_primitive() {
                gauss = gauss.max((g.gauss_sum(i).norm() - (q as f64).sqrt()).abs());
            }
        }
        for l in 0..q as i64 {
            if gcd(l as u64, q) != 1 {
                continue;
            }
            for n in (0..q as i64).filter(|&n| gcd(n as u64, q) == 1) {
                let exact = crate::sum::e((n * l % q as i64) as f64 / q as f64);
                expansion = expansion.max((g.additive_expansion(l, n)? - exact).norm());
            }
        }
    }
    r.push(
        "characters.count",
        count_ok,
        format!("phi(q) characters for q <= {max_q}"),
    );
    r.push(
        "characters.orthogonality",
        orth < 1e-9,
        format!("q <= {max_q}, max defect {orth:.3e}"),
    );
    r.push(
        "characters.gauss_sum_modulus",
        gauss < 1e-10,
        format!("primitive characters, q <= {max_q}, max ||tau| - sqrt q| {gauss:.3e}"),
    );
    r.push(
        "characters.additive_expansion",
        expansion < 1e-9,
        format!("q <= {max_q} exhaustive, max deviation {expansion:.3e}"),
    );
    Ok(())
}

/// Partition invariants of one dissection; `None` when all hold, else the
/// first violated property.
pub fn partition_violation<P: Phase>(
    hmap: &HMap<'_, P>,
    arcs: &[FareyArc],
    n: f64,
    nprime: f64,
) -> Option<String> {
    for w in arcs.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (lq, ql) = (b.l as i128 * a.q as i128, a.l as i128 * b.q as i128);
        if lq - ql != 1 {
            return Some(format!(
                "neighbours {}/{} and {}/{} not unimodular",
                a.l, a.q, b.l, b.q
            ));
        }
        if a.arc_hi != b.arc_lo {
            return Some(format!("h-seam mismatch at {}/{}", a.l, a.q));
        }
    }
    let (ya, yb) = (hmap.h(n), hmap.h(nprime));
    let (ylo, yhi) = (ya.min(yb), ya.max(yb));
    let (Some(first), Some(last)) = (arcs.first(), arcs.last()) else {
        return Some("no arcs".into());
    };
    let span = yhi - ylo;
    if (first.arc_lo - ylo).abs() > 1e-9 * span || (last.arc_hi - yhi).abs() > 1e-9 * span {
        return Some("arcs do not cover the h-interval".into());
    }
    let mut ordered: Vec<&FareyArc> = arcs.iter().collect();
    ordered.sort_by(|a, b| a.x_lo.total_cmp(&b.x_lo));
    if ordered[0].x_lo != n || ordered[ordered.len() - 1].x_hi != nprime {
        return Some("projected intervals do not reach N and N'".into());
    }
    for w in ordered.windows(2) {
        if w[0].x_hi != w[1].x_lo {
            return Some(format!("x-seam mismatch at {}", w[0].x_hi));
        }
    }
    let terms: u64 = arcs.iter().map(|a| a.term_count()).sum();
    let expected = nprime.floor() as u64 - n.floor() as u64;
    if terms != expected {
        return Some(format!("term count {terms} != {expected}"));
    }
    None
}

/// Largest relative mismatch of value, first and second derivative between
/// `f` and `g` at `x0`, and largest `|slope - 2|` of the Taylor-order fit,
/// over all arcs.
pub fn g_matching<P: Phase>(hmap: &HMap<'_, P>, arcs: &[FareyArc]) -> Result<(f64, f64)> {
    let f = hmap.phase();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let mut worst: f64 = 0.0;
    let mut slope_dev: f64 = 0.0;
    for arc in arcs {
        let x0 = arc_center(hmap, arc)?;
        let g = build_g(f, arc.l, arc.q, x0)?;
        worst = worst
            .max(rel(g.value(x0), f.value(x0)))
            .max(rel(g.d1(x0), f.d1(x0)))
            .max(rel(g.d2(x0), f.d2(x0)));
        slope_dev = slope_dev.max((gprime_taylor_slope(f, &g) - 2.0).abs());
    }
    Ok((worst, slope_dev))
}

fn farey_checks(r: &mut VerifyReport, n: f64) -> Result<()> {
    let f = PhaseFunction::with_target(1, 1.0 / PS_C, n, PS_THETA)?;
    let hmap = HMap::new(&f);
    for q in FAREY_ORDERS {
        let arcs = dissect(&hmap, q, n, 2.0 * n)?;
        let violation = partition_violation(&hmap, &arcs, n, 2.0 * n);
        r.push(
            &format!("farey.partition[Q={q}]"),
            violation.is_none(),
            match violation {
                None => format!("N = {n}, {} arcs", arcs.len()),
                Some(v) => v,
            },
        );
        let (worst, slope) = g_matching(&hmap, &arcs)?;
        r.push(
            &format!("phase.g_matching[Q={q}]"),
            worst < 1e-10 && slope < 0.1,
            format!("max relative mismatch {worst:.3e}, max |slope - 2| {slope:.3e}"),
        );
    }
    Ok(())
}

/// `T = 2π x0^2 f''(x0)` at the midpoint of the psprimes phase range.
pub fn reference_t(n: f64) -> Result<f64> {
    let f = PhaseFunction::with_target(1, 1.0 / PS_C, n, PS_THETA)?;
    let x0 = 1.5 * n;
    Ok(std::f64::consts::TAU * x0 * x0 * f.d2(x0))
}

pub const SPLIT_INTERVAL: (f64, f64) = (37.5, 237.0);

/// Worst `deviation / terms` of the splitting identity over `q <= max_q`,
/// all reduced `l`, the three coefficient kinds and the given `T` values.
pub fn split_grid(max_q: u64, ts: &[f64]) -> Result<(f64, u64)> {
    let top = SPLIT_INTERVAL.1 as usize;
    let table = build_tau_table(top)?;
    let sym = Sym2Coeffs::build(&table, top as u64)?;
    let kinds = [
        Coefficients::Unit,
        Coefficients::Sym2(&sym),
        Coefficients::Squarefree {
            table: &sym,
            coprime_to: 1,
        },
    ];
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for q in 1..=max_q {
        for l in 0..q as i64 {
            if gcd(l as u64, q) != 1 {
                continue;
            }
            for c in &kinds {
                for &t in ts {
                    let s = splitting_identity_check(c, q, l, t, SPLIT_INTERVAL)?;
                    worst = worst.max(s.deviation / s.terms as f64);
                    cases += 1;
                }
            }
        }
    }
    Ok((worst, cases))
}

fn split_checks(r: &mut VerifyReport, max_q: u64) -> Result<()> {
    let ts = [0.0, 17.3, reference_t(1e4)?];
    let (worst, cases) = split_grid(max_q, &ts)?;
    r.push(
        "expsum.splitting_identity",
        worst < 1e-7,
        format!("q <= {max_q}, {cases} cases, max deviation per term {worst:.3e}"),
    );
    Ok(())
}
