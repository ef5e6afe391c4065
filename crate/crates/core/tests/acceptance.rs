//! End-to-end acceptance gate. Every criterion prints one `PASS` or `FAIL`
//! line; the test fails if any criterion fails.

use std::time::{Duration, Instant};

use hecke_expsum::arith::{euler_phi, gcd, primes_up_to};
use hecke_expsum::characters::CharacterGroup;
use hecke_expsum::expsum::{arc_partition_sum, bound_sweep, direct_sum, Coefficients, KPolicy};
use hecke_expsum::farey::{dissect, HMap};
use hecke_expsum::hecke::{
    build_tau_table, tau_by_hecke_recursion, tau_from_eta_product, Sym2Coeffs,
};
use hecke_expsum::phase::PhaseFunction;
use hecke_expsum::psprimes::{
    ps_enumerate, required_tau_limit, sign_change_count, theorem3_report,
};
use hecke_expsum::sum::e;
use hecke_expsum::verify::{self, g_matching, partition_violation, reference_t, split_grid, Mode};

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn ps_phase(n: f64) -> PhaseFunction {
    PhaseFunction::with_target(1, 1.0 / verify::PS_C, n, verify::PS_THETA).unwrap()
}

fn hecke_identities() -> Outcome {
    let ((mismatch, mult, lambda_max), dt) = timed(|| {
        let limit = 10_000;
        let eta = tau_from_eta_product(limit).unwrap();
        let rec = tau_by_hecke_recursion(limit).unwrap();
        let mismatch = eta.iter().zip(&rec).filter(|(a, b)| a != b).count();
        let t = build_tau_table(limit).unwrap();
        let mut mult: f64 = 0.0;
        for m in 1..=limit as u64 {
            for n in 1..=limit as u64 / m {
                if gcd(m, n) == 1 {
                    mult = mult.max(t.check_mult_identity(m, n).unwrap());
                }
            }
        }
        let lambda_max = primes_up_to(limit)
            .into_iter()
            .map(|p| t.lambda(p).unwrap().abs())
            .fold(0.0, f64::max);
        (mismatch, mult, lambda_max)
    });
    Outcome {
        name: "hecke identities",
        pass: mismatch == 0 && mult < 1e-12 && lambda_max <= 2.0 && dt.as_secs_f64() < 10.0,
        detail: format!(
            "tau mismatches {mismatch}, multiplicativity {mult:.2e}, max |lambda(p)| {lambda_max:.6}, {:.1}s",
            dt.as_secs_f64()
        ),
    }
}

fn square_relation() -> Outcome {
    let t = build_tau_table(1_000_000).unwrap();
    let worst = primes_up_to(1000)
        .into_iter()
        .map(|p| t.square_relation_deviation(p).unwrap())
        .fold(0.0, f64::max);
    Outcome {
        name: "lambda(p)^2 = 1 + lambda(p^2)",
        pass: worst < 1e-12,
        detail: format!("p <= 1000, max deviation {worst:.2e}"),
    }
}

fn character_layer() -> Outcome {
    let ((counts, orth, gauss, expansion), dt) = timed(|| {
        let (mut counts, mut orth, mut gauss, mut expansion) = (true, 0f64, 0f64, 0f64);
        for q in 1..=200u64 {
            let g = CharacterGroup::new(q).unwrap();
            counts &= g.characters().len() as u64 == euler_phi(q);
            orth = orth.max(g.orthogonality_defect());
            for (i, chi) in g.characters().iter().enumerate() {
                if chi.is_primitive() {
                    gauss = gauss.max((g.gauss_sum(i).norm() - (q as f64).sqrt()).abs());
                }
            }
            let units: Vec<i64> = (0..q as i64).filter(|&a| gcd(a as u64, q) == 1).collect();
            for &l in &units {
                for &n in &units {
                    let want = e(((l * n) % q as i64) as f64 / q as f64);
                    expansion = expansion.max((g.additive_expansion(l, n).unwrap() - want).norm());
                }
            }
        }
        (counts, orth, gauss, expansion)
    });
    Outcome {
        name: "character layer",
        pass: counts && orth < 1e-9 && gauss < 1e-10 && expansion < 1e-9 && dt.as_secs_f64() < 60.0,
        detail: format!(
            "q <= 200, counts ok {counts}, orthogonality {orth:.2e}, gauss {gauss:.2e}, expansion {expansion:.2e}, {:.1}s",
            dt.as_secs_f64()
        ),
    }
}

fn farey_dissection() -> Outcome {
    let n = 1e4;
    let f = ps_phase(n);
    let hmap = HMap::new(&f);
    let mut problems = Vec::new();
    let mut counts = Vec::new();
    for q in verify::FAREY_ORDERS {
        let arcs = dissect(&hmap, q, n, 2.0 * n).unwrap();
        counts.push(format!("Q={q}: {} arcs", arcs.len()));
        if let Some(v) = partition_violation(&hmap, &arcs, n, 2.0 * n) {
            problems.push(format!("Q={q}: {v}"));
        }
    }
    Outcome {
        name: "Farey dissection",
        pass: problems.is_empty(),
        detail: if problems.is_empty() {
            format!("N = 1e4, {}", counts.join(", "))
        } else {
            problems.join("; ")
        },
    }
}

fn g_approximation() -> Outcome {
    let n = 1e4;
    let f = ps_phase(n);
    let hmap = HMap::new(&f);
    let (mut worst, mut slope): (f64, f64) = (0.0, 0.0);
    for q in verify::FAREY_ORDERS {
        let arcs = dissect(&hmap, q, n, 2.0 * n).unwrap();
        let (w, s) = g_matching(&hmap, &arcs).unwrap();
        worst = worst.max(w);
        slope = slope.max(s);
    }
    Outcome {
        name: "g-approximation",
        pass: worst < 1e-10 && slope <= 0.1,
        detail: format!("max relative mismatch {worst:.2e}, max |slope - 2| {slope:.3}"),
    }
}

fn splitting_identity() -> Outcome {
    let t = reference_t(1e4).unwrap();
    let (worst, cases) = split_grid(12, &[0.0, 17.3, t]).unwrap();
    Outcome {
        name: "character splitting identity",
        pass: worst < 1e-7,
        detail: format!(
            "q <= 12, T in {{0, 17.3, {t:.1}}}, {cases} cases, max deviation/term {worst:.2e}"
        ),
    }
}

fn arc_partition() -> Outcome {
    let top = 200_000;
    let table = build_tau_table(top).unwrap();
    let sym = Sym2Coeffs::build(&table, top as u64).unwrap();
    let unit = Coefficients::Unit;
    let a = Coefficients::Sym2(&sym);
    let b = Coefficients::Squarefree {
        table: &sym,
        coprime_to: 1,
    };
    let configs: [(f64, u64, PhaseFunction, &Coefficients, &str); 4] = [
        (1e4, 10, ps_phase(1e4), &unit, "unit"),
        (1e4, 40, PhaseFunction::new(1.0, 1, 0.97).unwrap(), &b, "b"),
        (5e4, 20, ps_phase(5e4), &a, "a"),
        (1e5, 40, PhaseFunction::new(1.0, 1, 0.97).unwrap(), &b, "b"),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, q, f, c, kind) in configs {
        let ((dev, arcs), dt) = timed(|| {
            let r = arc_partition_sum(c, &f, n, 2.0 * n, q).unwrap();
            let d = direct_sum(c, &f, n, 2.0 * n).unwrap();
            ((r.value() - d).norm(), r.arcs.len())
        });
        pass &= dev < 1e-6 && dt.as_secs_f64() < 60.0;
        parts.push(format!("N={n} Q={q} {kind}: {arcs} arcs, {dev:.1e}"));
    }
    Outcome {
        name: "arc partition = direct sum",
        pass,
        detail: parts.join("; "),
    }
}

fn theorem3_desk() -> Outcome {
    let c = 1.02;
    let ((reports, ok_identity), dt) = timed(|| {
        let need = required_tau_limit(c, 100_000).unwrap();
        let table = build_tau_table(need as usize).unwrap();
        let mut reports = Vec::new();
        let mut ok = true;
        for n in [1_000u64, 10_000, 100_000] {
            let run = ps_enumerate(c, n).unwrap();
            let r = theorem3_report(&run, &table).unwrap();
            ok &= r.identity_deviation <= 1e-9 * r.count as f64;
            reports.push(r);
        }
        (reports, ok)
    });
    let first = (reports[0].ratio_count - 1.0).abs();
    let last = (reports[2].ratio_count - 1.0).abs();
    let in_band = (0.7..=1.3).contains(&reports[2].ratio_count);
    let ratios: Vec<String> = reports
        .iter()
        .map(|r| format!("N={}: {:.4}", r.n, r.ratio_count))
        .collect();
    Outcome {
        name: "prime-sum asymptotic at desk scale",
        pass: ok_identity && in_band && last < first && dt.as_secs_f64() < 300.0,
        detail: format!(
            "c = 1.02, identity ok {ok_identity}, count ratios [{}], {:.1}s",
            ratios.join(", "),
            dt.as_secs_f64()
        ),
    }
}

fn sign_changes() -> Outcome {
    let c = 1.02;
    let run = ps_enumerate(c, 10_000).unwrap();
    let table = build_tau_table(required_tau_limit(c, 10_000).unwrap() as usize).unwrap();
    let s = sign_change_count(&run, &table).unwrap();
    Outcome {
        name: "sign changes of lambda(p)",
        pass: s.changes >= 10 && s.changes < run.count,
        detail: format!(
            "c = 1.02, N = 1e4, {} hits, {} sign changes",
            run.count, s.changes
        ),
    }
}

fn bound_ratio_trend() -> Outcome {
    let grid: Vec<f64> = (10..=18).map(|j| 2f64.powi(j)).collect();
    let out = bound_sweep(
        0.97,
        1,
        KPolicy::Fixed(1.0),
        &grid,
        &Coefficients::Unit,
        0.01,
    )
    .unwrap();
    let slope = out.ratio_slope().unwrap_or(f64::NAN);
    Outcome {
        name: "bound ratio trend (heuristic)",
        pass: out.skipped.is_empty() && slope <= 0.05,
        detail: format!("unit coefficients, gamma 0.97, N = 2^10..2^18, log-log slope {slope:.3}"),
    }
}

fn determinism() -> Outcome {
    let render = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| verify::run(Mode::Full).unwrap().render())
    };
    let base = render(1);
    let same = [4, 8].iter().all(|&t| render(t) == base);
    Outcome {
        name: "verify output independent of worker count",
        pass: same && !base.contains("FAIL"),
        detail: format!("1, 4, 8 workers, {} bytes", base.len()),
    }
}

fn main() {
    let criteria: [fn() -> Outcome; 11] = [
        hecke_identities,
        square_relation,
        character_layer,
        farey_dissection,
        g_approximation,
        splitting_identity,
        arc_partition,
        theorem3_desk,
        sign_changes,
        bound_ratio_trend,
        determinism,
    ];
    let mut failed = Vec::new();
    for (i, c) in criteria.iter().enumerate() {
        let o = c();
        println!(
            "{} {:>2} {}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.name,
            o.detail
        );
        if !o.pass {
            failed.push(o.name);
        }
    }
    if !failed.is_empty() {
        eprintln!("acceptance failed: {failed:?}");
        std::process::exit(1);
    }
}
