//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Built with `harness = false` so the lines print on every `cargo test`. The process fails on
//! any unexpected failure. Sub-checks listed in `KNOWN_FAILURES` still print FAIL but do not
//! fail the run.

use std::time::{Duration, Instant};

use lcongr::checks::{self, ExampleKind};
use lcongr::matgrp::{self, DensityProfile, Tables};
use lcongr::{arith, density, kn, lseries, modsym, Dataset, DirichletCharacter};

/// Sub-checks whose expected value cannot be met as stated; reported, never hidden.
const KNOWN_FAILURES: &[&str] = &["10:delta-prime-stated"];

#[derive(Default)]
struct Outcome {
    failures: Vec<(String, String)>,
    notes: Vec<String>,
}

impl Outcome {
    fn check(&mut self, id: &str, ok: bool, detail: impl Into<String>) {
        if !ok {
            self.failures.push((id.to_string(), detail.into()));
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

fn within(start: Instant, limit: Duration, o: &mut Outcome, id: &str) {
    let t = start.elapsed();
    o.check(id, t < limit, format!("took {t:?}, limit {limit:?}"));
}

fn examples_of(kind: ExampleKind, data: &Dataset, o: &mut Outcome, id: &str) -> usize {
    let examples: Vec<_> = checks::bundled_examples().into_iter().filter(|e| e.kind == kind).collect();
    for ex in &examples {
        match checks::run_example(data, ex) {
            Ok(r) => o.check(
                id,
                r.lvalue_matches == Some(true) && r.count_matches == Some(true),
                format!("{}: L = {} (expected {:?}), #E = {} (expected {:?})", r.curve, r.lvalue, r.expected_lvalue, r.count, r.expected_count),
            ),
            Err(e) => o.check(id, false, format!("{}: {e}", ex.curve)),
        }
    }
    examples.len()
}

fn criterion_1(data: &Dataset) -> Outcome {
    let mut o = Outcome::default();
    let t = Instant::now();
    let n = examples_of(ExampleKind::Cubic, data, &mut o, "1");
    o.check("1", n == 9, format!("{n} cubic rows"));
    within(t, Duration::from_secs(300), &mut o, "1");
    o.note(format!("{n} curves, {:?}", t.elapsed()));
    o
}

fn criterion_2(data: &Dataset) -> Outcome {
    let mut o = Outcome::default();
    let t = Instant::now();
    let n = examples_of(ExampleKind::Unit, data, &mut o, "2");
    o.check("2", n == 10, format!("{n} quintic rows"));
    within(t, Duration::from_secs(600), &mut o, "2");
    o.note(format!("{n} curves, {:?}", t.elapsed()));
    o
}

fn criterion_3(data: &Dataset) -> Outcome {
    let mut o = Outcome::default();
    let mut jobs = Vec::new();
    for d in &data.curves {
        for q in [3u64, 5] {
            if d.c0 % q == 0 {
                continue;
            }
            for p in arith::primes_below(101) {
                if p % q == 1 && d.conductor % p != 0 {
                    jobs.push((d.label.clone(), p, q));
                }
            }
        }
    }
    let results: Vec<_> = std::thread::scope(|s| {
        let chunks: Vec<_> = jobs.chunks(jobs.len().div_ceil(8).max(1)).collect();
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|chunk| {
                s.spawn(move || {
                    chunk
                        .iter()
                        .map(|(label, p, q)| {
                            let e = data.curve(label)?;
                            let chi = DirichletCharacter::new(*p, *q, 1)?;
                            modsym::congruence_check_unscaled(&e, &chi)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    });
    for (r, (label, p, q)) in results.iter().zip(&jobs) {
        match r {
            Ok(r) => o.check("3", r.matches, format!("{label} p = {p} q = {q}: {} vs {}", r.lhs_residue, r.rhs_residue)),
            Err(e) => o.check("3", false, format!("{label} p = {p} q = {q}: {e}")),
        }
    }
    o.note(format!("{} (curve, character) pairs", jobs.len()));
    o
}

fn criterion_4(data: &Dataset) -> Outcome {
    let mut o = Outcome::default();
    let e = data.curve("11a1").expect("11a1");
    let mut worst = 0.0f64;
    for p in [7u64, 13] {
        for k in [1u64, 2] {
            let chi = DirichletCharacter::new(p, 3, k).expect("character");
            let birch = modsym::birch_sum(&e, &chi);
            let series = lseries::algebraic_twisted_lvalue(&e, &chi);
            let raw = lseries::twisted_embeddings(&e, &chi);
            match (birch, series, raw) {
                (Ok(b), Ok(s), Ok(raw)) => {
                    let c0 = arith::rat_int(e.data.c0 as i64);
                    o.check("4", b == s.algebraic.scale(&c0), format!("{}: birch {b} vs series {}", chi.id(), s.algebraic));
                    for (a, z) in raw {
                        worst = worst.max((b.embed::<f64>(a) - z * e.data.c0 as f64).norm());
                    }
                }
                (b, s, r) => o.check("4", false, format!("{}: {:?} {:?} {:?}", chi.id(), b.err(), s.err(), r.err())),
            }
        }
    }
    o.check("4", worst < 1e-4, format!("largest residual {worst:e}"));
    for n in [3u64, 7, 13] {
        match modsym::hecke_identity(&e, n) {
            Ok(r) => o.check("4", r.holds, format!("Hecke n = {n}: {} vs {}", r.lhs, r.rhs)),
            Err(err) => o.check("4", false, format!("Hecke n = {n}: {err}")),
        }
    }
    o.note(format!("4 Birch sums, 3 Hecke identities, residual {worst:.1e}"));
    o
}

fn table_criterion(which: u8, id: &str, expected_rows: usize, limit: Duration) -> Outcome {
    let mut o = Outcome::default();
    let t = Instant::now();
    match matgrp::verify_table(which, &Tables::bundled()) {
        Ok(rows) => {
            o.check(id, rows.len() == expected_rows, format!("{} rows", rows.len()));
            for r in &rows {
                o.check(id, r.holds, format!("{}: delta {} vs {}", r.label, r.delta, r.expected_delta));
            }
        }
        Err(e) => o.check(id, false, e.to_string()),
    }
    within(t, limit, &mut o, id);
    o.note(format!("{expected_rows} rows, {:?}", t.elapsed()));
    o
}

fn criterion_7() -> Outcome {
    let mut o = Outcome::default();
    for q in [3u32, 5, 7, 11, 13] {
        let c = matgrp::verify_sl2_table(q);
        o.check("7", c.holds, format!("q = {q}: {:?}", c.failures));
    }
    o.note("q = 3, 5, 7, 11, 13");
    o
}

fn criterion_8(data: &Dataset) -> Outcome {
    let mut o = Outcome::default();
    let tables = Tables::bundled();
    let allowed = matgrp::twelve_triples();
    let mut predicted = 0;
    let mut without_image = 0;
    for d in &data.curves {
        let e = lcongr::Curve::new(d.clone());
        match density::predict(&e, None, &tables) {
            Ok(p) => {
                predicted += 1;
                o.check("8", allowed.contains(&p.profile), format!("{}: {}", d.label, p.profile));
            }
            Err(lcongr::Error::MissingImageData(_)) => without_image += 1,
            Err(lcongr::Error::RankPositive | lcongr::Error::HypothesisFailed(_)) if d.image.is_none() => {}
            Err(err) => o.check("8", false, format!("{}: {err}", d.label)),
        }
    }
    let named = [
        ("11a1", ["3/8", "3/8", "1/4"]),
        ("20a1", ["5/9", "2/9", "2/9"]),
        ("14a1", ["1", "0", "0"]),
        ("50b4", ["1", "0", "0"]),
    ];
    for (label, triple) in named {
        let want = DensityProfile::from_strs(3, &triple).expect("triple");
        let got = data.curve(label).and_then(|e| density::predict(&e, None, &tables));
        match got {
            Ok(p) => o.check("8", p.profile == want, format!("{label}: {} vs {want}", p.profile)),
            Err(e) => o.check("8", false, format!("{label}: {e}")),
        }
    }
    o.note(format!("{predicted} predictions, {without_image} curves without image data"));
    o
}

fn criterion_9(data: &Dataset) -> Outcome {
    let mut o = Outcome::default();
    let labels = ["11a1", "20a1", "14a1"];
    let results: Vec<_> = std::thread::scope(|s| {
        let hs: Vec<_> = labels
            .iter()
            .map(|l| {
                s.spawn(move || {
                    let t = Instant::now();
                    let r = data.curve(l).and_then(|e| density::sweep(&e, 3, 50_000));
                    (r, t.elapsed())
                })
            })
            .collect();
        hs.into_iter().map(|h| h.join().expect("sweep panicked")).collect()
    });
    let mut devs = Vec::new();
    for (label, (r, t)) in labels.iter().zip(results) {
        o.check("9", t < Duration::from_secs(600), format!("{label}: {t:?}"));
        match r {
            Ok(r) => {
                let dev = r.max_abs_deviation.unwrap_or(f64::INFINITY);
                o.check("9", dev < 0.02, format!("{label}: {} vs {:?}, deviation {dev:.4}", r.empirical, r.predicted.map(|p| p.to_string())));
                devs.push(format!("{label} {dev:.4}"));
            }
            Err(e) => o.check("9", false, format!("{label}: {e}")),
        }
    }
    o.note(format!("X = 50000, max deviation: {}", devs.join(", ")));
    o
}

fn criterion_10(data: &Dataset) -> Outcome {
    let mut o = Outcome::default();
    let mut gcds = Vec::new();
    for (label, want) in [("11a1", 5u64), ("15a1", 4), ("17a1", 4)] {
        let Ok(e) = data.curve(label) else {
            o.check("10", false, format!("{label} missing"));
            continue;
        };
        let conductors = kn::default_conductors(&e, 3, kn::DEFAULT_SAMPLE);
        let g = match kn::estimate_gcd(&e, 3, &conductors) {
            Ok(g) => g,
            Err(err) => {
                o.check("10", false, format!("{label}: {err}"));
                continue;
            }
        };
        o.check("10", g.gcd_least_period == want && g.stable, format!("{label}: gcd {} (raw {}), expected {want}", g.gcd_least_period, g.gcd));
        gcds.push(g.gcd_least_period.to_string());
        match kn::verify_residues(&e, g.gcd, 500) {
            Ok(rs) => {
                for r in &rs {
                    o.check("10", r.holds, format!("{label} p = {}: residue {:?} vs {:?}", r.conductor, r.residue, r.predicted));
                }
                o.check("10", !rs.is_empty(), format!("{label}: no eligible primes"));
            }
            Err(err) => o.check("10", false, format!("{label} residues: {err}")),
        }
        match kn::delta_prime(&e, 50_000) {
            Ok(dp) => {
                o.check("10", dp.max_abs_deviation < 0.02, format!("{label}: delta' {} vs derived {}", dp.empirical, dp.target));
                o.check(
                    "10:delta-prime-stated",
                    dp.stated_deviation < 0.02,
                    format!("{label}: delta' deviation {:.4} from stated {} (sums to {})", dp.stated_deviation, dp.stated, dp.stated.total()),
                );
                o.note(format!("{label} delta' deviation {:.4} derived, {:.4} stated", dp.max_abs_deviation, dp.stated_deviation));
            }
            Err(err) => o.check("10", false, format!("{label} delta': {err}")),
        }
    }
    o.note(format!("gcd {}", gcds.join(", ")));
    o
}

fn criterion_11(data: &Dataset) -> Outcome {
    let mut o = Outcome::default();
    match checks::valuation_suite(data, &[3, 5, 7]) {
        Ok(rs) => {
            for r in &rs {
                o.check("11", r.bound_satisfied, format!("{} q = {}: ord {}", r.curve, r.q, r.ord));
            }
            o.note(format!("{} curve/prime pairs", rs.len()));
        }
        Err(e) => o.check("11", false, e.to_string()),
    }
    for (label, q, ord) in [("11a1", 5u64, -1i64), ("27a3", 3, -1), ("27a4", 3, -1), ("54a3", 3, -1)] {
        match data.curve(label).and_then(|e| checks::valuation_check(&e, q)) {
            Ok(r) => o.check("11", r.ord == ord && r.bound_satisfied, format!("{label} q = {q}: ord {} expected {ord}", r.ord)),
            Err(e) => o.check("11", false, format!("{label}: {e}")),
        }
    }
    o
}

fn criterion_12(data: &Dataset) -> Outcome {
    let mut o = Outcome::default();
    let e = data.curve("11a1").expect("11a1");
    match modsym::hecke_identity(&e, 11) {
        Ok(r) => o.check("12", !r.holds, format!("11a1 n = 11 should fail: {} vs {}", r.lhs, r.rhs)),
        Err(err) => o.note(format!("11a1 n = 11 rejected: {err}")),
    }
    match checks::symbol_suite(data) {
        Ok(cs) => {
            let c = cs.iter().find(|c| c.name == "hecke 11a1 n=11 fails");
            o.check("12", c.is_some_and(|c| c.holds), format!("11a1 n = 11 block sum: {:?}", c.map(|c| &c.observed)));
        }
        Err(err) => o.check("12", false, err.to_string()),
    }
    let chi = DirichletCharacter::quadratic_prime(5).expect("quadratic character");
    match data.curve("50b1").and_then(|e| lseries::twisted_lvalue_clash(&e, &chi)) {
        Ok(r) => {
            o.check("12", !r.integral, format!("50b1 twisted value {} should be non-integral", r.algebraic));
            o.note(format!("11a1 n = 11 fails; 50b1 twisted by the quadratic character mod 5 gives {}", r.algebraic));
        }
        Err(err) => o.check("12", false, format!("50b1: {err}")),
    }
    o
}

fn main() {
    let data = Dataset::bundled();
    let d = &data;
    type Job<'a> = (u8, &'a str, Box<dyn Fn() -> Outcome + Send + Sync + 'a>);
    let jobs: Vec<Job> = vec![
        (1, "cubic table", Box::new(move || criterion_1(d))),
        (2, "quintic table", Box::new(move || criterion_2(d))),
        (3, "main congruence, p <= 100", Box::new(move || criterion_3(d))),
        (4, "Birch sums and Hecke identities", Box::new(move || criterion_4(d))),
        (5, "Table 1", Box::new(|| table_criterion(1, "5", 6, Duration::from_secs(1)))),
        (6, "Table 2", Box::new(|| table_criterion(2, "6", 21, Duration::from_secs(120)))),
        (7, "SL(2, q) classes", Box::new(criterion_7)),
        (8, "twelve-triple membership", Box::new(move || criterion_8(d))),
        (9, "empirical densities", Box::new(move || criterion_9(d))),
        (10, "normalized cubic values", Box::new(move || criterion_10(d))),
        (11, "valuation bounds", Box::new(move || criterion_11(d))),
        (12, "negative controls", Box::new(move || criterion_12(d))),
    ];
    let start = Instant::now();
    let outcomes: Vec<(u8, &str, Outcome, Duration)> = std::thread::scope(|s| {
        let hs: Vec<_> = jobs
            .iter()
            .map(|(n, name, f)| {
                s.spawn(move || {
                    let t = Instant::now();
                    let o = f();
                    (*n, *name, o, t.elapsed())
                })
            })
            .collect();
        hs.into_iter().map(|h| h.join().expect("criterion panicked")).collect()
    });

    let mut unexpected = 0;
    for (n, name, o, t) in &outcomes {
        let status = if o.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {status} {name} [{:.1}s] {}", t.as_secs_f64(), o.notes.join("; "));
        for (id, detail) in &o.failures {
            let known = KNOWN_FAILURES.contains(&id.as_str());
            if !known {
                unexpected += 1;
            }
            println!("    {} {id}: {detail}", if known { "known" } else { "FAIL" });
        }
    }
    println!("acceptance finished in {:.1}s", start.elapsed().as_secs_f64());
    if unexpected > 0 {
        println!("{unexpected} unexpected failures");
        std::process::exit(1);
    }
}
