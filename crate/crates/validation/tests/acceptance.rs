//! Acceptance criteria A1–A7.
//!
//! Every criterion prints one `PASS`/`FAIL` line (sub-checks are indented
//! beneath it). The process exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use stargraph::asymptotics::{measure_error_order, ClosedForm};
use stargraph::rootfinder::{find_roots_in_region, real_roots, solve_branch, special_p0_root, winding_count, DEFAULT_TOL};
use stargraph::secular::oracle_residual;
use stargraph::symmetry::{match_rotated_roots, verify_g_invariance, Conclusion};
use stargraph::{ContourRegion, StarModel};
use stargraph_cli::commands::run;
use stargraph_cli::report::RootReport;

// A1
const A1_QS: [usize; 5] = [2, 3, 4, 5, 8];
const A1_BETAS: [f64; 3] = [0.5, 1.0, 7.0];
const A1_COUNT: usize = 20;
const A1_ORACLE: f64 = 1e-9;
const A1_BUDGET: Duration = Duration::from_secs(2);

// A2 / A3
const A2_QS: [usize; 4] = [3, 4, 5, 8];
const A2_BETA: f64 = 1.0;
const A2_WINDOWS: (u64, u64) = (3, 30);
const A2_BUDGET: Duration = Duration::from_secs(30);
const A3_AGREEMENT: f64 = 1e-9;
const A3_ORACLE: f64 = 1e-8;

// A4
const A4_Q: usize = 8;
const A4_BETA: f64 = 1.0;
const A4_BRANCH: usize = 0;
const A4_WINDOWS: (u64, u64) = (10, 200);
const A4_MIN_R2: f64 = 0.99;
const A4_MIN_GAIN: f64 = 1.0;
const A4_Q3_WINDOWS: (u64, u64) = (2, 8);
const A4_BUDGET: Duration = Duration::from_secs(10);

// A5
const A5_QS: [usize; 3] = [3, 4, 5];
const A5_INVARIANCE_BETAS: [(f64, f64); 2] = [(1.0, 0.0), (2.0, 1.0)];
const A5_SAMPLES: usize = 1000;
const A5_SEED: u64 = 0;
const A5_SHIFT_WINDOWS: (u64, u64) = (3, 20);
const A5_SHIFT_TOL: f64 = 1e-9;
const A5_BUDGET: Duration = Duration::from_secs(10);

// A6
const A6_BETAS: [f64; 3] = [0.3, 0.7, 1.3];
const A6_ORACLE: f64 = 1e-10;
const A6_BUDGET: Duration = Duration::from_secs(1);

struct Outcome {
    passed: bool,
    summary: String,
    details: Vec<String>,
}

fn model(q: usize, beta: Complex64) -> StarModel {
    StarModel::with_beta(q, beta).expect("valid model")
}

fn real_beta(q: usize, beta: f64) -> StarModel {
    model(q, Complex64::new(beta, 0.0))
}

fn within(elapsed: Duration, budget: Duration, details: &mut Vec<String>) -> bool {
    let ok = elapsed < budget;
    details.push(format!(
        "{} runtime {:.3} s (budget {:.0} s)",
        mark(ok),
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    ));
    ok
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn a1_real_subset() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut lattice_ok = true;
    for q in A1_QS {
        for beta in A1_BETAS {
            let m = real_beta(q, beta);
            let roots = real_roots(&m, A1_COUNT).expect("count is positive");
            for (i, pt) in roots.iter().enumerate() {
                let n = (i + 1) as f64;
                lattice_ok &= pt.kappa == Complex64::new(n * std::f64::consts::FRAC_PI_2, 0.0);
                worst = worst.max(oracle_residual(&m, pt.kappa));
            }
        }
    }
    let mut details = vec![
        format!("{} kappa = n pi/2 for n = 1..{A1_COUNT}", mark(lattice_ok)),
        format!("{} max oracle residual {worst:.3e} < {A1_ORACLE:e}", mark(worst < A1_ORACLE)),
    ];
    let time_ok = within(start.elapsed(), A1_BUDGET, &mut details);
    Outcome {
        passed: lattice_ok && worst < A1_ORACLE && time_ok,
        summary: format!("real subset certified for q in {A1_QS:?}, beta in {A1_BETAS:?}"),
        details,
    }
}

fn a2_a3_windows() -> (Outcome, Outcome) {
    let start = Instant::now();
    let mut winding_failures = Vec::new();
    let mut agreement_failures = Vec::new();
    let mut worst_distance = 0.0f64;
    let mut worst_oracle = 0.0f64;
    let mut windows = 0usize;
    let mut roots = 0usize;
    for q in A2_QS {
        let m = real_beta(q, A2_BETA);
        let p = m.p();
        for w in A2_WINDOWS.0..=A2_WINDOWS.1 {
            windows += 1;
            let region = ContourRegion::window(w);
            match winding_count(&m, &region) {
                Ok(k) if k == p as i64 => {}
                Ok(k) => winding_failures.push(format!("q={q} M={w}: winding {k}, expected {p}")),
                Err(e) => winding_failures.push(format!("q={q} M={w}: {e}")),
            }

            let contour = match find_roots_in_region(&m, &region, DEFAULT_TOL) {
                Ok(s) => s.roots,
                Err(e) => {
                    agreement_failures.push(format!("q={q} M={w}: contour search failed: {e}"));
                    continue;
                }
            };
            let mut branch = Vec::new();
            for n in 0..p {
                match solve_branch(&m, w, n, DEFAULT_TOL) {
                    Ok(r) => branch.push(r),
                    Err(e) => agreement_failures.push(format!("q={q} M={w} n={n}: {e}")),
                }
            }
            if contour.len() != branch.len() {
                agreement_failures.push(format!(
                    "q={q} M={w}: {} contour roots vs {} branch roots",
                    contour.len(),
                    branch.len()
                ));
                continue;
            }
            for b in &branch {
                roots += 1;
                let d = contour
                    .iter()
                    .map(|c| (c.kappa - b.kappa).norm())
                    .fold(f64::INFINITY, f64::min);
                worst_distance = worst_distance.max(d);
                if !(d < A3_AGREEMENT) {
                    agreement_failures.push(format!("q={q} M={w} n={:?}: distance {d:e}", b.n));
                }
            }
            for r in contour.iter().chain(&branch) {
                worst_oracle = worst_oracle.max(r.residual_oracle);
                if !(r.residual_oracle < A3_ORACLE) {
                    agreement_failures.push(format!(
                        "q={q} M={w} n={:?}: oracle residual {:e}",
                        r.n, r.residual_oracle
                    ));
                }
            }
        }
    }
    let elapsed = start.elapsed();

    let mut d2 = vec![format!(
        "{} winding = p in {windows} windows ({} mismatches)",
        mark(winding_failures.is_empty()),
        winding_failures.len()
    )];
    d2.extend(winding_failures.iter().map(|f| format!("  {f}")));
    let time_ok = within(elapsed, A2_BUDGET, &mut d2);
    let a2 = Outcome {
        passed: winding_failures.is_empty() && time_ok,
        summary: format!(
            "window winding count equals p for q in {A2_QS:?}, M in [{}, {}]",
            A2_WINDOWS.0, A2_WINDOWS.1
        ),
        details: d2,
    };

    let mut d3 = vec![
        format!(
            "{} {roots} branch roots matched, max distance {worst_distance:.3e} < {A3_AGREEMENT:e}",
            mark(worst_distance < A3_AGREEMENT)
        ),
        format!("{} max oracle residual {worst_oracle:.3e} < {A3_ORACLE:e}", mark(worst_oracle < A3_ORACLE)),
    ];
    d3.extend(agreement_failures.iter().map(|f| format!("  {f}")));
    let a3 = Outcome {
        passed: agreement_failures.is_empty(),
        summary: "contour and branch roots coincide and are oracle-certified".into(),
        details: d3,
    };
    (a2, a3)
}

fn a4_orders() -> Outcome {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut passed = true;

    let m8 = real_beta(A4_Q, A4_BETA);
    let first = measure_error_order(&m8, ClosedForm::First, A4_BRANCH, A4_WINDOWS);
    let second = measure_error_order(&m8, ClosedForm::Second, A4_BRANCH, A4_WINDOWS);
    match (&first, &second) {
        (Ok(f), Ok(s)) => {
            let bound = -(1.0 + 2.0 / (A4_Q - 2) as f64);
            let rate_ok = f.slope <= bound && f.r2 > A4_MIN_R2;
            details.push(format!(
                "{} q={A4_Q} first-order slope {:.4} <= {bound:.4}, r2 {:.6} > {A4_MIN_R2}",
                mark(rate_ok),
                f.slope,
                f.r2
            ));
            let gain = f.slope - s.slope;
            let gain_ok = gain >= A4_MIN_GAIN;
            details.push(format!(
                "{} q={A4_Q} second-order slope {:.4} steeper than first by {gain:.4} >= {A4_MIN_GAIN} (r2 {:.6})",
                mark(gain_ok),
                s.slope,
                s.r2
            ));
            passed &= rate_ok && gain_ok;
        }
        _ => {
            passed = false;
            details.push(format!("FAIL q={A4_Q} measurement: {:?} / {:?}", first.err(), second.err()));
        }
    }

    let m3 = real_beta(3, A4_BETA);
    let first = measure_error_order(&m3, ClosedForm::First, A4_BRANCH, A4_Q3_WINDOWS);
    let second = measure_error_order(&m3, ClosedForm::Second, A4_BRANCH, A4_Q3_WINDOWS);
    match (&first, &second) {
        (Ok(f), Ok(s)) => {
            let gain = f.slope - s.slope;
            let ok = gain >= A4_MIN_GAIN;
            details.push(format!(
                "{} q=3 on M in [{}, {}]: first {:.4}, second {:.4}, gain {gain:.4} >= {A4_MIN_GAIN}",
                mark(ok),
                A4_Q3_WINDOWS.0,
                A4_Q3_WINDOWS.1,
                f.slope,
                s.slope
            ));
            passed &= ok;
        }
        _ => {
            passed = false;
            details.push(format!("FAIL q=3 measurement: {:?} / {:?}", first.err(), second.err()));
        }
    }
    passed &= within(start.elapsed(), A4_BUDGET, &mut details);
    Outcome {
        passed,
        summary: format!(
            "asymptotic error orders, q={A4_Q}, beta={A4_BETA}, n={A4_BRANCH}, M in [{}, {}]",
            A4_WINDOWS.0, A4_WINDOWS.1
        ),
        details,
    }
}

fn a5_symmetry() -> Outcome {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut passed = true;
    for q in A5_QS {
        for (re, im) in A5_INVARIANCE_BETAS {
            let m = model(q, Complex64::new(re, im));
            match verify_g_invariance(&m, A5_SAMPLES, A5_SEED) {
                Ok(r) => {
                    details.push(format!(
                        "{} G invariance q={q} beta={re}{im:+}i: max rel deviation {:.3e} over {} samples",
                        mark(r.passed),
                        r.max_rel_deviation,
                        r.samples
                    ));
                    passed &= r.passed && r.samples == A5_SAMPLES;
                }
                Err(e) => {
                    passed = false;
                    details.push(format!("FAIL G invariance q={q}: {e}"));
                }
            }
        }
    }
    for q in A5_QS {
        let m = real_beta(q, 1.0);
        match match_rotated_roots(&m, A5_SHIFT_WINDOWS.0, A5_SHIFT_WINDOWS.1, A5_SHIFT_TOL) {
            Ok(r) => {
                let ok = r.conclusion == Conclusion::CyclicShiftConfirmed && r.max_distance < A5_SHIFT_TOL;
                details.push(format!(
                    "{} cyclic shift q={q}: {:?}, {} pairs, max distance {:.3e}",
                    mark(ok),
                    r.conclusion,
                    r.pairs.len(),
                    r.max_distance
                ));
                passed &= ok;
            }
            Err(e) => {
                passed = false;
                details.push(format!("FAIL cyclic shift q={q}: {e}"));
            }
        }
    }
    passed &= within(start.elapsed(), A5_BUDGET, &mut details);
    Outcome {
        passed,
        summary: "time-reversal rotation leaves G invariant and shifts branches n -> n+1".into(),
        details,
    }
}

fn a6_special_p0() -> Outcome {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut passed = true;
    for beta in A6_BETAS {
        match special_p0_root(&real_beta(2, beta)) {
            Ok(r) => {
                let ok = r.kappa == Complex64::new(beta, 0.0) && r.residual_oracle < A6_ORACLE;
                details.push(format!(
                    "{} beta={beta}: kappa={} residual {:.3e} < {A6_ORACLE:e}",
                    mark(ok),
                    r.kappa,
                    r.residual_oracle
                ));
                passed &= ok;
            }
            Err(e) => {
                passed = false;
                details.push(format!("FAIL beta={beta}: {e}"));
            }
        }
    }
    passed &= within(start.elapsed(), A6_BUDGET, &mut details);
    Outcome {
        passed,
        summary: "two-edge star has the single root kappa = beta".into(),
        details,
    }
}

fn complex_json(q: &str, threads: &str) -> (i32, String) {
    let r = run([
        "stargraph", "complex", "--q", q, "--beta", "1", "--m-min", "3", "--m-max", "30", "--method", "both",
        "--threads", threads,
    ]);
    (r.exit_code, r.stdout)
}

fn a7_determinism() -> Outcome {
    let mut details = Vec::new();
    let mut passed = true;
    for q in ["3", "5"] {
        let runs: Vec<(i32, String)> = ["1", "8", "1", "8"].iter().map(|t| complex_json(q, t)).collect();
        let identical = runs.iter().all(|r| r == &runs[0]) && runs[0].0 == 0 && !runs[0].1.is_empty();
        details.push(format!(
            "{} q={q}: --threads 1 and --threads 8 emit byte-identical JSON ({} bytes, exit {})",
            mark(identical),
            runs[0].1.len(),
            runs[0].0
        ));
        passed &= identical;

        match RootReport::from_json(&runs[0].1) {
            Ok(report) => {
                let again = report.to_json().unwrap_or_default();
                let bits_equal = RootReport::from_json(&again)
                    .map(|back| {
                        back == report
                            && back.roots.iter().zip(&report.roots).all(|(a, b)| {
                                a.kappa_re.to_bits() == b.kappa_re.to_bits()
                                    && a.kappa_im.to_bits() == b.kappa_im.to_bits()
                                    && a.residual_g.map(f64::to_bits) == b.residual_g.map(f64::to_bits)
                                    && a.residual_oracle.to_bits() == b.residual_oracle.to_bits()
                            })
                    })
                    .unwrap_or(false);
                let ok = again == runs[0].1 && bits_equal;
                details.push(format!(
                    "{} q={q}: JSON -> report -> JSON is lossless ({} roots)",
                    mark(ok),
                    report.roots.len()
                ));
                passed &= ok;
            }
            Err(e) => {
                passed = false;
                details.push(format!("FAIL q={q}: report does not parse: {e}"));
            }
        }
    }
    Outcome {
        passed,
        summary: "deterministic output across thread counts; lossless JSON round trip".into(),
        details,
    }
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Outcome)> = vec![("A1", a1_real_subset())];
    let (a2, a3) = a2_a3_windows();
    results.push(("A2", a2));
    results.push(("A3", a3));
    results.push(("A4", a4_orders()));
    results.push(("A5", a5_symmetry()));
    results.push(("A6", a6_special_p0()));
    results.push(("A7", a7_determinism()));

    let mut failed = Vec::new();
    for (id, o) in &results {
        println!("{id} {} {}", if o.passed { "PASS" } else { "FAIL" }, o.summary);
        for d in &o.details {
            println!("     {d}");
        }
        if !o.passed {
            failed.push(*id);
        }
    }
    println!(
        "\nacceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" ({})", failed.join(", ")) }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
