//! Invariant suites run by `stargraph verify`.
//!
//! Each suite is a list of named checks with a JSON detail record; the run
//! passes only if every check passes.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use stargraph::asymptotics::{measure_error_order, ClosedForm, OrderReport};
use stargraph::rootfinder::{real_roots, solve_windows, special_p0_root, G_RESIDUAL_BOUND, ORACLE_BOUND};
use stargraph::secular::oracle_residual;
use stargraph::symmetry::{match_rotated_roots, verify_branch_equation_shift, verify_g_invariance, Conclusion};
use stargraph::StarModel;

use crate::report::{ModelInfo, SCHEMA_VERSION};
use crate::Result;

/// Oracle bound for the β-independent lattice.
pub const REAL_ORACLE_BOUND: f64 = 1e-9;
/// Oracle bound for the two-edge special root.
pub const SPECIAL_ORACLE_BOUND: f64 = 1e-10;
pub const INVARIANCE_SAMPLES: usize = 1000;
pub const SHIFT_WINDOWS: (u64, u64) = (3, 20);
pub const SHIFT_TOL: f64 = 1e-9;
pub const REAL_COUNT: usize = 20;
pub const COMPLEX_WINDOWS: (u64, u64) = (3, 30);
pub const FIRST_ORDER_WINDOWS: (u64, u64) = (10, 200);
pub const SECOND_ORDER_WINDOWS: (u64, u64) = (10, 200);
/// For `p = 1` the second-order error reaches the double-precision floor
/// beyond a handful of windows.
pub const SECOND_ORDER_WINDOWS_P1: (u64, u64) = (2, 8);
pub const MIN_R2: f64 = 0.99;
pub const MIN_ORDER_GAIN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Symmetry,
    Oracle,
    Asymptotics,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: Value,
}

impl Check {
    fn new(name: &str, passed: bool, detail: Value) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    fn from_error(name: &str, err: impl std::fmt::Display) -> Self {
        Self::new(name, false, json!({ "error": err.to_string() }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: String,
    pub suite: Suite,
    pub model: ModelInfo,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub settings: BTreeMap<String, Value>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

pub fn symmetry_checks(model: &StarModel, seed: u64) -> Result<Vec<Check>> {
    model.require_branches()?;
    let mut checks = Vec::new();

    let inv = verify_g_invariance(model, INVARIANCE_SAMPLES, seed)?;
    checks.push(Check::new("g_invariance", inv.passed, to_value(&inv)));

    let shift = verify_branch_equation_shift(model, INVARIANCE_SAMPLES, seed)?;
    checks.push(Check::new("branch_equation_shift", shift.passed, to_value(&shift)));

    match match_rotated_roots(model, SHIFT_WINDOWS.0, SHIFT_WINDOWS.1, SHIFT_TOL) {
        Ok(r) => checks.push(Check::new(
            "cyclic_shift",
            r.conclusion == Conclusion::CyclicShiftConfirmed,
            to_value(&r),
        )),
        Err(e) => checks.push(Check::from_error("cyclic_shift", e)),
    }
    Ok(checks)
}

pub fn oracle_checks(model: &StarModel, tol: f64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    let lattice = real_roots(model, REAL_COUNT)?;
    let worst = lattice
        .iter()
        .map(|pt| oracle_residual(model, pt.kappa))
        .fold(0.0f64, f64::max);
    checks.push(Check::new(
        "real_lattice",
        worst < REAL_ORACLE_BOUND,
        json!({ "count": REAL_COUNT, "max_residual_oracle": worst, "bound": REAL_ORACLE_BOUND }),
    ));

    if model.q() == 2 {
        match special_p0_root(model) {
            Ok(root) => {
                let beta = model.beta();
                let passed = root.residual_oracle < SPECIAL_ORACLE_BOUND
                    && (root.kappa - Complex64::new(beta.re, 0.0)).norm() == 0.0;
                checks.push(Check::new(
                    "special_p0",
                    passed,
                    json!({
                        "kappa_re": root.kappa.re,
                        "kappa_im": root.kappa.im,
                        "residual_oracle": root.residual_oracle,
                        "bound": SPECIAL_ORACLE_BOUND,
                    }),
                ));
            }
            Err(e) => checks.push(Check::from_error("special_p0", e)),
        }
        return Ok(checks);
    }

    let results = solve_windows(model, COMPLEX_WINDOWS.0, COMPLEX_WINDOWS.1, tol);
    let mut failures = Vec::new();
    let mut worst_g = 0.0f64;
    let mut worst_oracle = 0.0f64;
    for ((m, n), r) in &results {
        match r {
            Ok(root) => {
                worst_g = worst_g.max(root.residual_g);
                worst_oracle = worst_oracle.max(root.residual_oracle);
                if !root.is_certified() {
                    failures.push(json!({ "M": m, "n": n, "residual_g": root.residual_g, "residual_oracle": root.residual_oracle }));
                }
            }
            Err(e) => failures.push(json!({ "M": m, "n": n, "error": e.to_string() })),
        }
    }
    checks.push(Check::new(
        "complex_windows",
        failures.is_empty(),
        json!({
            "M_range": [COMPLEX_WINDOWS.0, COMPLEX_WINDOWS.1],
            "roots": results.len(),
            "max_residual_g": worst_g,
            "max_residual_oracle": worst_oracle,
            "g_bound": G_RESIDUAL_BOUND,
            "oracle_bound": ORACLE_BOUND,
            "failures": failures,
        }),
    ));
    Ok(checks)
}

/// Windows on which the second-order gain is measured for a given `p`.
pub fn second_order_windows(p: usize) -> (u64, u64) {
    if p == 1 {
        SECOND_ORDER_WINDOWS_P1
    } else {
        SECOND_ORDER_WINDOWS
    }
}

/// Convergence-order checks for branch `n = 0`.
///
/// The first-order error must decay at least as fast as claimed with a clean
/// power-law fit; the second-order error must decay at least one power of
/// `M` faster than the first-order error on the same windows.
pub fn asymptotics_checks(model: &StarModel) -> Result<Vec<Check>> {
    model.require_branches()?;
    let p = model.p();
    let mut checks = Vec::new();

    match measure_error_order(model, ClosedForm::First, 0, FIRST_ORDER_WINDOWS) {
        Ok(r) => checks.push(Check::new(
            "first_order_rate",
            r.slope <= r.claimed_exponent && r.r2 > MIN_R2,
            order_detail(&r),
        )),
        Err(e) => checks.push(Check::from_error("first_order_rate", e)),
    }

    let windows = second_order_windows(p);
    let pair = measure_error_order(model, ClosedForm::First, 0, windows)
        .and_then(|f| measure_error_order(model, ClosedForm::Second, 0, windows).map(|s| (f, s)));
    match pair {
        Ok((first, second)) => {
            let gain = first.slope - second.slope;
            checks.push(Check::new(
                "second_order_gain",
                gain >= MIN_ORDER_GAIN,
                json!({
                    "M_range": [windows.0, windows.1],
                    "first_slope": first.slope,
                    "second_slope": second.slope,
                    "gain": gain,
                    "required_gain": MIN_ORDER_GAIN,
                    "second_claimed_exponent": second.claimed_exponent,
                    "second_r2": second.r2,
                }),
            ));
        }
        Err(e) => checks.push(Check::from_error("second_order_gain", e)),
    }
    Ok(checks)
}

fn order_detail(r: &OrderReport) -> Value {
    json!({
        "M_range": [r.m_range.0, r.m_range.1],
        "slope": r.slope,
        "claimed_exponent": r.claimed_exponent,
        "r2": r.r2,
        "min_r2": MIN_R2,
        "samples": r.fit.samples,
    })
}

pub fn run_suite(
    model: &StarModel,
    suite: Suite,
    seed: u64,
    tol: f64,
    settings: BTreeMap<String, Value>,
) -> Result<VerifyReport> {
    let checks = match suite {
        Suite::Symmetry => symmetry_checks(model, seed)?,
        Suite::Oracle => oracle_checks(model, tol)?,
        Suite::Asymptotics => asymptotics_checks(model)?,
        Suite::All => {
            let mut all = oracle_checks(model, tol)?;
            if model.p() >= 1 {
                all.extend(symmetry_checks(model, seed)?);
                all.extend(asymptotics_checks(model)?);
            }
            all
        }
    };
    Ok(VerifyReport {
        schema_version: SCHEMA_VERSION.to_string(),
        suite,
        model: ModelInfo::of(model),
        passed: checks.iter().all(|c| c.passed),
        checks,
        settings,
    })
}
