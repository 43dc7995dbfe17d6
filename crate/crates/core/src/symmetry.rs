//! Checks of the generalized PT symmetry.
//!
//! `T^(q)` rotates the coupling by `e^{-2πi/q}`. Because β enters `G` only
//! through `(iβ)^q`, the spectrum is invariant; at the level of individual
//! branch equations the rotation advances the branch index by one.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{branch_exponent, principal_pow};
use crate::error::Result;
use crate::model::StarModel;
use crate::rootfinder::{self, ComplexRoot};
use crate::secular::eval_reduced;

pub const G_INVARIANCE_TOL: f64 = 1e-12;
pub const BRANCH_SHIFT_TOL: f64 = 1e-12;
/// A match is ambiguous when the runner-up is closer than this factor times the best.
pub const AMBIGUITY_FACTOR: f64 = 2.0;

fn sample_lambda(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(0.0..50.0), rng.random_range(-5.0..5.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub q: usize,
    pub beta: Complex64,
    pub samples: usize,
    pub seed: u64,
    pub max_rel_deviation: f64,
    pub violations: Vec<Complex64>,
    pub passed: bool,
}

/// Compares `G(λ; Tβ)` with `G(λ; β)` on seeded random points of `[0,50]×[−5,5]`.
pub fn verify_g_invariance(model: &StarModel, sample_count: usize, seed: u64) -> Result<InvarianceReport> {
    verify_g_invariance_under(model, &model.time_reversed(), sample_count, seed)
}

/// As [`verify_g_invariance`] for an arbitrary pair of models.
pub fn verify_g_invariance_under(
    model: &StarModel,
    rotated: &StarModel,
    sample_count: usize,
    seed: u64,
) -> Result<InvarianceReport> {
    model.require_branches()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_dev = 0.0f64;
    let mut violations = Vec::new();
    for _ in 0..sample_count {
        let lam = sample_lambda(&mut rng);
        let g0 = eval_reduced(model, lam);
        let g1 = eval_reduced(rotated, lam);
        let dev = (g1 - g0).norm() / (1.0 + g0.norm());
        max_dev = max_dev.max(dev);
        if !(dev < G_INVARIANCE_TOL) {
            violations.push(lam);
        }
    }
    Ok(InvarianceReport {
        q: model.q(),
        beta: model.beta(),
        samples: sample_count,
        seed,
        max_rel_deviation: max_dev,
        passed: violations.is_empty(),
        violations,
    })
}

/// Right-hand side of the unshifted branch equation,
/// `(λ/β)^{1+2/p} e^{iπ(−1/2 + 2n/p)}`, principal power.
pub fn branch_equation_rhs(model: &StarModel, n: usize, lambda: Complex64) -> Complex64 {
    let p = model.p();
    let phase = Complex64::from_polar(1.0, PI * (-0.5 + 2.0 * n as f64 / p as f64));
    principal_pow(lambda / model.beta(), branch_exponent(p)) * phase
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchShiftReport {
    pub q: usize,
    pub beta: Complex64,
    pub samples: usize,
    pub seed: u64,
    /// Worst relative deviation over samples whose rotation stays off the branch cut.
    pub max_rel_deviation: f64,
    /// Samples for which `arg(λ/β)` crosses `π` under the rotation; reported, not failed.
    pub cut_straddling: Vec<Complex64>,
    pub violations: Vec<Complex64>,
    pub passed: bool,
}

/// Checks `RHS_n(λ; Tβ) = RHS_{n+1 mod p}(λ; β)` pointwise for every `n`.
pub fn verify_branch_equation_shift(
    model: &StarModel,
    sample_count: usize,
    seed: u64,
) -> Result<BranchShiftReport> {
    model.require_branches()?;
    let p = model.p();
    let rotated = model.time_reversed();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_dev = 0.0f64;
    let mut cut = Vec::new();
    let mut violations = Vec::new();
    for _ in 0..sample_count {
        let lam = sample_lambda(&mut rng);
        // λ/(Tβ) = (λ/β)·e^{2πi/q}: the cut at π is crossed when the shifted
        // argument leaves (−π, π].
        let shifted = (lam / model.beta()).arg() + 2.0 * PI / model.q() as f64;
        if shifted > PI {
            cut.push(lam);
            continue;
        }
        for n in 0..p {
            let lhs = branch_equation_rhs(&rotated, n, lam);
            let rhs = branch_equation_rhs(model, (n + 1) % p, lam);
            let dev = (lhs - rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE);
            max_dev = max_dev.max(dev);
            if !(dev < BRANCH_SHIFT_TOL) {
                violations.push(lam);
            }
        }
    }
    violations.dedup();
    Ok(BranchShiftReport {
        q: model.q(),
        beta: model.beta(),
        samples: sample_count,
        seed,
        max_rel_deviation: max_dev,
        passed: violations.is_empty(),
        cut_straddling: cut,
        violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    CyclicShiftConfirmed,
    Mismatch,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootPairing {
    #[serde(rename = "M")]
    pub m: u64,
    pub n_source: usize,
    pub n_matched: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationReport {
    pub q: usize,
    #[serde(rename = "M_range")]
    pub m_range: (u64, u64),
    /// Expected index advance: `n_matched = n_source + shift mod p`.
    pub shift: usize,
    pub pairs: Vec<RootPairing>,
    pub max_distance: f64,
    pub tolerance: f64,
    pub conclusion: Conclusion,
}

fn branch_roots(model: &StarModel, m: u64, tol: f64) -> Result<Vec<ComplexRoot>> {
    (0..model.p())
        .map(|n| rootfinder::solve_branch(model, m, n, tol))
        .collect()
}

/// Matches branch roots of `target` to those of `source` window by window and
/// checks that the pairing is `n -> n + shift mod p`.
pub fn match_roots_between(
    source: &StarModel,
    target: &StarModel,
    shift: usize,
    m_min: u64,
    m_max: u64,
    tol: f64,
) -> Result<PermutationReport> {
    source.require_branches()?;
    target.require_branches()?;
    let p = source.p();
    let per_window: Vec<Vec<RootPairing>> = (m_min..=m_max)
        .into_par_iter()
        .map(|m| -> Result<Vec<RootPairing>> {
            let originals = branch_roots(source, m, rootfinder::DEFAULT_TOL)?;
            let moved = branch_roots(target, m, rootfinder::DEFAULT_TOL)?;
            Ok(moved
                .iter()
                .enumerate()
                .map(|(n_source, r)| {
                    let mut d: Vec<(usize, f64)> = originals
                        .iter()
                        .enumerate()
                        .map(|(k, o)| (k, (o.kappa - r.kappa).norm()))
                        .collect();
                    d.sort_by(|a, b| a.1.total_cmp(&b.1));
                    let (n_matched, distance) = d[0];
                    RootPairing {
                        m,
                        n_source,
                        n_matched,
                        distance: if d.len() > 1 && d[1].1 < AMBIGUITY_FACTOR * distance {
                            // Mark ambiguity by a negative distance; resolved below.
                            -distance - f64::MIN_POSITIVE
                        } else {
                            distance
                        },
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut pairs: Vec<RootPairing> = per_window.into_iter().flatten().collect();
    let ambiguous = pairs.iter().any(|r| r.distance < 0.0);
    for r in &mut pairs {
        r.distance = r.distance.abs();
    }
    let max_distance = pairs.iter().map(|r| r.distance).fold(0.0, f64::max);
    let shifted_ok = pairs
        .iter()
        .all(|r| r.n_matched == (r.n_source + shift) % p && r.distance < tol);
    let conclusion = if ambiguous {
        Conclusion::Ambiguous
    } else if shifted_ok {
        Conclusion::CyclicShiftConfirmed
    } else {
        Conclusion::Mismatch
    };
    Ok(PermutationReport {
        q: source.q(),
        m_range: (m_min, m_max),
        shift,
        pairs,
        max_distance,
        tolerance: tol,
        conclusion,
    })
}

/// Solves all branches for β and `Tβ` and checks `ε_[n](Tβ) = ε_[n+1](β)`.
pub fn match_rotated_roots(model: &StarModel, m_min: u64, m_max: u64, tol: f64) -> Result<PermutationReport> {
    match_roots_between(model, &model.time_reversed(), 1, m_min, m_max, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(q: usize, beta: Complex64) -> StarModel {
        StarModel::with_beta(q, beta).unwrap()
    }

    #[test]
    fn g_invariance_examples() {
        let r = verify_g_invariance(&model(3, Complex64::new(1.0, 0.0)), 1000, 7).unwrap();
        assert!(r.passed && r.max_rel_deviation < 1e-12);
        let r = verify_g_invariance(&model(4, Complex64::new(2.0, 1.0)), 1000, 7).unwrap();
        assert!(r.passed && r.max_rel_deviation < 1e-12);
    }

    #[test]
    fn full_turn_is_identity() {
        let m = model(5, Complex64::new(1.0, 0.3));
        let back = m.time_reversed_n(5);
        assert!((back.beta() - m.beta()).norm() < 1e-12 * m.beta().norm());
        let r = verify_g_invariance_under(&m, &back, 500, 3).unwrap();
        assert!(r.passed);
    }

    #[test]
    fn branch_shift_example_q4() {
        let m = model(4, Complex64::new(1.0, 0.0));
        let lam = Complex64::new(3.0, 0.1);
        let lhs = branch_equation_rhs(&m.time_reversed(), 0, lam);
        let rhs = branch_equation_rhs(&m, 1, lam);
        assert!((lhs - rhs).norm() < 1e-13 * rhs.norm());
    }

    #[test]
    fn branch_shift_is_trivial_for_p1() {
        let m = model(3, Complex64::new(1.0, 0.0));
        let r = verify_branch_equation_shift(&m, 400, 11).unwrap();
        assert!(r.passed);
    }

    #[test]
    fn branch_shift_sampled() {
        for q in [4, 5, 8] {
            let r = verify_branch_equation_shift(&model(q, Complex64::new(1.0, 0.0)), 1000, 5).unwrap();
            assert!(r.passed, "q={q}: {:?}", r.violations);
            assert!(r.max_rel_deviation < 1e-12);
        }
    }

    #[test]
    fn rotated_roots_shift_branches() {
        for q in [3, 4, 5] {
            let r = match_rotated_roots(&model(q, Complex64::new(1.0, 0.0)), 3, 8, 1e-9).unwrap();
            assert_eq!(r.conclusion, Conclusion::CyclicShiftConfirmed, "q={q}: {r:?}");
            assert!(r.max_distance < 1e-9);
        }
    }
}
