//! Large-`M` approximations of the window offsets `ε_[n](β, M)`.
//!
//! Near `λ = (M+1/2)π` the reduced equation splits into `p` branch equations
//!
//! ```text
//! tan ε = (β / ((M+1/2)π + ε))^{1+2/p} · e^{-iπ(1/2 + 2n/p)},   n = 0..p-1
//! ```
//!
//! The fractional power is always the principal one; the branch is carried by
//! the explicit phase factor only.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::StarModel;
use crate::rootfinder;

/// Denominators of the second-order estimate below this are refused.
pub const RESONANCE_GUARD: f64 = 1e-12;

/// Relative errors below `100 ε_mach` are floating-point noise and dropped from fits.
pub const NOISE_FLOOR: f64 = 100.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateOrder {
    First,
    Second,
    Iterated { iterations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticEstimate {
    pub m: u64,
    pub n: usize,
    pub order: EstimateOrder,
    pub epsilon: Complex64,
    /// Exponent `e` in the claimed relative error `O(M^e)`; `None` for iterates.
    pub claimed_rel_error_exponent: Option<f64>,
}

impl AsymptoticEstimate {
    pub fn kappa(&self) -> Complex64 {
        self.epsilon + half_integer(self.m)
    }
}

/// `1 + 2/p`.
pub fn branch_exponent(p: usize) -> f64 {
    1.0 + 2.0 / p as f64
}

/// `e^{-iπ(1/2 + 2n/p)}`.
pub fn branch_phase(p: usize, n: usize) -> Complex64 {
    Complex64::from_polar(1.0, -PI * (0.5 + 2.0 * n as f64 / p as f64))
}

/// `(M + 1/2)π`.
pub fn half_integer(m: u64) -> f64 {
    (m as f64 + 0.5) * PI
}

/// Principal power `exp(a Log z)` with `arg z ∈ (-π, π]`.
pub fn principal_pow(z: Complex64, a: f64) -> Complex64 {
    if z.re == 0.0 && z.im == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::from_polar(z.norm().powf(a), a * z.arg())
}

/// Right-hand side of the shifted branch equation at offset `eps`.
pub fn branch_rhs(model: &StarModel, m: u64, n: usize, eps: Complex64) -> Complex64 {
    let p = model.p();
    principal_pow(model.beta() / (eps + half_integer(m)), branch_exponent(p)) * branch_phase(p, n)
}

/// Leading-order offset `(β/((M+1/2)π))^{1+2/p} e^{-iπ(1/2+2n/p)}`.
pub fn estimate_first_order(model: &StarModel, m: u64, n: usize) -> Result<AsymptoticEstimate> {
    model.check_branch(n)?;
    let p = model.p();
    let a = branch_exponent(p);
    let base = model.beta() / half_integer(m);
    Ok(AsymptoticEstimate {
        m,
        n,
        order: EstimateOrder::First,
        epsilon: principal_pow(base, a) * branch_phase(p, n),
        claimed_rel_error_exponent: Some(-a),
    })
}

/// Next-order offset
/// `(M+1/2)π / [(1+2/p) + β^{-1-2/p} ((M+1/2)π)^{2+2/p} e^{iπ(1/2+2n/p)}]`.
pub fn estimate_second_order(model: &StarModel, m: u64, n: usize) -> Result<AsymptoticEstimate> {
    model.check_branch(n)?;
    let p = model.p();
    let a = branch_exponent(p);
    let lam = half_integer(m);
    let inv_beta = principal_pow(model.beta(), -a);
    let den = a + inv_beta * lam.powf(1.0 + a) / branch_phase(p, n);
    if !(den.norm() > RESONANCE_GUARD) {
        return Err(Error::ResonantDenominator { m, n });
    }
    Ok(AsymptoticEstimate {
        m,
        n,
        order: EstimateOrder::Second,
        epsilon: lam / den,
        claimed_rel_error_exponent: Some(-(3.0 + 4.0 / p as f64)),
    })
}

/// Fixed-point iteration `ε ← arctan(RHS_n(ε))` from the first-order seed.
pub fn refine_iteratively(
    model: &StarModel,
    m: u64,
    n: usize,
    max_iters: usize,
    tol: f64,
) -> Result<AsymptoticEstimate> {
    let seed = estimate_first_order(model, m, n)?;
    let mut prev = seed.epsilon;
    for k in 1..=max_iters {
        let next = branch_rhs(model, m, n, prev).atan();
        if !(next.re.is_finite() && next.im.is_finite()) {
            return Err(Error::NoConvergence {
                iterations: k,
                previous: prev,
                last: next,
            });
        }
        if (next - prev).norm() < tol {
            return Ok(AsymptoticEstimate {
                m,
                n,
                order: EstimateOrder::Iterated { iterations: k },
                epsilon: next,
                claimed_rel_error_exponent: None,
            });
        }
        if k == max_iters {
            return Err(Error::NoConvergence {
                iterations: k,
                previous: prev,
                last: next,
            });
        }
        prev = next;
    }
    // max_iters == 0: the seed itself is the answer.
    Ok(AsymptoticEstimate {
        order: EstimateOrder::Iterated { iterations: 0 },
        claimed_rel_error_exponent: None,
        ..seed
    })
}

/// Least-squares fit of `log(error)` against `log(M)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub samples: Vec<(u64, f64)>,
    /// Samples dropped as non-positive or below the noise floor.
    pub excluded: Vec<(u64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_error_order(samples: &[(u64, f64)]) -> Result<OrderFit> {
    let (used, excluded): (Vec<_>, Vec<_>) = samples
        .iter()
        .copied()
        .partition(|&(m, e)| m > 0 && e.is_finite() && e > NOISE_FLOOR);
    let mut ms: Vec<u64> = used.iter().map(|s| s.0).collect();
    ms.sort_unstable();
    ms.dedup();
    if ms.len() < 5 || ms.len() != used.len() {
        return Err(Error::InsufficientSamples(ms.len()));
    }

    let xs: Vec<f64> = used.iter().map(|s| (s.0 as f64).ln()).collect();
    let ys: Vec<f64> = used.iter().map(|s| s.1.ln()).collect();
    let len = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / len;
    let my = ys.iter().sum::<f64>() / len;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(OrderFit {
        samples: used,
        excluded,
        slope,
        intercept,
        r_squared,
    })
}

/// Which closed-form estimate an order measurement refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedForm {
    First,
    Second,
}

impl ClosedForm {
    pub fn claimed_exponent(self, p: usize) -> f64 {
        match self {
            ClosedForm::First => -branch_exponent(p),
            ClosedForm::Second => -(3.0 + 4.0 / p as f64),
        }
    }

    fn estimate(self, model: &StarModel, m: u64, n: usize) -> Result<AsymptoticEstimate> {
        match self {
            ClosedForm::First => estimate_first_order(model, m, n),
            ClosedForm::Second => estimate_second_order(model, m, n),
        }
    }
}

/// Relative error `|ε_estimate − ε_root| / |ε_root|` against a Newton-polished root.
pub fn relative_error(model: &StarModel, form: ClosedForm, m: u64, n: usize) -> Result<f64> {
    let est = form.estimate(model, m, n)?;
    let root = rootfinder::solve_branch(model, m, n, rootfinder::DEFAULT_TOL)?;
    let eps = root
        .epsilon
        .ok_or(Error::WindowEscape { m, n, modulus: f64::INFINITY })?;
    Ok((est.epsilon - eps).norm() / eps.norm())
}

/// Serializable summary of one measured convergence order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub q: usize,
    pub beta: Complex64,
    pub n: usize,
    pub order: ClosedForm,
    pub slope: f64,
    pub claimed_exponent: f64,
    pub r2: f64,
    #[serde(rename = "M_range")]
    pub m_range: (u64, u64),
    pub fit: OrderFit,
}

/// Samples the relative error of `form` for every `M` in `m_range` and fits its order.
pub fn measure_error_order(
    model: &StarModel,
    form: ClosedForm,
    n: usize,
    m_range: (u64, u64),
) -> Result<OrderReport> {
    model.check_branch(n)?;
    let samples = (m_range.0..=m_range.1)
        .into_par_iter()
        .map(|m| relative_error(model, form, m, n).map(|e| (m, e)))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_error_order(&samples)?;
    Ok(OrderReport {
        q: model.q(),
        beta: model.beta(),
        n,
        order: form,
        slope: fit.slope,
        claimed_exponent: form.claimed_exponent(model.p()),
        r2: fit.r_squared,
        m_range,
        fit,
    })
}
