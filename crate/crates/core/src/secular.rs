//! Secular functions of the star model and the boundary-matrix oracle.
//!
//! Root finding works with the entire function
//!
//! ```text
//! G(λ) = (iβ)^(p+2) sin^p λ + λ^(p+2) cos^p λ
//! ```
//!
//! whose zeros away from the origin are the β-dependent roots. The oracle is
//! built from the edge equations and vertex conditions alone and never uses
//! `G`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{EdgePermutation, StarModel};

/// Above this `|Im λ|` the trigonometric factors are evaluated with
/// `e^{|Im λ|}` factored out.
pub const SCALING_THRESHOLD: f64 = 20.0;

/// Distance to an odd multiple of π/2 below which the quotient form is refused.
pub const POLE_GUARD: f64 = 1e-9;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A point `λ = (2M+1)π/2 + ε` with the half-odd anchor kept symbolic.
///
/// Near the anchor `cos λ = -(-1)^M sin ε` is then available to full relative
/// precision, which a single `f64` for `λ` cannot provide once `|ε|` drops
/// below the spacing of doubles around `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPoint {
    pub m: i64,
    pub eps: Complex64,
}

impl WindowPoint {
    pub fn new(m: i64, eps: Complex64) -> Self {
        Self { m, eps }
    }

    /// Anchors `lambda` at the nearest half-odd multiple of π.
    pub fn from_lambda(lambda: Complex64) -> Self {
        let m = (lambda.re / PI - 0.5).round() as i64;
        Self {
            m,
            eps: lambda - window_center(m),
        }
    }

    pub fn center(&self) -> f64 {
        window_center(self.m)
    }

    pub fn lambda(&self) -> Complex64 {
        self.eps + self.center()
    }

    /// Moves the anchor to the nearest half-odd multiple if `ε` has drifted.
    pub fn reanchored(self) -> Self {
        if self.eps.re.abs() > FRAC_PI_2 {
            Self::from_lambda(self.lambda())
        } else {
            self
        }
    }

    fn sign(&self) -> f64 {
        if self.m.rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// `(2M+1)π/2`.
pub fn window_center(m: i64) -> f64 {
    (2 * m + 1) as f64 * FRAC_PI_2
}

/// Value of `G` or `G'` as `mantissa · e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mantissa: Complex64,
    pub log_scale: f64,
}

impl Scaled {
    pub fn value(&self) -> Complex64 {
        self.mantissa * self.log_scale.exp()
    }

    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }

    pub fn arg(&self) -> f64 {
        self.mantissa.arg()
    }
}

/// `G`, `G'` and the size of the two terms of `G`, sharing one scale factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedEval {
    pub g: Complex64,
    pub dg: Complex64,
    /// `|(iβ)^q sin^p λ| + |λ^q cos^p λ|`; the natural yardstick for `|G|`.
    pub term_scale: f64,
    /// Same for the three terms of `G'`.
    pub derivative_scale: f64,
    pub log_scale: f64,
}

impl ReducedEval {
    /// `|G| / term_scale`, the cancellation-relative residual.
    pub fn relative_residual(&self) -> f64 {
        if self.term_scale == 0.0 {
            0.0
        } else {
            self.g.norm() / self.term_scale
        }
    }
}

/// `(sin z, cos z, s)` with both factors multiplied by `e^{-s}`, `s = |Im z|`
/// when that exceeds the scaling threshold and `0` otherwise.
fn scaled_sin_cos(z: Complex64) -> (Complex64, Complex64, f64) {
    let y = z.im.abs();
    if y <= SCALING_THRESHOLD {
        return (z.sin(), z.cos(), 0.0);
    }
    // e^{iz} e^{-y} and e^{-iz} e^{-y}, one of them underflows harmlessly.
    let (sx, cx) = z.re.sin_cos();
    let plus = Complex64::new(cx, sx) * (-z.im - y).exp();
    let minus = Complex64::new(cx, -sx) * (z.im - y).exp();
    let s = (plus - minus) / (2.0 * I);
    let c = (plus + minus) / 2.0;
    (s, c, y)
}

fn ipow(z: Complex64, k: usize) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut base = z;
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// `(iβ)^q`, the only way β enters `G`.
pub fn coupling_power(model: &StarModel) -> Complex64 {
    ipow(I * model.beta(), model.q())
}

fn reduced_from_trig(
    model: &StarModel,
    lambda: Complex64,
    s: Complex64,
    c: Complex64,
    log_scale: f64,
) -> ReducedEval {
    let p = model.p();
    let q = model.q();
    let a = coupling_power(model);
    let sp = ipow(s, p);
    let cp = ipow(c, p);
    let lq1 = ipow(lambda, q - 1);
    let lq = lq1 * lambda;

    let t1 = a * sp;
    let t2 = lq * cp;
    let g = t1 + t2;

    let d2 = (q as f64) * lq1 * cp;
    let (d1, d3) = if p == 0 {
        (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
    } else {
        let pf = p as f64;
        (
            pf * a * ipow(s, p - 1) * c,
            -pf * lq * ipow(c, p - 1) * s,
        )
    };
    ReducedEval {
        g,
        dg: d1 + d2 + d3,
        term_scale: t1.norm() + t2.norm(),
        derivative_scale: d1.norm() + d2.norm() + d3.norm(),
        log_scale: p as f64 * log_scale,
    }
}

/// `G(λ)` and `G'(λ)` at a plain complex point, in scaled form.
pub fn reduced_eval(model: &StarModel, lambda: Complex64) -> ReducedEval {
    let (s, c, ls) = scaled_sin_cos(lambda);
    reduced_from_trig(model, lambda, s, c, ls)
}

/// `G` and `G'` at `λ = (2M+1)π/2 + ε`, using `sin λ = (-1)^M cos ε` and
/// `cos λ = -(-1)^M sin ε`.
pub fn reduced_eval_window(model: &StarModel, point: WindowPoint) -> ReducedEval {
    let (se, ce, ls) = scaled_sin_cos(point.eps);
    let sign = point.sign();
    reduced_from_trig(model, point.lambda(), ce * sign, -se * sign, ls)
}

/// `G(λ) = (iβ)^{p+2} sin^p λ + λ^{p+2} cos^p λ`.
///
/// Overflows to infinity for very large `|Im λ|`; use [`eval_reduced_scaled`]
/// there.
pub fn eval_reduced(model: &StarModel, lambda: Complex64) -> Complex64 {
    let r = reduced_eval(model, lambda);
    r.g * r.log_scale.exp()
}

pub fn eval_reduced_scaled(model: &StarModel, lambda: Complex64) -> Scaled {
    let r = reduced_eval(model, lambda);
    Scaled {
        mantissa: r.g,
        log_scale: r.log_scale,
    }
}

/// Analytic `G'(λ)`.
pub fn eval_reduced_derivative(model: &StarModel, lambda: Complex64) -> Complex64 {
    let r = reduced_eval(model, lambda);
    r.dg * r.log_scale.exp()
}

/// Distance from `kappa` to the nearest odd multiple of π/2.
pub fn pole_distance(kappa: Complex64) -> f64 {
    (kappa - window_center(WindowPoint::from_lambda(kappa).m)).norm()
}

/// Left-hand side of the secular equation taken literally:
///
/// ```text
/// [κ^{p+2} + (iβ)^{p+2} tan^p κ] / [κ^{p+2} − (iβ)^{p+2} tan^{p+2} κ] · tan κ
/// ```
pub fn eval_quotient(model: &StarModel, kappa: Complex64) -> Result<Complex64> {
    if pole_distance(kappa) < POLE_GUARD {
        return Err(Error::PoleAdjacent(kappa));
    }
    let q = model.q();
    let p = model.p();
    let a = coupling_power(model);
    let t = kappa.tan();
    let kq = ipow(kappa, q);
    let num = kq + a * ipow(t, p);
    let den = kq - a * ipow(t, q);
    Ok(num / den * t)
}

/// The `2q × 2q` linear system of the boundary conditions at wavenumber `k`.
///
/// Unknowns are ordered `(A_0..A_{q-1}, B_0..B_{q-1})` for edge waves
/// `ψ_j(y) = A_j cos(ky) + B_j sin(ky)`. Rows: `q` Robin conditions at the
/// outer ends, `q - 1` continuity conditions at the vertex, one Kirchhoff row.
#[derive(Debug, Clone)]
pub struct BoundarySystem {
    pub model: StarModel,
    pub k: Complex64,
    pub matrix: DMatrix<Complex64>,
}

impl BoundarySystem {
    /// `σ_min / σ_max`; zero exactly when the system is singular.
    pub fn singular_value_ratio(&self) -> f64 {
        let sv = self.matrix.singular_values();
        let max = sv.max();
        if max == 0.0 {
            return 0.0;
        }
        sv.min() / max
    }
}

pub fn boundary_matrix(model: &StarModel, k: Complex64) -> BoundarySystem {
    boundary_matrix_relabeled(model, k, &EdgePermutation::identity(model.q()))
}

/// As [`boundary_matrix`] with physical edge `j` stored under label `perm(j)`.
pub fn boundary_matrix_relabeled(
    model: &StarModel,
    k: Complex64,
    perm: &EdgePermutation,
) -> BoundarySystem {
    let q = model.q();
    assert_eq!(perm.len(), q, "permutation size must equal q");
    let kappa = k * model.length();
    let (s, c) = (kappa.sin(), kappa.cos());
    let a_col = |j: usize| perm.apply(j);
    let b_col = |j: usize| q + perm.apply(j);
    let mut m = DMatrix::<Complex64>::zeros(2 * q, 2 * q);

    // Robin: ψ_j'(0) measured along the outward direction equals
    // iα e^{ijφ} ψ_j(0), i.e. k B_j + iα e^{ijφ} A_j = 0 in the inward
    // coordinate y.
    for j in 0..q {
        let row = perm.apply(j);
        let phase = Complex64::from_polar(1.0, j as f64 * model.phi());
        m[(row, a_col(j))] = I * model.alpha() * phase;
        m[(row, b_col(j))] = k;
    }
    // Continuity at the vertex: ψ_j(L) = ψ_0(L).
    for j in 1..q {
        let row = q + perm.apply(j) - usize::from(perm.apply(j) > perm.apply(0));
        m[(row, a_col(j))] = c;
        m[(row, b_col(j))] = s;
        m[(row, a_col(0))] = -c;
        m[(row, b_col(0))] = -s;
    }
    // Kirchhoff: Σ_j ψ_j'(L) = 0.
    let last = 2 * q - 1;
    for j in 0..q {
        m[(last, a_col(j))] = -k * s;
        m[(last, b_col(j))] = k * c;
    }
    BoundarySystem {
        model: *model,
        k,
        matrix: m,
    }
}

/// `σ_min/σ_max` of the boundary system at `k = κ/L`; below `1e-8` certifies a root.
pub fn oracle_residual(model: &StarModel, kappa: Complex64) -> f64 {
    boundary_matrix(model, kappa / model.length()).singular_value_ratio()
}
