//! Root location for the star model.
//!
//! The real subset is the lattice `nπ/2`. The β-dependent subset is found
//! either by argument-principle subdivision of a region followed by Newton
//! polishing on `G`, or branch by branch from the asymptotic seeds. Every
//! complex root is polished in window coordinates `(M, ε)` and certified by
//! both the `G` residual and the boundary-matrix oracle.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    branch_exponent, branch_phase, branch_rhs, estimate_first_order, estimate_second_order,
    half_integer, principal_pow,
};
use crate::error::{Error, Result};
use crate::model::{SpectralPoint, StarModel};
use crate::secular::{
    oracle_residual, reduced_eval, reduced_eval_window, window_center, WindowPoint,
};

pub const DEFAULT_TOL: f64 = 1e-13;
pub const MAX_NEWTON_ITERS: usize = 50;
/// Roots closer than this in κ are one root.
pub const DEDUP_DISTANCE: f64 = 1e-8;
/// Radius of the disc around `(2M+1)π/2` that defines window `M`.
pub const WINDOW_RADIUS: f64 = FRAC_PI_4;
pub const DEFAULT_IM_BOUND: f64 = 10.0;
/// Bound on `|G|/scale` for a reported root.
pub const G_RESIDUAL_BOUND: f64 = 1e-10;
/// Bound on `σ_min/σ_max` for a reported root.
pub const ORACLE_BOUND: f64 = 1e-8;
/// Zeros of `G` this close to the origin are the excluded `κ = 0`.
pub const ORIGIN_EXCLUSION: f64 = 1e-6;

const INITIAL_SAMPLES_PER_SIDE: usize = 64;
const MAX_BOUNDARY_SAMPLES: usize = 1 << 20;
const MAX_DEPTH: usize = 80;
const SPLIT_FRACTIONS: [f64; 6] = [0.4863, 0.5391, 0.4281, 0.5717, 0.3529, 0.6473];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Contour,
    Branch,
    SpecialP0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootFlag {
    /// `|G'|` vanished during Newton; multiplicity is not resolved.
    PossibleMultipleRoot,
    /// The nearest asymptotic seed disagrees with, or does not clearly pick,
    /// the branch label.
    AmbiguousBranchLabel,
}

/// A certified root of the β-dependent subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexRoot {
    pub kappa: Complex64,
    /// `κ − (2M+1)π/2`, present when the root lies in window `M`.
    pub epsilon: Option<Complex64>,
    pub m: Option<u64>,
    pub n: Option<usize>,
    pub residual_g: f64,
    pub residual_oracle: f64,
    pub method: Method,
    pub flags: Vec<RootFlag>,
}

impl ComplexRoot {
    pub fn is_certified(&self) -> bool {
        self.residual_g < G_RESIDUAL_BOUND && self.residual_oracle < ORACLE_BOUND
    }

    /// Ordering by `(Re κ, Im κ)`.
    pub fn cmp_kappa(&self, other: &Self) -> Ordering {
        cmp_complex(self.kappa, other.kappa)
    }
}

pub(crate) fn cmp_complex(a: Complex64, b: Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Shape {
    Rectangle {
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
    },
    Disc {
        center: Complex64,
        radius: f64,
    },
}

/// A region of the κ-plane, optionally annotated with its root count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourRegion {
    pub shape: Shape,
    pub winding: Option<i64>,
}

impl ContourRegion {
    pub fn rectangle(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Self {
            shape: Shape::Rectangle {
                re_min,
                re_max,
                im_min,
                im_max,
            },
            winding: None,
        }
    }

    pub fn disc(center: Complex64, radius: f64) -> Self {
        Self {
            shape: Shape::Disc { center, radius },
            winding: None,
        }
    }

    /// The disc of radius π/4 around `(2M+1)π/2`.
    pub fn window(m: u64) -> Self {
        Self::disc(Complex64::new(window_center(m as i64), 0.0), WINDOW_RADIUS)
    }

    fn validate(&self) -> Result<()> {
        let ok = match self.shape {
            Shape::Rectangle {
                re_min,
                re_max,
                im_min,
                im_max,
            } => re_min < re_max && im_min < im_max && [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite()),
            Shape::Disc { center, radius } => {
                radius > 0.0 && radius.is_finite() && center.re.is_finite() && center.im.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("degenerate region {:?}", self.shape)))
        }
    }

    pub fn centroid(&self) -> Complex64 {
        match self.shape {
            Shape::Rectangle {
                re_min,
                re_max,
                im_min,
                im_max,
            } => Complex64::new(0.5 * (re_min + re_max), 0.5 * (im_min + im_max)),
            Shape::Disc { center, .. } => center,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self.shape {
            Shape::Rectangle {
                re_min,
                re_max,
                im_min,
                im_max,
            } => (re_max - re_min).hypot(im_max - im_min),
            Shape::Disc { radius, .. } => 2.0 * radius,
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match self.shape {
            Shape::Rectangle {
                re_min,
                re_max,
                im_min,
                im_max,
            } => z.re >= re_min && z.re <= re_max && z.im >= im_min && z.im <= im_max,
            Shape::Disc { center, radius } => (z - center).norm() <= radius,
        }
    }

    fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match self.shape {
            Shape::Rectangle {
                re_min,
                re_max,
                im_min,
                im_max,
            } => (re_min, re_max, im_min, im_max),
            Shape::Disc { center, radius } => (
                center.re - radius,
                center.re + radius,
                center.im - radius,
                center.im + radius,
            ),
        }
    }

    /// Two rectangles covering the bounding box, cut across the longer side at `fraction`.
    fn split(&self, fraction: f64) -> [ContourRegion; 2] {
        let (x0, x1, y0, y1) = self.bounding_box();
        if x1 - x0 >= y1 - y0 {
            let xm = x0 + fraction * (x1 - x0);
            [
                Self::rectangle(x0, xm, y0, y1),
                Self::rectangle(xm, x1, y0, y1),
            ]
        } else {
            let ym = y0 + fraction * (y1 - y0);
            [
                Self::rectangle(x0, x1, y0, ym),
                Self::rectangle(x0, x1, ym, y1),
            ]
        }
    }

    /// Slightly enlarged copy, used to move a boundary off a root.
    fn perturbed(&self, attempt: usize) -> Self {
        let d = 1e-5 * attempt as f64 * self.diameter().max(1e-3);
        let shape = match self.shape {
            Shape::Rectangle {
                re_min,
                re_max,
                im_min,
                im_max,
            } => Shape::Rectangle {
                re_min: re_min - d,
                re_max: re_max + 0.7 * d,
                im_min: im_min - 0.9 * d,
                im_max: im_max + 1.1 * d,
            },
            Shape::Disc { center, radius } => Shape::Disc {
                center,
                radius: radius + d,
            },
        };
        Self {
            shape,
            winding: None,
        }
    }

    /// Point at parameter `t ∈ [0, 4)`; one unit per side (or quarter arc).
    fn boundary_point(&self, t: f64) -> Complex64 {
        match self.shape {
            Shape::Rectangle {
                re_min,
                re_max,
                im_min,
                im_max,
            } => {
                let side = (t.floor() as usize).min(3);
                let s = t - side as f64;
                match side {
                    0 => Complex64::new(re_min + s * (re_max - re_min), im_min),
                    1 => Complex64::new(re_max, im_min + s * (im_max - im_min)),
                    2 => Complex64::new(re_max - s * (re_max - re_min), im_max),
                    _ => Complex64::new(re_min, im_max - s * (im_max - im_min)),
                }
            }
            Shape::Disc { center, radius } => {
                center + Complex64::from_polar(radius, t * FRAC_PI_2)
            }
        }
    }
}

/// Outcome of a region search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSearch {
    pub roots: Vec<ComplexRoot>,
    pub winding: i64,
    /// Sub-regions whose roots could not be polished.
    pub unresolved: Vec<ContourRegion>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub tol: f64,
    /// Shuffle the sub-region traversal order with this seed.
    pub traversal_seed: Option<u64>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            traversal_seed: None,
        }
    }
}

/// `κ_n = nπ/2` for `n = 1..=count`; independent of β.
pub fn real_roots(model: &StarModel, count: usize) -> Result<Vec<SpectralPoint>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    Ok((1..=count)
        .map(|n| model.spectral_point(Complex64::new(n as f64 * FRAC_PI_2, 0.0)))
        .collect())
}

fn wrap_phase(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// Number of zeros of `G` enclosed by the region boundary (argument principle).
pub fn winding_count(model: &StarModel, region: &ContourRegion) -> Result<i64> {
    model.require_branches()?;
    region.validate()?;
    let clearance = 1e-6 * region.diameter().min(1.0);
    let mut samples = 0usize;
    let mut eval = |t: f64| -> Result<f64> {
        samples += 1;
        if samples > MAX_BOUNDARY_SAMPLES {
            return Err(Error::BoundaryTooClose { samples });
        }
        let r = reduced_eval(model, region.boundary_point(t));
        // |G/G'| estimates the distance to the nearest simple zero.
        let dist = r.g.norm() / r.dg.norm();
        if r.g.norm() == 0.0 || dist < clearance {
            return Err(Error::BoundaryTooClose { samples });
        }
        Ok(r.g.arg())
    };

    let mut total = 0.0;
    for side in 0..4 {
        let t0 = side as f64;
        let h = 1.0 / INITIAL_SAMPLES_PER_SIDE as f64;
        let mut prev_t = t0;
        let mut prev_arg = eval(t0)?;
        for i in 1..=INITIAL_SAMPLES_PER_SIDE {
            let t = if i == INITIAL_SAMPLES_PER_SIDE { t0 + 1.0 } else { t0 + i as f64 * h };
            let arg = eval(t)?;
            // Bisect until every phase increment is below π/2.
            let mut stack = vec![(prev_t, prev_arg, t, arg)];
            while let Some((ta, aa, tb, ab)) = stack.pop() {
                let d = wrap_phase(ab - aa);
                if d.abs() < FRAC_PI_2 {
                    total += d;
                    continue;
                }
                if tb - ta < 1e-14 {
                    return Err(Error::BoundaryTooClose { samples });
                }
                let tm = 0.5 * (ta + tb);
                let am = eval(tm)?;
                stack.push((tm, am, tb, ab));
                stack.push((ta, aa, tm, am));
            }
            prev_t = t;
            prev_arg = arg;
        }
    }
    let w = total / (2.0 * PI);
    let rounded = w.round();
    if (w - rounded).abs() > 1e-6 {
        return Err(Error::BoundaryTooClose { samples });
    }
    Ok(rounded as i64)
}

struct Polished {
    point: WindowPoint,
    flags: Vec<RootFlag>,
}

/// Newton on `G` in window coordinates.
fn newton_on_g(model: &StarModel, start: WindowPoint, tol: f64) -> Result<Polished> {
    let mut w = start;
    let mut prev = w.lambda();
    let mut flags = Vec::new();
    let mut kicks = 0usize;
    for _ in 0..MAX_NEWTON_ITERS {
        let r = reduced_eval_window(model, w);
        if r.g.norm() == 0.0 {
            return Ok(Polished { point: w, flags });
        }
        if r.dg.norm() < 1e-12 * r.derivative_scale || r.dg.norm() == 0.0 {
            if !flags.contains(&RootFlag::PossibleMultipleRoot) {
                flags.push(RootFlag::PossibleMultipleRoot);
            }
            kicks += 1;
            let kick = 1e-6 * (1.0 + w.eps.norm()) * kicks as f64;
            w.eps += Complex64::from_polar(kick, 0.7 * kicks as f64);
            continue;
        }
        let mut step = r.g / r.dg;
        // Damp wild steps so the iterate does not leave the neighbourhood.
        let cap = 1.0;
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        w.eps -= step;
        w = w.reanchored();
        let lam = w.lambda();
        if !(lam.re.is_finite() && lam.im.is_finite()) {
            break;
        }
        if step.norm() < tol * (1.0 + lam.norm()) {
            return Ok(Polished { point: w, flags });
        }
        prev = lam;
    }
    Err(Error::NoConvergence {
        iterations: MAX_NEWTON_ITERS,
        previous: prev,
        last: w.lambda(),
    })
}

/// Newton on the shifted branch equation `tan ε − RHS_n(ε) = 0` with `M` fixed.
fn newton_on_branch(model: &StarModel, m: u64, n: usize, seed: Complex64, tol: f64) -> Result<Complex64> {
    let a = branch_exponent(model.p());
    let mut eps = seed;
    let mut prev = eps;
    for _ in 0..MAX_NEWTON_ITERS {
        let rhs = branch_rhs(model, m, n, eps);
        let c = eps.cos();
        let f = eps.tan() - rhs;
        let df = 1.0 / (c * c) + a * rhs / (eps + half_integer(m));
        let step = f / df;
        prev = eps;
        eps -= step;
        if step.norm() < tol * (1.0 + half_integer(m)) {
            return Ok(eps);
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_NEWTON_ITERS,
        previous: prev,
        last: eps,
    })
}

/// Branch label of a zero of `G` and its misfit `|tan ε / RHS_n(ε) · ... − 1|`.
///
/// Every zero of `G` satisfies exactly one branch equation up to rounding, so
/// the label is read off from the phase of `tan ε / (β/λ)^{1+2/p}`.
pub fn branch_label(model: &StarModel, point: WindowPoint) -> Option<(usize, f64)> {
    let p = model.p();
    if p == 0 {
        return None;
    }
    let lambda = point.lambda();
    let base = principal_pow(model.beta() / lambda, branch_exponent(p));
    let ratio = point.eps.tan() / base;
    (0..p)
        .map(|n| (n, (ratio - branch_phase(p, n)).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Window index and offset if the point lies in some window disc.
fn window_of(point: WindowPoint) -> Option<(u64, Complex64)> {
    (point.m >= 0 && point.eps.norm() < WINDOW_RADIUS).then_some((point.m as u64, point.eps))
}

fn seed_for(model: &StarModel, m: u64, n: usize) -> Option<Complex64> {
    let inside = |e: Complex64| e.norm() < WINDOW_RADIUS;
    match estimate_second_order(model, m, n) {
        Ok(e) if inside(e.epsilon) => Some(e.epsilon),
        _ => estimate_first_order(model, m, n).ok().map(|e| e.epsilon),
    }
}

fn certify(model: &StarModel, polished: Polished, method: Method) -> ComplexRoot {
    let Polished { point, mut flags } = polished;
    let r = reduced_eval_window(model, point);
    let kappa = point.lambda();
    let window = window_of(point);
    let n = branch_label(model, point).map(|(n, _)| n);

    if let (Some((m, eps)), Some(n)) = (window, n) {
        if method == Method::Contour {
            // Cross-check the exact label against the nearest asymptotic seed.
            let mut dists: Vec<(usize, f64)> = (0..model.p())
                .filter_map(|k| seed_for(model, m, k).map(|s| (k, (s - eps).norm())))
                .collect();
            dists.sort_by(|a, b| a.1.total_cmp(&b.1));
            let ambiguous = match dists.as_slice() {
                [] => true,
                [(k, _)] => *k != n,
                [(k, d0), (_, d1), ..] => *k != n || *d1 < 2.0 * *d0,
            };
            if ambiguous {
                flags.push(RootFlag::AmbiguousBranchLabel);
            }
        }
    }

    ComplexRoot {
        kappa,
        epsilon: window.map(|w| w.1),
        m: window.map(|w| w.0),
        n,
        residual_g: r.relative_residual(),
        residual_oracle: oracle_residual(model, kappa),
        method,
        flags,
    }
}

/// Solves branch `n` of window `M` by Newton on `G` from the asymptotic seed.
pub fn solve_branch(model: &StarModel, m: u64, n: usize, tol: f64) -> Result<ComplexRoot> {
    model.check_branch(n)?;
    let seed = seed_for(model, m, n).ok_or(Error::ResonantDenominator { m, n })?;
    let escape = |eps: Complex64| Error::WindowEscape {
        m,
        n,
        modulus: eps.norm(),
    };

    let try_from = |eps0: Complex64| -> Result<Polished> {
        let polished = newton_on_g(model, WindowPoint::new(m as i64, eps0), tol)?;
        Ok(polished)
    };
    let accept = |p: &Polished| {
        p.point.m == m as i64
            && p.point.eps.norm() < WINDOW_RADIUS
            && branch_label(model, p.point).map(|b| b.0) == Some(n)
    };

    // A seed outside the window is pulled back onto its boundary ray.
    let start = if seed.norm() >= WINDOW_RADIUS || !(seed.re.is_finite() && seed.im.is_finite()) {
        if !(seed.re.is_finite() && seed.im.is_finite()) {
            return Err(escape(seed));
        }
        seed * (0.9 * WINDOW_RADIUS / seed.norm())
    } else {
        seed
    };

    let polished = match try_from(start) {
        Ok(p) if accept(&p) => p,
        _ => {
            // Pin the branch with its own equation, then polish on G.
            let eps = match newton_on_branch(model, m, n, start, tol) {
                Ok(eps) => eps,
                Err(Error::NoConvergence { last, .. }) if !(last.norm() < WINDOW_RADIUS) => {
                    return Err(escape(last));
                }
                Err(e) => return Err(e),
            };
            if !(eps.norm() < WINDOW_RADIUS) {
                return Err(escape(eps));
            }
            let p = try_from(eps)?;
            if !accept(&p) {
                let off = p.point.lambda() - window_center(m as i64);
                return Err(escape(off));
            }
            p
        }
    };
    Ok(certify(model, polished, Method::Branch))
}

/// The single β-dependent root of the two-edge star, `κ = β`.
pub fn special_p0_root(model: &StarModel) -> Result<ComplexRoot> {
    if model.q() != 2 {
        return Err(Error::NotTwoStar(model.q()));
    }
    let beta = model.beta();
    if !(beta.re > 0.0 && beta.im.abs() <= 1e-15 * beta.re) {
        return Err(Error::NonRealBeta(beta));
    }
    if crate::secular::pole_distance(Complex64::new(beta.re, 0.0)) < crate::secular::POLE_GUARD {
        return Err(Error::DegenerateCoincidence(beta.re));
    }
    let point = WindowPoint::from_lambda(Complex64::new(beta.re, 0.0));
    let r = reduced_eval_window(model, point);
    let kappa = Complex64::new(beta.re, 0.0);
    Ok(ComplexRoot {
        kappa,
        epsilon: None,
        m: None,
        n: None,
        residual_g: r.relative_residual(),
        residual_oracle: oracle_residual(model, kappa),
        method: Method::SpecialP0,
        flags: Vec::new(),
    })
}

fn winding_or_perturb(
    model: &StarModel,
    region: &ContourRegion,
    diagnostics: &mut Vec<String>,
) -> Result<(ContourRegion, i64)> {
    let mut last = None;
    for attempt in 0..6 {
        let r = if attempt == 0 { *region } else { region.perturbed(attempt) };
        match winding_count(model, &r) {
            Ok(w) => {
                if attempt > 0 {
                    diagnostics.push(format!(
                        "region boundary passed too close to a root; enlarged to {:?}",
                        r.shape
                    ));
                }
                return Ok((r, w));
            }
            Err(e @ Error::BoundaryTooClose { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Splits a region into two halves with well-defined windings.
fn split_with_windings(
    model: &StarModel,
    region: &ContourRegion,
) -> Option<[(ContourRegion, i64); 2]> {
    for f in SPLIT_FRACTIONS {
        let [a, b] = region.split(f);
        if let (Ok(wa), Ok(wb)) = (winding_count(model, &a), winding_count(model, &b)) {
            return Some([(a, wa), (b, wb)]);
        }
    }
    None
}

fn newton_starts(region: &ContourRegion) -> Vec<Complex64> {
    let (x0, x1, y0, y1) = region.bounding_box();
    let mut starts = vec![region.centroid()];
    for i in 0..3 {
        for j in 0..3 {
            let z = Complex64::new(
                x0 + (i as f64 + 0.5) / 3.0 * (x1 - x0),
                y0 + (j as f64 + 0.5) / 3.0 * (y1 - y0),
            );
            if region.contains(z) {
                starts.push(z);
            }
        }
    }
    starts
}

/// Locates every zero of `G` inside `region` (subdivision plus Newton).
pub fn find_roots_in_region(model: &StarModel, region: &ContourRegion, tol: f64) -> Result<RegionSearch> {
    find_roots_in_region_with(
        model,
        region,
        &SearchOptions {
            tol,
            ..SearchOptions::default()
        },
    )
}

pub fn find_roots_in_region_with(
    model: &StarModel,
    region: &ContourRegion,
    opts: &SearchOptions,
) -> Result<RegionSearch> {
    model.require_branches()?;
    region.validate()?;
    let mut diagnostics = Vec::new();
    let (outer, winding) = winding_or_perturb(model, region, &mut diagnostics)?;
    let mut rng = opts.traversal_seed.map(ChaCha8Rng::seed_from_u64);

    let mut found: Vec<ComplexRoot> = Vec::new();
    let mut unresolved = Vec::new();
    let mut stack = vec![(outer, winding, 0usize)];

    while let Some((reg, w, depth)) = stack.pop() {
        if w <= 0 {
            continue;
        }
        let tiny = reg.diameter() < 1e-12 * (1.0 + reg.centroid().norm());
        if w == 1 || tiny || depth >= MAX_DEPTH {
            let mut hit = None;
            for z in newton_starts(&reg) {
                if let Ok(p) = newton_on_g(model, WindowPoint::from_lambda(z), opts.tol) {
                    if reg.contains(p.point.lambda()) {
                        hit = Some(p);
                        break;
                    }
                }
            }
            match hit {
                Some(mut p) => {
                    if w > 1 && !p.flags.contains(&RootFlag::PossibleMultipleRoot) {
                        p.flags.push(RootFlag::PossibleMultipleRoot);
                    }
                    found.push(certify(model, p, Method::Contour));
                    continue;
                }
                None if w == 1 && !tiny && depth < MAX_DEPTH => {}
                None => {
                    unresolved.push(ContourRegion {
                        winding: Some(w),
                        ..reg
                    });
                    continue;
                }
            }
        }
        match split_with_windings(model, &reg) {
            Some(children) => {
                let mut children: Vec<_> = children
                    .into_iter()
                    .map(|(r, cw)| (ContourRegion { winding: Some(cw), ..r }, cw, depth + 1))
                    .collect();
                if let Some(rng) = rng.as_mut() {
                    children.shuffle(rng);
                }
                stack.extend(children);
            }
            None => unresolved.push(ContourRegion {
                winding: Some(w),
                ..reg
            }),
        }
    }

    found.retain(|r| outer.contains(r.kappa) && r.kappa.norm() > ORIGIN_EXCLUSION);
    let roots = dedup_roots(found);
    let mut expected = winding;
    if outer.contains(Complex64::new(0.0, 0.0)) {
        expected -= model.p() as i64;
        diagnostics.push(format!(
            "kappa = 0 (zero of G of order {}) lies in the region and is excluded",
            model.p()
        ));
    }
    if roots.len() as i64 != expected {
        diagnostics.push(format!(
            "found {} roots but the boundary winding is {}",
            roots.len(),
            winding
        ));
    }
    for u in &unresolved {
        diagnostics.push(format!("unresolved sub-region {:?} (winding {:?})", u.shape, u.winding));
    }
    Ok(RegionSearch {
        roots,
        winding,
        unresolved,
        diagnostics,
    })
}

/// Sorts by `(Re κ, Im κ)`, merges roots closer than the dedup distance and
/// keeps one representative of any `±λ` pair.
pub fn dedup_roots(mut roots: Vec<ComplexRoot>) -> Vec<ComplexRoot> {
    roots.sort_by(|a, b| a.cmp_kappa(b));
    let mut kept: Vec<ComplexRoot> = Vec::with_capacity(roots.len());
    for r in roots {
        let dup = kept.iter().any(|k| {
            (k.kappa - r.kappa).norm() < DEDUP_DISTANCE || (k.kappa + r.kappa).norm() < DEDUP_DISTANCE
        });
        if !dup {
            kept.push(r);
        }
    }
    kept
}

/// Contour search of every window disc `M ∈ [m_min, m_max]`, in window order.
pub fn find_roots_in_windows(
    model: &StarModel,
    m_min: u64,
    m_max: u64,
    opts: &SearchOptions,
) -> Vec<(u64, Result<RegionSearch>)> {
    (m_min..=m_max)
        .into_par_iter()
        .map(|m| (m, find_roots_in_region_with(model, &ContourRegion::window(m), opts)))
        .collect()
}

/// All `p` branch roots of every window `M ∈ [m_min, m_max]`.
pub fn solve_windows(
    model: &StarModel,
    m_min: u64,
    m_max: u64,
    tol: f64,
) -> Vec<((u64, usize), Result<ComplexRoot>)> {
    let p = model.p();
    let jobs: Vec<(u64, usize)> = (m_min..=m_max)
        .flat_map(|m| (0..p).map(move |n| (m, n)))
        .collect();
    jobs.into_par_iter()
        .map(|(m, n)| ((m, n), solve_branch(model, m, n, tol)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(q: usize, beta: f64) -> StarModel {
        StarModel::with_beta(q, Complex64::new(beta, 0.0)).unwrap()
    }

    #[test]
    fn real_lattice() {
        let a = real_roots(&model(3, 0.5), 20).unwrap();
        let b = real_roots(&model(3, 7.0), 20).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].kappa.re, FRAC_PI_2);
        assert_eq!(a[1].kappa.re, PI);
        for w in a.windows(2) {
            let d = w[1].kappa.re - w[0].kappa.re;
            assert!((d - FRAC_PI_2).abs() <= 8.0 * f64::EPSILON * w[1].kappa.re);
        }
        assert!(real_roots(&model(3, 1.0), 0).is_err());
    }

    #[test]
    fn window_winding_examples() {
        let m = model(3, 1.0);
        assert_eq!(winding_count(&m, &ContourRegion::window(10)).unwrap(), 1);
        let small = ContourRegion::disc(Complex64::new(PI, 0.0), 0.1);
        assert_eq!(winding_count(&m, &small).unwrap(), 0);
    }

    #[test]
    fn winding_is_additive() {
        let m = model(4, 1.0);
        let whole = ContourRegion::rectangle(0.3, 20.0, -3.0, 3.0);
        let w = winding_count(&m, &whole).unwrap();
        let [a, b] = whole.split(0.4863);
        assert_eq!(
            winding_count(&m, &a).unwrap() + winding_count(&m, &b).unwrap(),
            w
        );
        assert!(w > 0);
    }

    #[test]
    fn solve_branch_q3() {
        let r = solve_branch(&model(3, 1.0), 10, 0, DEFAULT_TOL).unwrap();
        let eps = r.epsilon.unwrap();
        assert!((eps.re - 7.059062917940880e-11).abs() < 1e-20, "{eps}");
        assert!((eps.im + 2.786008806064035e-5).abs() < 1e-18, "{eps}");
        assert_eq!((r.m, r.n), (Some(10), Some(0)));
        assert!(r.is_certified(), "{r:?}");
        let q = crate::secular::eval_quotient(&model(3, 1.0), r.kappa).unwrap();
        assert!(q.norm() < 1e-8);
    }

    #[test]
    fn solve_branch_q4_pair() {
        let m = model(4, 1.0);
        let r0 = solve_branch(&m, 10, 0, DEFAULT_TOL).unwrap();
        let r1 = solve_branch(&m, 10, 1, DEFAULT_TOL).unwrap();
        let e0 = r0.epsilon.unwrap();
        let e1 = r1.epsilon.unwrap();
        assert!((e0.im + 9.190132572936426e-4).abs() < 1e-15);
        assert!((e1.im - 9.190132572936426e-4).abs() < 1e-15);
        assert!((e0.re - 5.120762347270520e-8).abs() < 1e-18);
        assert!(r0.is_certified() && r1.is_certified());
    }

    #[test]
    fn solve_branch_rejects_bad_index() {
        assert!(matches!(
            solve_branch(&model(4, 1.0), 5, 2, DEFAULT_TOL),
            Err(Error::BranchOutOfRange { .. })
        ));
        assert!(matches!(
            solve_branch(&model(2, 1.0), 5, 0, DEFAULT_TOL),
            Err(Error::NeedsPositiveP { .. })
        ));
    }

    #[test]
    fn large_beta_small_window_escapes() {
        // β far larger than the window: the offset cannot stay below π/4.
        let res = solve_branch(&model(3, 40.0), 0, 0, DEFAULT_TOL);
        assert!(matches!(res, Err(Error::WindowEscape { .. })), "{res:?}");
    }

    #[test]
    fn region_search_q4_window() {
        let m = model(4, 1.0);
        let s = find_roots_in_region(&m, &ContourRegion::window(10), DEFAULT_TOL).unwrap();
        assert_eq!(s.winding, 2);
        assert_eq!(s.roots.len(), 2);
        assert!(s.unresolved.is_empty());
        let mut ims: Vec<f64> = s.roots.iter().map(|r| r.epsilon.unwrap().im).collect();
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] + 9.19e-4).abs() < 1e-6);
        assert!((ims[1] - 9.19e-4).abs() < 1e-6);
        for r in &s.roots {
            assert!(r.is_certified());
            assert_eq!(r.method, Method::Contour);
            assert!(r.flags.is_empty(), "{:?}", r.flags);
        }
    }

    #[test]
    fn region_search_large_rectangle() {
        let m = model(3, 1.0);
        let region = ContourRegion::rectangle(0.1, 35.0, -5.0, 5.0);
        let s = find_roots_in_region(&m, &region, DEFAULT_TOL).unwrap();
        assert_eq!(s.roots.len() as i64, s.winding);
        assert!(s.unresolved.is_empty());
        let near = s
            .roots
            .iter()
            .find(|r| r.m == Some(10))
            .expect("root in window 10");
        assert!((near.epsilon.unwrap().im + 2.786e-5).abs() < 1e-8);
        for r in &s.roots {
            assert!(r.is_certified(), "{r:?}");
        }
    }

    #[test]
    fn special_root() {
        for beta in [0.7, 1.3] {
            let r = special_p0_root(&model(2, beta)).unwrap();
            assert_eq!(r.kappa, Complex64::new(beta, 0.0));
            assert!(r.residual_oracle < 1e-10);
        }
        assert!(matches!(special_p0_root(&model(3, 1.0)), Err(Error::NotTwoStar(3))));
        assert!(matches!(
            special_p0_root(&model(2, FRAC_PI_2)),
            Err(Error::DegenerateCoincidence(_))
        ));
        let complex = StarModel::with_beta(2, Complex64::new(1.0, 0.5)).unwrap();
        assert!(matches!(special_p0_root(&complex), Err(Error::NonRealBeta(_))));
    }

    #[test]
    fn dedup_merges_close_and_mirrored_roots() {
        let mk = |re: f64, im: f64| ComplexRoot {
            kappa: Complex64::new(re, im),
            epsilon: None,
            m: None,
            n: None,
            residual_g: 0.0,
            residual_oracle: 0.0,
            method: Method::Contour,
            flags: vec![],
        };
        let out = dedup_roots(vec![mk(2.0, 0.0), mk(1.0, 0.5), mk(1.0 + 1e-10, 0.5), mk(0.0, 0.8), mk(0.0, -0.8)]);
        let ks: Vec<Complex64> = out.iter().map(|r| r.kappa).collect();
        assert_eq!(
            ks,
            vec![Complex64::new(0.0, -0.8), Complex64::new(1.0, 0.5), Complex64::new(2.0, 0.0)]
        );
    }
}
