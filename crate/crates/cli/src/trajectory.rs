//! Root trajectories across a β sweep, tracked by nearest continuation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::report::{csv_err, number, ModelInfo, SCHEMA_VERSION};
use crate::{CliError, Result};

/// Default jump (in κ) above which a continuation step counts as a break.
pub const DEFAULT_JUMP_THRESHOLD: f64 = 0.1;

/// A runner-up candidate closer than this multiple of the chosen step makes
/// the step ambiguous.
pub const AMBIGUITY_RATIO: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootPath {
    pub id: usize,
    /// Index of the β sample where the path begins.
    pub start: usize,
    /// `[Re κ, Im κ]` at samples `start, start + 1, …`.
    pub kappa: Vec<[f64; 2]>,
}

impl RootPath {
    fn last(&self) -> Complex64 {
        let [re, im] = *self.kappa.last().expect("paths are never empty");
        Complex64::new(re, im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakReason {
    /// The nearest candidate was farther than the jump threshold.
    Jump,
    /// A second candidate was nearly as close as the chosen one.
    Ambiguous,
    /// No candidate was left for this path.
    Vanished,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Break {
    pub path: usize,
    /// Sample index at which continuation failed.
    pub index: usize,
    pub reason: BreakReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub schema_version: String,
    pub model: ModelInfo,
    pub beta_samples: Vec<[f64; 2]>,
    pub threshold: f64,
    pub paths: Vec<RootPath>,
    pub breaks: Vec<Break>,
    pub diagnostics: Vec<String>,
}

/// Links per-sample root sets into paths.
///
/// Each step pairs live paths with new roots greedily by distance, shortest
/// first, with ties broken by path id and root order so the result depends
/// only on the inputs.
pub fn track(snapshots: &[Vec<Complex64>], threshold: f64) -> (Vec<RootPath>, Vec<Break>) {
    let mut paths: Vec<RootPath> = Vec::new();
    let mut breaks = Vec::new();
    let mut live: Vec<usize> = Vec::new();

    for (index, roots) in snapshots.iter().enumerate() {
        let mut pairs: Vec<(f64, usize, usize)> = live
            .iter()
            .flat_map(|&pid| {
                let z = paths[pid].last();
                roots.iter().enumerate().map(move |(ri, r)| ((r - z).norm(), pid, ri))
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut path_taken = vec![false; paths.len()];
        let mut root_taken = vec![false; roots.len()];
        let mut continued = vec![false; roots.len()];
        let mut next_live = Vec::new();
        for &(d, pid, ri) in &pairs {
            if path_taken[pid] || root_taken[ri] {
                continue;
            }
            path_taken[pid] = true;
            root_taken[ri] = true;
            if d >= threshold {
                breaks.push(Break { path: pid, index, reason: BreakReason::Jump });
                continue;
            }
            let z = paths[pid].last();
            let runner_up = roots
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != ri)
                .map(|(_, r)| (r - z).norm())
                .fold(f64::INFINITY, f64::min);
            if d > 0.0 && runner_up <= AMBIGUITY_RATIO * d {
                breaks.push(Break { path: pid, index, reason: BreakReason::Ambiguous });
            }
            paths[pid].kappa.push([roots[ri].re, roots[ri].im]);
            continued[ri] = true;
            next_live.push(pid);
        }
        for &pid in &live {
            if !path_taken[pid] {
                breaks.push(Break { path: pid, index, reason: BreakReason::Vanished });
            }
        }
        for (ri, r) in roots.iter().enumerate() {
            if !continued[ri] {
                let id = paths.len();
                paths.push(RootPath { id, start: index, kappa: vec![[r.re, r.im]] });
                next_live.push(id);
            }
        }
        next_live.sort_unstable();
        live = next_live;
    }
    breaks.sort_by_key(|b| (b.index, b.path));
    (paths, breaks)
}

impl Trajectory {
    pub fn new(
        model: ModelInfo,
        betas: &[Complex64],
        snapshots: &[Vec<Complex64>],
        threshold: f64,
        diagnostics: Vec<String>,
    ) -> Self {
        let (paths, breaks) = track(snapshots, threshold);
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            model,
            beta_samples: betas.iter().map(|b| [b.re, b.im]).collect(),
            threshold,
            paths,
            breaks,
            diagnostics,
        }
    }

    /// Largest consecutive gap along any path, skipping recorded breaks.
    pub fn max_unbroken_gap(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in &self.paths {
            for (i, w) in p.kappa.windows(2).enumerate() {
                let index = p.start + i + 1;
                if self.breaks.iter().any(|b| b.path == p.id && b.index == index) {
                    continue;
                }
                let d = Complex64::new(w[1][0] - w[0][0], w[1][1] - w[0][1]).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("not a trajectory: {e}")))
    }

    /// One row per path point: `path, index, beta_re, beta_im, kappa_re, kappa_im`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["path", "index", "beta_re", "beta_im", "kappa_re", "kappa_im"])
            .map_err(csv_err)?;
        for p in &self.paths {
            for (i, k) in p.kappa.iter().enumerate() {
                let index = p.start + i;
                let [bre, bim] = self.beta_samples[index];
                w.write_record([
                    p.id.to_string(),
                    index.to_string(),
                    number(bre),
                    number(bim),
                    number(k[0]),
                    number(k[1]),
                ])
                .map_err(csv_err)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
    }
}
