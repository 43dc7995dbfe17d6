//! Star-graph model parameters and the generalized parity/time-reversal maps.
//!
//! A star `G^(q)` has `q` equal edges of length `L`. On edge `j` the coordinate
//! `y` runs from the outer end (`y = 0`) to the central vertex (`y = L`). The
//! outer ends carry Robin conditions whose coupling phase advances by
//! `phi = 2π/q` from one edge to the next.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of an equilateral `q`-pointed star with rotating Robin coupling.
///
/// Derived fields (`p`, `beta`, `phi`) are recomputed by every constructor, so
/// a value of this type always satisfies `beta == alpha * length`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarModel {
    q: usize,
    length: f64,
    alpha: Complex64,
    p: usize,
    beta: Complex64,
    phi: f64,
}

impl StarModel {
    pub fn new(q: usize, length: f64, alpha: Complex64) -> Result<Self> {
        if q < 2 {
            return Err(Error::TooFewEdges(q));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::NonPositiveLength(length));
        }
        if !(alpha.re.is_finite() && alpha.im.is_finite()) {
            return Err(Error::NonFiniteCoupling(alpha));
        }
        if alpha.norm() == 0.0 {
            return Err(Error::ZeroCoupling);
        }
        Ok(Self {
            q,
            length,
            alpha,
            p: q - 2,
            beta: alpha * length,
            phi: 2.0 * PI / q as f64,
        })
    }

    /// Unit-length model parametrized directly by `beta = alpha * L`.
    pub fn with_beta(q: usize, beta: Complex64) -> Result<Self> {
        Self::new(q, 1.0, beta)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    /// Phase step of the Robin coupling between neighbouring edges, in radians.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Fails unless the model has at least one branch equation (`p >= 1`).
    pub fn require_branches(&self) -> Result<()> {
        if self.p == 0 {
            Err(Error::NeedsPositiveP { q: self.q })
        } else {
            Ok(())
        }
    }

    pub fn check_branch(&self, n: usize) -> Result<()> {
        self.require_branches()?;
        if n >= self.p {
            Err(Error::BranchOutOfRange { n, p: self.p })
        } else {
            Ok(())
        }
    }

    /// Energy `E = (kappa / L)^2` of a dimensionless root `kappa = k L`.
    pub fn kappa_to_energy(&self, kappa: Complex64) -> Complex64 {
        let k = kappa / self.length;
        k * k
    }

    pub fn spectral_point(&self, kappa: Complex64) -> SpectralPoint {
        SpectralPoint {
            kappa,
            energy: self.kappa_to_energy(kappa),
        }
    }

    /// Generalized time reversal `T^(q)`: rotates the coupling by `e^{-2πi/q}`.
    pub fn time_reversed(&self) -> Self {
        let alpha = self.alpha * Complex64::from_polar(1.0, -self.phi);
        Self {
            alpha,
            beta: alpha * self.length,
            ..*self
        }
    }

    /// `T^(q)` applied `times` times.
    pub fn time_reversed_n(&self, times: usize) -> Self {
        (0..times).fold(*self, |m, _| m.time_reversed())
    }
}

/// A root together with its energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub kappa: Complex64,
    pub energy: Complex64,
}

/// A permutation of edge labels `0..q`, stored as the image of each label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgePermutation {
    image: Vec<usize>,
}

impl EdgePermutation {
    pub fn identity(q: usize) -> Self {
        Self {
            image: (0..q).collect(),
        }
    }

    /// Builds a permutation from its image table; `None` unless it is a bijection.
    pub fn from_image(image: Vec<usize>) -> Option<Self> {
        let mut seen = vec![false; image.len()];
        for &j in &image {
            if j >= image.len() || std::mem::replace(&mut seen[j], true) {
                return None;
            }
        }
        Some(Self { image })
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn apply(&self, j: usize) -> usize {
        self.image[j]
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "permutations act on different sets");
        Self {
            image: other.image.iter().map(|&j| self.image[j]).collect(),
        }
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Self::identity(self.len()), |acc, _| self.compose(&acc))
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Smallest positive `k` with `self^k = id`.
    pub fn order(&self) -> usize {
        let mut acc = self.clone();
        let mut k = 1;
        while !acc.is_identity() {
            acc = self.compose(&acc);
            k += 1;
        }
        k
    }
}

/// Generalized parity `P^(q)`: every edge label moves to its neighbour, `j -> j+1 mod q`.
pub fn parity_permutation(q: usize) -> Result<EdgePermutation> {
    if q < 2 {
        return Err(Error::TooFewEdges(q));
    }
    Ok(EdgePermutation {
        image: (0..q).map(|j| (j + 1) % q).collect(),
    })
}
