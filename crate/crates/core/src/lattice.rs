//! Lattice geometry: neighbour shells, structure factors and k-paths.
//!
//! A lattice is described only by the two neighbour shells that enter the
//! spin-wave coefficients: the inter-sublattice shell δ₁ (coordination z⁽¹⁾)
//! and the intra-sublattice shell δ₂ (coordination z⁽²⁾). Wave vectors are in
//! radians per unit length, the same unit the neighbour vectors are stored in.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub const G_TYPE_SIMPLE_CUBIC: &str = "g_type_simple_cubic";

pub type Vec3 = [f64; 3];

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Wave vector in radians per length unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KVector(pub Vec3);

impl KVector {
    pub fn new(kx: f64, ky: f64, kz: f64) -> Result<Self> {
        if !(kx.is_finite() && ky.is_finite() && kz.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: "components must be finite".into(),
            });
        }
        Ok(Self([kx, ky, kz]))
    }

    pub fn zero() -> Self {
        Self([0.0; 3])
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn neg(&self) -> Self {
        Self([-self.0[0], -self.0[1], -self.0[2]])
    }
}

/// Which neighbour shell a structure factor is evaluated over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shell {
    /// Nearest neighbours, connecting opposite sublattices.
    Inter,
    /// Next-nearest neighbours, within one sublattice.
    Intra,
}

/// Neighbour geometry of a two-sublattice antiferromagnet.
///
/// Vectors are stored in absolute length units (already multiplied by the
/// lattice constant). Both shells are non-empty, free of zero vectors and
/// closed under negation, so the structure factors are real.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeSpec {
    name: String,
    lattice_constant: f64,
    nn_vectors: Vec<Vec3>,
    nnn_vectors: Vec<Vec3>,
    z1: usize,
    z2: usize,
}

impl LatticeSpec {
    /// Builds a lattice from neighbour vectors given in units of
    /// `lattice_constant`.
    pub fn custom(
        name: impl Into<String>,
        lattice_constant: f64,
        nn_vectors: &[Vec3],
        nnn_vectors: &[Vec3],
    ) -> Result<Self> {
        if !(lattice_constant.is_finite() && lattice_constant > 0.0) {
            return Err(Error::InvalidLattice(format!(
                "lattice_constant must be > 0, got {lattice_constant}"
            )));
        }
        let scale = |set: &[Vec3]| -> Vec<Vec3> {
            set.iter()
                .map(|v| [v[0] * lattice_constant, v[1] * lattice_constant, v[2] * lattice_constant])
                .collect()
        };
        let nn = scale(nn_vectors);
        let nnn = scale(nnn_vectors);
        check_shell("nn_vectors", &nn)?;
        check_shell("nnn_vectors", &nnn)?;
        Ok(Self {
            name: name.into(),
            lattice_constant,
            z1: nn.len(),
            z2: nnn.len(),
            nn_vectors: nn,
            nnn_vectors: nnn,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lattice_constant(&self) -> f64 {
        self.lattice_constant
    }

    pub fn nn_vectors(&self) -> &[Vec3] {
        &self.nn_vectors
    }

    pub fn nnn_vectors(&self) -> &[Vec3] {
        &self.nnn_vectors
    }

    pub fn z1(&self) -> usize {
        self.z1
    }

    pub fn z2(&self) -> usize {
        self.z2
    }

    fn shell(&self, shell: Shell) -> &[Vec3] {
        match shell {
            Shell::Inter => &self.nn_vectors,
            Shell::Intra => &self.nnn_vectors,
        }
    }
}

fn check_shell(label: &str, set: &[Vec3]) -> Result<()> {
    if set.is_empty() {
        return Err(Error::InvalidLattice(format!("{label} is empty")));
    }
    for v in set {
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidLattice(format!("{label} has non-finite component")));
        }
        if norm(v) == 0.0 {
            return Err(Error::InvalidLattice(format!("{label} contains the zero vector")));
        }
    }
    // negation closure, matched up to a relative tolerance on the vector length
    for v in set {
        let tol = 1e-12 * norm(v);
        let closed = set.iter().any(|w| {
            (v[0] + w[0]).abs() <= tol && (v[1] + w[1]).abs() <= tol && (v[2] + w[2]).abs() <= tol
        });
        if !closed {
            return Err(Error::InvalidLattice(format!(
                "{label} is not closed under negation (missing -{v:?})"
            )));
        }
    }
    Ok(())
}

/// Named lattice presets.
pub fn build_preset(name: &str, lattice_constant: f64) -> Result<LatticeSpec> {
    match name {
        G_TYPE_SIMPLE_CUBIC => {
            let mut nn = Vec::with_capacity(6);
            for axis in 0..3 {
                for sign in [1.0, -1.0] {
                    let mut v = [0.0; 3];
                    v[axis] = sign;
                    nn.push(v);
                }
            }
            let mut nnn = Vec::with_capacity(12);
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                for si in [1.0, -1.0] {
                    for sj in [1.0, -1.0] {
                        let mut v = [0.0; 3];
                        v[i] = si;
                        v[j] = sj;
                        nnn.push(v);
                    }
                }
            }
            LatticeSpec::custom(name, lattice_constant, &nn, &nnn)
        }
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

/// γ_k = (1/z) Σ_δ exp(i k·δ) over the requested shell.
pub fn structure_factor(spec: &LatticeSpec, shell: Shell, k: &KVector) -> Complex64 {
    let set = spec.shell(shell);
    let sum: Complex64 = set
        .iter()
        .map(|d| Complex64::from_polar(1.0, dot(&k.0, d)))
        .sum();
    sum / set.len() as f64
}

/// `n_points` wave vectors uniformly spaced from the origin to
/// `k_max · direction/|direction|`, both ends included.
pub fn kpath(direction: Vec3, k_max: f64, n_points: usize) -> Result<Vec<KVector>> {
    let len = norm(&direction);
    if !(len.is_finite()) || len == 0.0 {
        return Err(Error::DegenerateKPath);
    }
    if n_points < 2 {
        return Err(Error::InvalidParameter {
            name: "n_points",
            reason: format!("need at least 2 points, got {n_points}"),
        });
    }
    if !k_max.is_finite() {
        return Err(Error::InvalidParameter {
            name: "k_max",
            reason: "must be finite".into(),
        });
    }
    let unit = [direction[0] / len, direction[1] / len, direction[2] / len];
    let last = (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|i| {
            let s = k_max * i as f64 / last;
            KVector([s * unit[0], s * unit[1], s * unit[2]])
        })
        .collect())
}
