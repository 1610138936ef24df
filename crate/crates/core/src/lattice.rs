//! Simple lattices `L = Z v_1 + ... + Z v_d` in `R^d`.
//!
//! A [`Lattice`] stores its basis as the rows of a `d x d` matrix, together
//! with the Gram matrix `B B^T` and the covolume `|det B|`. Everything
//! downstream (shell enumeration, theta sums, duals) works from the Gram
//! matrix, so the orientation of the basis never matters.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative singularity threshold: `|det| < SINGULAR_RTOL * prod(row norms)`.
const SINGULAR_RTOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Lattice {
    basis: DMatrix<f64>,
    gram: DMatrix<f64>,
    covolume: f64,
}

impl Lattice {
    /// Builds a lattice from a square basis matrix whose rows are the basis
    /// vectors.
    pub fn from_matrix(basis: DMatrix<f64>) -> Result<Self> {
        if basis.nrows() != basis.ncols() || basis.nrows() == 0 {
            return Err(Error::InvalidInput(format!(
                "basis must be a non-empty square matrix, got {}x{}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("basis has non-finite entries".into()));
        }
        let det = basis.determinant().abs();
        let row_norms: f64 = basis.row_iter().map(|r| r.norm()).product();
        let threshold = SINGULAR_RTOL * row_norms;
        if !(det >= threshold) || det == 0.0 {
            return Err(Error::SingularBasis { det, threshold });
        }
        let gram = &basis * basis.transpose();
        Ok(Lattice {
            basis,
            gram,
            covolume: det,
        })
    }

    /// Builds a lattice from a list of basis rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput(format!(
                "basis must be square: {} rows of lengths {:?}",
                d,
                rows.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_matrix(DMatrix::from_row_slice(d, d, &flat))
    }

    /// The integer lattice `Z^d`.
    pub fn integer(dim: usize) -> Self {
        Self::from_matrix(DMatrix::identity(dim, dim)).expect("identity is nonsingular")
    }

    /// The triangular lattice of covolume `v`:
    /// `sqrt(2v/sqrt 3) * [Z(1,0) + Z(1/2, sqrt(3)/2)]`.
    pub fn triangular(v: f64) -> Result<Self> {
        check_covolume(v)?;
        let c = (2.0 * v / 3f64.sqrt()).sqrt();
        Self::from_rows(&[vec![c, 0.0], vec![c / 2.0, c * 3f64.sqrt() / 2.0]])
    }

    /// The E8 root lattice (even unimodular), rescaled to covolume `v`.
    pub fn e8(v: f64) -> Result<Self> {
        let h = 0.5;
        let rows = vec![
            vec![2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            vec![-1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, -1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0],
            vec![h, h, h, h, h, h, h, h],
        ];
        Self::from_rows(&rows)?.rescale_to_covolume(v)
    }

    pub fn named(name: &NamedLattice, v: f64) -> Result<Self> {
        check_covolume(v)?;
        match *name {
            NamedLattice::Integer(d) => Self::integer(d).rescale_to_covolume(v),
            NamedLattice::Square => Self::integer(2).rescale_to_covolume(v),
            NamedLattice::Triangular => Self::triangular(v),
            NamedLattice::E8 => Self::e8(v),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn covolume(&self) -> f64 {
        self.covolume
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.basis
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    /// `(V / covolume)^(1/d) * L`, which has covolume exactly `V` up to rounding.
    pub fn rescale_to_covolume(&self, v: f64) -> Result<Self> {
        check_covolume(v)?;
        let factor = (v / self.covolume).powf(1.0 / self.dim() as f64);
        Ok(self.scaled(factor))
    }

    /// `c * L` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        let d = self.dim() as i32;
        Lattice {
            basis: &self.basis * c,
            gram: &self.gram * (c * c),
            covolume: self.covolume * c.powi(d),
        }
    }

    /// The dual lattice `{y : y.p in Z for all p in L}`; its basis is the
    /// inverse transpose of ours.
    pub fn dual(&self) -> Self {
        let inv = self
            .basis
            .clone()
            .try_inverse()
            .expect("validated basis is invertible");
        let basis = inv.transpose();
        let gram = &basis * basis.transpose();
        Lattice {
            basis,
            gram,
            covolume: 1.0 / self.covolume,
        }
    }

    /// Applies an orthogonal map and/or a unimodular change of basis:
    /// new basis = `unimodular * B * rotation`. Both matrices are taken as
    /// given; the caller is responsible for them being what they claim.
    pub fn transformed(&self, unimodular: &DMatrix<f64>, rotation: &DMatrix<f64>) -> Result<Self> {
        Self::from_matrix(unimodular * &self.basis * rotation)
    }

    /// The point `sum_i coords[i] v_i`.
    pub fn point(&self, coords: &[i64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|j| (0..d).map(|i| coords[i] as f64 * self.basis[(i, j)]).sum())
            .collect()
    }

    /// Squared norm of the lattice point with integer coordinates `coords`.
    pub fn norm_sq(&self, coords: &[i64]) -> f64 {
        self.point(coords).iter().map(|x| x * x).sum()
    }

    /// Gram-Schmidt lengths of the basis, from the Cholesky factor of the Gram matrix.
    pub fn gram_schmidt_norms(&self) -> Vec<f64> {
        let chol = self
            .gram
            .clone()
            .cholesky()
            .expect("Gram matrix of a valid basis is positive definite");
        let l = chol.l();
        (0..self.dim()).map(|i| l[(i, i)]).collect()
    }

    /// Upper bound on the covering radius: `(1/2) sqrt(sum |b~_i|^2)`
    /// (nearest-plane rounding reaches every point of space within this distance).
    pub fn covering_radius_bound(&self) -> f64 {
        0.5 * self
            .gram_schmidt_norms()
            .iter()
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    /// Ratio of extreme singular values of the basis.
    pub fn condition_number(&self) -> f64 {
        let sv = self.basis.clone().singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// A bit-exact key of the Gram matrix, used for memoization.
    pub fn fingerprint(&self) -> Vec<u64> {
        self.gram.iter().map(|v| v.to_bits()).collect()
    }

    pub fn to_file(&self) -> LatticeFile {
        LatticeFile {
            dim: self.dim(),
            basis: self.rows(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: LatticeFile = serde_json::from_str(text)?;
        file.into_lattice()
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn check_covolume(v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!("covolume must be positive, got {v}")))
    }
}

/// On-disk lattice description: `{"dim": d, "basis": [[...], ...]}` with rows
/// as basis vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeFile {
    pub dim: usize,
    pub basis: Vec<Vec<f64>>,
}

impl LatticeFile {
    pub fn into_lattice(self) -> Result<Lattice> {
        if self.basis.len() != self.dim || self.basis.iter().any(|r| r.len() != self.dim) {
            return Err(Error::InvalidInput(format!(
                "basis is not {0}x{0}",
                self.dim
            )));
        }
        Lattice::from_rows(&self.basis)
    }
}

/// Lattices known by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedLattice {
    Integer(usize),
    Square,
    Triangular,
    E8,
}

impl NamedLattice {
    pub const NAMES: [&'static str; 4] = ["zd:<d>", "square", "triangular", "e8"];
}

impl FromStr for NamedLattice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let integer_dim = lower
            .strip_prefix("zd:")
            .or_else(|| lower.strip_prefix("integer:"))
            .or_else(|| {
                lower
                    .strip_prefix("integer(")
                    .and_then(|r| r.strip_suffix(')'))
            });
        if let Some(d) = integer_dim {
            return match d.parse::<usize>() {
                Ok(d) if d >= 1 => Ok(NamedLattice::Integer(d)),
                _ => Err(Error::UnknownLattice(s.to_string())),
            };
        }
        match lower.as_str() {
            "square" => Ok(NamedLattice::Square),
            "triangular" | "hexagonal" => Ok(NamedLattice::Triangular),
            "e8" => Ok(NamedLattice::E8),
            _ => Err(Error::UnknownLattice(s.to_string())),
        }
    }
}

impl fmt::Display for NamedLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedLattice::Integer(d) => write!(f, "zd:{d}"),
            NamedLattice::Square => f.write_str("square"),
            NamedLattice::Triangular => f.write_str("triangular"),
            NamedLattice::E8 => f.write_str("e8"),
        }
    }
}
