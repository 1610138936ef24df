//! Enumeration of lattice vectors inside a ball, grouped into shells of equal
//! norm.
//!
//! Vectors are found with the Fincke-Pohst recursion on the Cholesky factor of
//! the Gram matrix: at each level the admissible integer coordinate lies in an
//! interval whose width shrinks with the norm already spent on the outer
//! levels. The norm of every candidate is then recomputed from the basis so
//! that shells of symmetric lattices coalesce cleanly.

use num_integer::Integer;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// Norms closer than this (absolute, on `|p|^2`) share a shell.
pub const SHELL_TOLERANCE: f64 = 1e-9;

/// Default limit on the predicted number of enumerated vectors.
pub const DEFAULT_CAP: f64 = 1e8;

/// Condition number above which enumeration logs a warning.
pub const CONDITION_WARNING: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Shell {
    pub norm_sq: f64,
    pub multiplicity: usize,
}

/// Nonzero lattice vectors with `|p| <= cutoff_radius`, grouped by norm.
#[derive(Clone, Debug, Serialize)]
pub struct ShellSeries {
    pub cutoff_radius: f64,
    pub shells: Vec<Shell>,
    /// Integer coordinates of the vectors in each shell, if requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vectors: Option<Vec<Vec<Vec<i64>>>>,
}

impl ShellSeries {
    pub fn total_vectors(&self) -> usize {
        self.shells.iter().map(|s| s.multiplicity).sum()
    }

    /// Squared length of the shortest nonzero vector, if any was enumerated.
    pub fn min_norm_sq(&self) -> Option<f64> {
        self.shells.first().map(|s| s.norm_sq)
    }

    /// `sum_shells multiplicity * f(norm_sq)`, accumulated in increasing norm
    /// order with compensation.
    pub fn sum<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut acc = Compensated::default();
        for s in &self.shells {
            acc.add(s.multiplicity as f64 * f(s.norm_sq));
        }
        acc.value()
    }

    /// Like [`ShellSeries::sum`] but only over shells with `norm_sq <= r2`.
    pub fn sum_within<F: Fn(f64) -> f64>(&self, r2: f64, f: F) -> (f64, usize) {
        let mut acc = Compensated::default();
        let mut count = 0;
        for s in self.shells.iter().take_while(|s| s.norm_sq <= r2) {
            acc.add(s.multiplicity as f64 * f(s.norm_sq));
            count += s.multiplicity;
        }
        (acc.value(), count)
    }

    fn from_sorted(cutoff_radius: f64, norms: &[f64], coords: Option<Vec<Vec<i64>>>) -> Self {
        let mut shells: Vec<Shell> = Vec::new();
        let mut vectors: Vec<Vec<Vec<i64>>> = Vec::new();
        let mut coords = coords.map(Vec::into_iter);
        let mut start = f64::NEG_INFINITY;
        let mut norm_acc = 0.0;
        for &n in norms {
            if shells.is_empty() || n - start > SHELL_TOLERANCE {
                if let Some(last) = shells.last_mut() {
                    last.norm_sq = norm_acc / last.multiplicity as f64;
                }
                start = n;
                norm_acc = 0.0;
                shells.push(Shell {
                    norm_sq: n,
                    multiplicity: 0,
                });
                if coords.is_some() {
                    vectors.push(Vec::new());
                }
            }
            let last = shells.last_mut().unwrap();
            last.multiplicity += 1;
            norm_acc += n;
            if let Some(it) = coords.as_mut() {
                vectors.last_mut().unwrap().push(it.next().unwrap());
            }
        }
        if let Some(last) = shells.last_mut() {
            last.norm_sq = norm_acc / last.multiplicity as f64;
        }
        ShellSeries {
            cutoff_radius,
            shells,
            vectors: coords.map(|_| vectors),
        }
    }
}

/// Neumaier summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EnumerationOptions {
    pub cap: f64,
    pub keep_vectors: bool,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            cap: DEFAULT_CAP,
            keep_vectors: false,
        }
    }
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    std::f64::consts::PI.powf(h) / statrs::function::gamma::gamma(h + 1.0)
}

/// Upper bound on `#{p in L : |p| <= r}`: every Voronoi cell of such a point
/// sits inside the ball of radius `r + covering radius`.
pub fn count_bound(l: &Lattice, r: f64) -> f64 {
    let d = l.dim();
    unit_ball_volume(d) * (r + l.covering_radius_bound()).powi(d as i32) / l.covolume()
}

pub fn enumerate_shells(l: &Lattice, radius: f64) -> Result<ShellSeries> {
    enumerate_shells_with(l, radius, EnumerationOptions::default())
}

pub fn enumerate_shells_with(l: &Lattice, radius: f64, opts: EnumerationOptions) -> Result<ShellSeries> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::DomainError(format!("radius must be positive, got {radius}")));
    }
    let predicted = count_bound(l, radius);
    if predicted > opts.cap {
        return Err(Error::EnumerationTooLarge {
            predicted,
            cap: opts.cap,
        });
    }
    let cond = l.condition_number();
    if cond > CONDITION_WARNING {
        log::warn!("enumerating a poorly conditioned basis (condition number {cond:.3e})");
    }
    let r2 = radius * radius;
    if opts.keep_vectors {
        let mut entries: Vec<(f64, Vec<i64>)> = Vec::new();
        for_each_vector(l, r2, |z, n| entries.push((n, z.to_vec())));
        entries.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        let (norms, coords): (Vec<f64>, Vec<Vec<i64>>) = entries.into_iter().unzip();
        Ok(ShellSeries::from_sorted(radius, &norms, Some(coords)))
    } else {
        let mut norms: Vec<f64> = Vec::new();
        for_each_vector(l, r2, |_, n| norms.push(n));
        norms.sort_by(f64::total_cmp);
        Ok(ShellSeries::from_sorted(radius, &norms, None))
    }
}

/// Squared length of a shortest nonzero vector.
pub fn shortest_norm_sq(l: &Lattice) -> f64 {
    let r2 = (0..l.dim())
        .map(|i| l.gram()[(i, i)])
        .fold(f64::INFINITY, f64::min);
    let mut best = f64::INFINITY;
    for_each_vector(l, r2, |_, n| best = best.min(n));
    best
}

/// Calls `visit(coords, |p|^2)` for every nonzero lattice vector with
/// `|p|^2 <= r2`. The norm passed is recomputed from the basis.
pub(crate) fn for_each_vector<F: FnMut(&[i64], f64)>(l: &Lattice, r2: f64, mut visit: F) {
    let d = l.dim();
    let chol = l
        .gram()
        .clone()
        .cholesky()
        .expect("Gram matrix of a valid basis is positive definite");
    let low = chol.l();
    // |p|^2 = sum_i diag[i]^2 * (z_i + sum_{j>i} mu[i][j] z_j)^2
    let diag: Vec<f64> = (0..d).map(|i| low[(i, i)]).collect();
    let mu: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if j > i { low[(j, i)] / low[(i, i)] } else { 0.0 }).collect())
        .collect();
    let basis = l.basis();
    let slack = r2 * (1.0 + 1e-10);

    let mut z = vec![0i64; d];
    let mut hi = vec![0i64; d];
    let mut center = vec![0.0; d];
    let mut partial = vec![0.0; d + 1];
    let mut point = vec![0.0; d];

    let init = |i: usize, z: &mut [i64], hi: &mut [i64], center: &mut [f64], partial: &[f64]| {
        let c: f64 = -((i + 1)..d).map(|j| mu[i][j] * z[j] as f64).sum::<f64>();
        let rem = (slack - partial[i + 1]).max(0.0);
        let w = rem.sqrt() / diag[i];
        center[i] = c;
        z[i] = (c - w).ceil() as i64;
        hi[i] = (c + w).floor() as i64;
    };

    let mut i = d - 1;
    init(i, &mut z, &mut hi, &mut center, &partial);
    loop {
        if z[i] > hi[i] {
            if i == d - 1 {
                break;
            }
            i += 1;
            z[i] += 1;
            continue;
        }
        let y = diag[i] * (z[i] as f64 - center[i]);
        partial[i] = partial[i + 1] + y * y;
        if i == 0 {
            if z.iter().any(|&c| c != 0) {
                for (j, pj) in point.iter_mut().enumerate() {
                    *pj = (0..d).map(|k| z[k] as f64 * basis[(k, j)]).sum();
                }
                let n: f64 = point.iter().map(|x| x * x).sum();
                if n <= slack {
                    visit(&z, n);
                }
            }
            z[0] += 1;
        } else {
            i -= 1;
            init(i, &mut z, &mut hi, &mut center, &partial);
        }
    }
}

/// A lattice vector given by integer coordinates in the lattice basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeVector {
    pub coords: Vec<i64>,
    pub norm_sq: f64,
}

impl LatticeVector {
    pub fn norm(&self) -> f64 {
        self.norm_sq.sqrt()
    }
}

/// One representative of each pair `+-w` of primitive vectors with `|w| <= radius`.
///
/// A vector is primitive when the gcd of its integer coordinates is 1. The
/// representative is the one whose first nonzero coordinate is positive;
/// output is sorted by norm, then lexicographically by coordinates.
pub fn primitive_representatives(l: &Lattice, radius: f64) -> Result<Vec<LatticeVector>> {
    primitive_representatives_with(l, radius, DEFAULT_CAP)
}

pub fn primitive_representatives_with(l: &Lattice, radius: f64, cap: f64) -> Result<Vec<LatticeVector>> {
    if !(radius > 0.0) {
        return Err(Error::DomainError(format!("radius must be positive, got {radius}")));
    }
    let predicted = count_bound(l, radius);
    if predicted > cap {
        return Err(Error::EnumerationTooLarge { predicted, cap });
    }
    let mut out = Vec::new();
    for_each_vector(l, radius * radius, |z, n| {
        let first = z.iter().copied().find(|&c| c != 0).unwrap_or(0);
        if first > 0 && coordinate_gcd(z) == 1 {
            out.push(LatticeVector {
                coords: z.to_vec(),
                norm_sq: n,
            });
        }
    });
    out.sort_by(|a, b| {
        a.norm_sq
            .total_cmp(&b.norm_sq)
            .then_with(|| a.coords.cmp(&b.coords))
    });
    Ok(out)
}

pub fn coordinate_gcd(z: &[i64]) -> i64 {
    z.iter().fold(0i64, |g, &c| g.gcd(&c))
}
