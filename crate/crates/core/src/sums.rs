//! Truncated lattice sums with certified remainders.
//!
//! A radial summand is dominated beyond the cutoff `R` by an [`Envelope`]
//! `g(r) = C r^-k exp(-b r - a r^2)`. With `N(r) <= omega_d (r + rho)^d / V`
//! (`rho` a covering radius bound, `V` the covolume) and `g` decreasing,
//!
//! ```text
//! sum_{|p| > R} g(|p|) <= g(R) N_up(R) + (d omega_d / V) * int_R^inf g(r) (r + rho)^(d-1) dr,
//! ```
//!
//! and the integral is bounded through the log-derivative of its integrand.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::shells::{self, ShellSeries, DEFAULT_CAP};

/// A truncated sum together with a bound on what was left out.
///
/// On success `tail_bound <= tol` for the tolerance the sum was requested at.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumResult {
    pub value: f64,
    pub tail_bound: f64,
    pub terms_used: u64,
    pub cutoff_radius: f64,
}

impl SumResult {
    pub fn scaled(self, c: f64) -> Self {
        SumResult {
            value: self.value * c,
            tail_bound: self.tail_bound * c.abs(),
            ..self
        }
    }
}

/// The geometric data that enters the counting bound.
#[derive(Clone, Copy, Debug)]
pub struct Geometry {
    pub dim: usize,
    pub covolume: f64,
    pub covering: f64,
}

impl Geometry {
    pub fn of(l: &Lattice) -> Self {
        Geometry {
            dim: l.dim(),
            covolume: l.covolume(),
            covering: l.covering_radius_bound(),
        }
    }

    /// Upper bound on the number of lattice points with `|p| <= r`.
    pub fn count_bound(&self, r: f64) -> f64 {
        shells::unit_ball_volume(self.dim) * (r + self.covering).powi(self.dim as i32) / self.covolume
    }
}

/// `g(r) = scale * r^-power * exp(-linear * r - quadratic * r^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Envelope {
    pub scale: f64,
    pub power: f64,
    pub linear: f64,
    pub quadratic: f64,
}

impl Envelope {
    pub fn gaussian(scale: f64, quadratic: f64) -> Self {
        Envelope { scale, power: 0.0, linear: 0.0, quadratic }
    }

    pub fn exponential(scale: f64, power: f64, linear: f64) -> Self {
        Envelope { scale, power, linear, quadratic: 0.0 }
    }

    pub fn power_law(scale: f64, power: f64) -> Self {
        Envelope { scale, power, linear: 0.0, quadratic: 0.0 }
    }

    pub fn at(&self, r: f64) -> f64 {
        self.scale * r.powf(-self.power) * (-self.linear * r - self.quadratic * r * r).exp()
    }

    /// Bound on `sum_{p in L, |p| > r} g(|p|)`; infinite when the bound does not apply at `r`.
    pub fn lattice_tail(&self, geom: &Geometry, r: f64) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        let d = geom.dim as f64;
        let rho = geom.covering;
        let g = self.at(r);
        let surface = d * shells::unit_ball_volume(geom.dim) / geom.covolume;
        let integral = if self.linear == 0.0 && self.quadratic == 0.0 {
            if self.power <= d {
                return f64::INFINITY;
            }
            self.scale * (1.0 + rho / r).powf(d - 1.0) * r.powf(d - self.power) / (self.power - d)
        } else {
            let kappa = self.linear + 2.0 * self.quadratic * r
                - (-self.power / r).max(0.0)
                - (d - 1.0) / (r + rho);
            if kappa <= 0.0 {
                return f64::INFINITY;
            }
            g * (r + rho).powf(d - 1.0) / kappa
        };
        g * geom.count_bound(r) + surface * integral
    }
}

/// Smallest radius on a geometric grid starting at `start` where the tail
/// bound of `envelope_at(r)` drops to `target`.
pub fn select_radius<E>(geom: &Geometry, target: f64, start: f64, envelope_at: E) -> Result<f64>
where
    E: Fn(f64) -> Option<Envelope>,
{
    let mut r = start.max(1e-3 * geom.covolume.powf(1.0 / geom.dim as f64));
    for _ in 0..4000 {
        if let Some(env) = envelope_at(r) {
            if env.lattice_tail(geom, r) <= target {
                return Ok(r);
            }
        }
        if geom.count_bound(r) > DEFAULT_CAP {
            break;
        }
        r *= 1.02;
    }
    Err(Error::NonConvergence(format!(
        "no cutoff below the enumeration cap meets tolerance {target:e} (reached radius {r:.4e})"
    )))
}

/// A lattice with its shells enumerated to a fixed radius, for repeated sums.
#[derive(Clone, Debug)]
pub struct LatticeShells {
    pub lattice: Lattice,
    pub geometry: Geometry,
    pub series: ShellSeries,
}

impl LatticeShells {
    pub fn new(lattice: &Lattice, radius: f64) -> Result<Self> {
        let series = shells::enumerate_shells(lattice, radius).map_err(cap_to_nonconvergence)?;
        Ok(LatticeShells {
            lattice: lattice.clone(),
            geometry: Geometry::of(lattice),
            series,
        })
    }

    /// Enumerates to the first radius at which `envelope_at` certifies `tol`.
    pub fn for_envelope<E>(lattice: &Lattice, tol: f64, start: f64, envelope_at: E) -> Result<Self>
    where
        E: Fn(f64) -> Option<Envelope>,
    {
        let geom = Geometry::of(lattice);
        let r = select_radius(&geom, tol, start, envelope_at)?;
        Self::new(lattice, r)
    }

    pub fn radius(&self) -> f64 {
        self.series.cutoff_radius
    }

    pub fn tail(&self, env: &Envelope) -> f64 {
        env.lattice_tail(&self.geometry, self.radius())
    }

    /// `sum_{p != 0, |p| <= R} f(|p|^2)`.
    pub fn sum<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.series.sum(f)
    }

    pub fn terms(&self) -> u64 {
        self.series.total_vectors() as u64
    }

    pub fn min_norm_sq(&self) -> Option<f64> {
        self.series.min_norm_sq()
    }
}

fn cap_to_nonconvergence(e: Error) -> Error {
    match e {
        Error::EnumerationTooLarge { predicted, cap } => Error::NonConvergence(format!(
            "cutoff needs about {predicted:.3e} vectors, above the cap {cap:.3e}"
        )),
        other => other,
    }
}
