//! Lattice-logarithm `log_L(x) = -(1/2) sum_{p != 0} (1-x)^|p| / |p|`, its
//! one-dimensional periodic-sequence analogues, and the two-lattice energy
//! `sum_{q in Lambda} log_L(1 - exp(-f(|q|^2)))`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::sequence::PeriodicSequence;
use crate::shells::Compensated;
use crate::sums::{Envelope, LatticeShells, SumResult};

/// Minimum separation between distinct points of a periodic sequence.
pub const COINCIDENCE_GAP: f64 = 1e-12;

/// A number `x` in `(0, 1)`, kept together with `1 - x` and the decay rate
/// `-ln(1 - x)` so that arguments very close to 1 lose nothing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogArgument {
    x: f64,
    base: f64,
    rate: f64,
}

impl LogArgument {
    pub fn new(x: f64) -> Result<Self> {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::DomainError(format!("log argument must lie in (0, 1), got {x}")));
        }
        Ok(LogArgument {
            x,
            base: 1.0 - x,
            rate: -(-x).ln_1p(),
        })
    }

    /// The argument `x = 1 - y`, specified through `y`.
    pub fn from_complement(y: f64) -> Result<Self> {
        if !(y > 0.0 && y < 1.0) {
            return Err(Error::DomainError(format!("1 - x must lie in (0, 1), got {y}")));
        }
        Ok(LogArgument {
            x: 1.0 - y,
            base: y,
            rate: -y.ln(),
        })
    }

    /// The argument `x = 1 - exp(-rate)`.
    pub fn from_rate(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::DomainError(format!("decay rate must be positive, got {rate}")));
        }
        Ok(LogArgument {
            x: -(-rate).exp_m1(),
            base: (-rate).exp(),
            rate,
        })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    /// `1 - x`.
    pub fn base(&self) -> f64 {
        self.base
    }

    /// `-ln(1 - x)`.
    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// `phi_x(r) = (1-x)^r / r`.
pub fn log_kernel(x: LogArgument, r: f64) -> f64 {
    (-x.rate * r).exp() / r
}

/// `psi_x(r) = x^r / Gamma(r + 1)`.
pub fn exp_kernel(x: f64, r: f64) -> f64 {
    (r * x.ln() - ln_gamma(r + 1.0)).exp()
}

/// Lattice-logarithm sums over one enumeration of `L`, valid for every
/// decay rate at least `rate_min`.
#[derive(Clone, Debug)]
pub struct LogLatticeSeries {
    shells: LatticeShells,
    rate_min: f64,
}

impl LogLatticeSeries {
    pub fn new(l: &Lattice, rate_min: f64, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::DomainError(format!("tol must be positive, got {tol}")));
        }
        let env = Envelope::exponential(0.5, 1.0, rate_min);
        let shells = LatticeShells::for_envelope(l, tol, 0.0, |_| Some(env))?;
        Ok(LogLatticeSeries { shells, rate_min })
    }

    /// `log_L(1 - exp(-rate))`.
    pub fn value(&self, rate: f64) -> f64 {
        debug_assert!(rate >= self.rate_min * (1.0 - 1e-12));
        -0.5 * self.shells.sum(|n| {
            let r = n.sqrt();
            (-rate * r).exp() / r
        })
    }

    pub fn tail(&self, rate: f64) -> f64 {
        self.shells
            .tail(&Envelope::exponential(0.5, 1.0, rate.max(self.rate_min)))
    }

    pub fn shells(&self) -> &LatticeShells {
        &self.shells
    }

    pub fn result(&self, rate: f64) -> SumResult {
        SumResult {
            value: self.value(rate),
            tail_bound: self.tail(rate),
            terms_used: self.shells.terms(),
            cutoff_radius: self.shells.radius(),
        }
    }
}

/// `log_L(x)`.
pub fn log_lattice(l: &Lattice, x: LogArgument, tol: f64) -> Result<SumResult> {
    Ok(LogLatticeSeries::new(l, x.rate, tol)?.result(x.rate))
}

/// The sequence-logarithm
/// `-(1/(4N)) sum_{i=1}^N sum_{j != i} (1-x)^|t_j - t_i| / |t_j - t_i|`,
/// exactly as defined (multiplier 1).
pub fn log_sequence(seq: &PeriodicSequence, x: LogArgument, tol: f64) -> Result<SumResult> {
    log_sequence_scaled(seq, x, tol, 1.0)
}

/// [`log_sequence`] times `multiplier`.
pub fn log_sequence_scaled(seq: &PeriodicSequence, x: LogArgument, tol: f64, multiplier: f64) -> Result<SumResult> {
    let n = seq.period();
    let nf = n as f64;
    let per_block = (-x.rate * nf).exp();
    // Offsets with |j - i| >= A N are at distance >= A N; their total
    // contribution is at most rho^(A N) / (2 A (1 - rho^N)).
    let tail = |a: f64| per_block.powf(a) / (2.0 * a * (1.0 - per_block));
    let mut blocks = 1usize;
    while tail(blocks as f64) * multiplier.abs() > tol {
        blocks += 1;
        if blocks > 1_000_000_000 / n.max(1) {
            return Err(Error::NonConvergence(format!(
                "sequence-logarithm tail does not reach {tol:e} for x = {}",
                x.x
            )));
        }
    }
    let reach = (blocks * n) as i64;
    let mut acc = Compensated::default();
    for i in 0..n as i64 {
        let ti = seq.at(i);
        for k in (1 - reach)..reach {
            if k == 0 {
                continue;
            }
            let gap = (seq.at(i + k) - ti).abs();
            if gap < COINCIDENCE_GAP {
                return Err(Error::CoincidentPoints { i: i + 1, j: i + k + 1, gap });
            }
            acc.add(log_kernel(x, gap));
        }
    }
    Ok(SumResult {
        value: -multiplier * acc.value() / (4.0 * nf),
        tail_bound: tail(blocks as f64) * multiplier.abs(),
        terms_used: (n as u64) * (2 * reach as u64 - 2),
        cutoff_radius: reach as f64,
    })
}

/// The sequence-exponential
/// `(1/(2N)) sum_{i=1}^N sum_{j != i} x^|t_j - t_i| / Gamma(|t_j - t_i| + 1)`.
pub fn exp_sequence(seq: &PeriodicSequence, x: f64, tol: f64) -> Result<SumResult> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::DomainError(format!("x must be positive, got {x}")));
    }
    let n = seq.period();
    let nf = n as f64;
    // psi_x decreases on [x, inf) and successive blocks shrink by at least
    // half once A N + 1 >= 2x, so the tail is at most 2 N psi_x(A N).
    let tail = |a: usize| 2.0 * nf * exp_kernel(x, (a * n) as f64);
    let mut blocks = 1usize;
    while ((blocks * n) as f64) < (2.0 * x).max(1.0) || tail(blocks) > tol {
        blocks += 1;
    }
    let reach = (blocks * n) as i64;
    let mut acc = Compensated::default();
    for i in 0..n as i64 {
        let ti = seq.at(i);
        for k in (1 - reach)..reach {
            if k == 0 {
                continue;
            }
            let gap = (seq.at(i + k) - ti).abs();
            if gap < COINCIDENCE_GAP {
                return Err(Error::CoincidentPoints { i: i + 1, j: i + k + 1, gap });
            }
            acc.add(exp_kernel(x, gap));
        }
    }
    Ok(SumResult {
        value: acc.value() / (2.0 * nf),
        tail_bound: tail(blocks),
        terms_used: (n as u64) * (2 * reach as u64 - 2),
        cutoff_radius: reach as f64,
    })
}

/// An interaction `f` on squared distances together with a linear lower
/// bound `f(r) >= intercept + slope * r` (both positive), which drives the
/// truncation of the two-lattice energy.
#[derive(Clone)]
pub struct PairPotential {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    intercept: f64,
    slope: f64,
}

impl std::fmt::Debug for PairPotential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PairPotential")
            .field("intercept", &self.intercept)
            .field("slope", &self.slope)
            .finish_non_exhaustive()
    }
}

impl PairPotential {
    pub fn new<F>(f: F, intercept: f64, slope: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(intercept > 0.0 && slope > 0.0) {
            return Err(Error::DomainError(format!(
                "pair potential needs a positive linear lower bound, got {intercept} + {slope} r"
            )));
        }
        Ok(PairPotential {
            f: Arc::new(f),
            intercept,
            slope,
        })
    }

    /// `f(r) = intercept + slope * r`.
    pub fn affine(intercept: f64, slope: f64) -> Result<Self> {
        Self::new(move |r| intercept + slope * r, intercept, slope)
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.f)(r)
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PairMode {
    /// `sum_{q in Lambda} log_L(1 - exp(-f(|q|^2)))`.
    Direct,
    /// `-(1/2) sum_{p in L, p != 0} |p|^-1 sum_{q in Lambda} exp(-|p| f(|q|^2))`.
    #[default]
    Swapped,
}

/// `E_f[L, Lambda] = sum_{q in Lambda} log_L(1 - exp(-f(|q|^2)))`.
pub fn pair_energy(l: &Lattice, lam: &Lattice, pot: &PairPotential, mode: PairMode, tol: f64) -> Result<SumResult> {
    if l.dim() != lam.dim() {
        return Err(Error::InvalidInput(format!(
            "lattices of different dimensions ({} and {})",
            l.dim(),
            lam.dim()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::DomainError(format!("tol must be positive, got {tol}")));
    }
    let f0 = pot.eval(0.0);
    if !(f0 > 0.0) {
        return Err(Error::DomainError(format!("f(0) must be positive, got {f0}")));
    }
    match mode {
        PairMode::Direct => pair_direct(l, lam, pot, tol),
        PairMode::Swapped => pair_swapped(l, lam, pot, tol),
    }
}

fn pair_direct(l: &Lattice, lam: &Lattice, pot: &PairPotential, tol: f64) -> Result<SumResult> {
    let c0 = pot.intercept;
    let c1 = pot.slope;
    let inner = LogLatticeSeries::new(l, c0, tol / 4.0)?;
    let lambda1 = inner
        .shells()
        .min_norm_sq()
        .ok_or_else(|| Error::NonConvergence("lattice-logarithm window holds no vectors".into()))?
        .sqrt();
    let outer_env = |r: f64| {
        let y0 = c0 + c1 * r * r;
        let head = inner.value(y0).abs() + inner.tail(y0);
        Some(Envelope::gaussian(head * (lambda1 * c1 * r * r).exp(), lambda1 * c1))
    };
    let outer = LatticeShells::for_envelope(lam, tol / 2.0, 0.0, outer_env)?;

    let y_origin = pot.eval(0.0);
    let mut acc = Compensated::default();
    let mut inner_tail = inner.tail(y_origin);
    acc.add(inner.value(y_origin));
    for shell in &outer.series.shells {
        let y = pot.eval(shell.norm_sq);
        let m = shell.multiplicity as f64;
        acc.add(m * inner.value(y));
        inner_tail += m * inner.tail(y);
    }
    let env = outer_env(outer.radius()).unwrap();
    Ok(SumResult {
        value: acc.value(),
        tail_bound: outer.tail(&env) + inner_tail,
        terms_used: (outer.terms() + 1) * inner.shells().terms(),
        cutoff_radius: outer.radius(),
    })
}

fn pair_swapped(l: &Lattice, lam: &Lattice, pot: &PairPotential, tol: f64) -> Result<SumResult> {
    let c0 = pot.intercept;
    let c1 = pot.slope;
    // K = |log_L(1 - exp(-c0))| weighs the inner truncation error.
    let weight = log_lattice(l, LogArgument::from_rate(c0)?, tol)?;
    let k = weight.value.abs() + weight.tail_bound;
    let lambda1 = crate::shells::shortest_norm_sq(l).sqrt();
    let a_min = lambda1 * c1;
    let inner = LatticeShells::for_envelope(lam, tol / (2.0 * k), 0.0, |_| Some(Envelope::gaussian(1.0, a_min)))?;
    let inner_tail = inner.tail(&Envelope::gaussian(1.0, a_min));
    let theta_lam = |a: f64| 1.0 + inner.sum(|n| (-a * n).exp()) + inner_tail;
    let outer_env = |r: f64| {
        let a = r.max(lambda1) * c1;
        Some(Envelope::exponential(0.5 * theta_lam(a), 1.0, c0))
    };
    let outer = LatticeShells::for_envelope(l, tol / 2.0, 0.0, outer_env)?;

    let f_origin = pot.eval(0.0);
    let inner_shells: Vec<(f64, f64)> = inner
        .series
        .shells
        .iter()
        .map(|s| (s.multiplicity as f64, pot.eval(s.norm_sq)))
        .collect();
    let mut acc = Compensated::default();
    for shell in &outer.series.shells {
        let w = shell.norm_sq.sqrt();
        let mut s = Compensated::default();
        s.add((-w * f_origin).exp());
        for &(m, fq) in &inner_shells {
            s.add(m * (-w * fq).exp());
        }
        acc.add(shell.multiplicity as f64 * s.value() / w);
    }
    let env = outer_env(outer.radius()).unwrap();
    Ok(SumResult {
        value: -0.5 * acc.value(),
        tail_bound: outer.tail(&env) + inner_tail * k,
        terms_used: outer.terms() * (inner.terms() + 1),
        cutoff_radius: outer.radius(),
    })
}
