//! The Casimir-type integral `Delta_m(L)`, the two-lattice deformed eta
//! function `E_{L,Lambda}^{(m)}(it)` in product and series form, and the
//! classical Dedekind eta on the imaginary axis.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{OnceLock, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::llog::LogLatticeSeries;
use crate::quadrature::{self, GaussLegendre};
use crate::shells::{self, Compensated};
use crate::special::{theta, ThetaSeries};
use crate::sums::{select_radius, Envelope, Geometry, LatticeShells, SumResult};

/// Parameters of `E^{(m)}(it)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaParams {
    pub m: f64,
    pub t: f64,
    /// Absolute tolerance of the lattice sums.
    pub tol: f64,
    /// Tolerance of the `Delta_m` quadrature.
    pub quad_tol: f64,
    /// Multiplier on the lattice-logarithm term of the series form.
    pub series_factor: f64,
}

impl EtaParams {
    pub const DEFAULT_TOL: f64 = 1e-10;
    pub const DEFAULT_QUAD_TOL: f64 = 1e-8;
    pub const DEFAULT_SERIES_FACTOR: f64 = 0.5;

    pub fn new(m: f64, t: f64) -> Result<Self> {
        let p = EtaParams {
            m,
            t,
            tol: Self::DEFAULT_TOL,
            quad_tol: Self::DEFAULT_QUAD_TOL,
            series_factor: Self::DEFAULT_SERIES_FACTOR,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_tol(mut self, tol: f64, quad_tol: f64) -> Self {
        self.tol = tol;
        self.quad_tol = quad_tol;
        self
    }

    pub fn with_series_factor(mut self, factor: f64) -> Self {
        self.series_factor = factor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("m", self.m),
            ("t", self.t),
            ("tol", self.tol),
            ("quad_tol", self.quad_tol),
            ("series_factor", self.series_factor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::DomainError(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// The nome `q = exp(-pi t)`.
    pub fn q(&self) -> f64 {
        (-PI * self.t).exp()
    }
}

/// Quadrature scheme for [`casimir_delta_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaScheme {
    /// Globally adaptive Gauss-Kronrod bisection.
    #[default]
    Adaptive,
    /// Composite 20-point Gauss-Legendre on fixed panels.
    FixedPanels,
}

type DeltaKey = (Vec<u64>, u64, u64);

fn delta_cache() -> &'static RwLock<HashMap<DeltaKey, SumResult>> {
    static CACHE: OnceLock<RwLock<HashMap<DeltaKey, SumResult>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// `Delta_m(L) = -(8 pi V^(1/2))^-1 int_0^inf s^((d-1)/2) exp(-pi m^2/s) (theta_{L*}(s) - 1) ds`
/// with `V` the covolume, to relative tolerance `tol` (absolute floor
/// `1e-4 * tol` on the integral). Results are cached per lattice, `m` and `tol`.
///
/// `cutoff_radius` of the result is the upper limit used on `s`.
pub fn casimir_delta(l: &Lattice, m: f64, tol: f64) -> Result<SumResult> {
    let key = (l.fingerprint(), m.to_bits(), tol.to_bits());
    if let Some(hit) = delta_cache().read().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(*hit);
    }
    let r = casimir_delta_with(l, m, tol, DeltaScheme::Adaptive)?;
    delta_cache()
        .write()
        .unwrap_or_else(|e| e.into_inner())
        .insert(key, r);
    Ok(r)
}

/// Uncached [`casimir_delta`] with an explicit quadrature scheme.
pub fn casimir_delta_with(l: &Lattice, m: f64, tol: f64, scheme: DeltaScheme) -> Result<SumResult> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::DomainError(format!("m must be positive, got {m}")));
    }
    if !(tol > 0.0) {
        return Err(Error::DomainError(format!("tol must be positive, got {tol}")));
    }
    let d = l.dim() as f64;
    let k = 0.5 * (d - 1.0);
    let vol = l.covolume();
    let dual = l.dual();
    let floor = 1e-4 * tol;
    let mass = PI * m * m;

    // On [1, S] use theta_{L*}(s) - 1 <= (theta_{L*}(1) - 1) exp(-pi lambda*^2 (s - 1)).
    let c = PI * shells::shortest_norm_sq(&dual);
    let th_dual_1 = theta(&dual, 1.0, 1e-12)?;
    let head = th_dual_1.value - 1.0 + th_dual_1.tail_bound;
    let tail_a = |s: f64| {
        let kappa = c - k / s;
        if kappa <= 0.0 {
            f64::INFINITY
        } else {
            head * c.exp() * s.powf(k) * (-c * s).exp() / kappa
        }
    };
    let upper_s = grow_until(|s| tail_a(s) <= floor / 4.0)?;

    // On u = 1/s in [1, U], |integrand| <= V theta_L(1) u^(-3/2) exp(-pi m^2 u).
    let th_1 = theta(l, 1.0, 1e-12)?;
    let th_1 = th_1.value + th_1.tail_bound;
    let tail_b = |u: f64| vol * th_1 * u.powf(-1.5) * (-mass * u).exp() / mass;
    let upper_u = grow_until(|u| tail_b(u) <= floor / 4.0)?;

    // Truncation of the theta sums inside the integrands.
    let theta_tol = floor / 8.0;
    let th_dual = ThetaSeries::new(&dual, 1.0, theta_tol / (upper_s.powf(k + 1.0) / (k + 1.0)))?;
    let th = ThetaSeries::new(l, 1.0, theta_tol / (2.0 * vol))?;
    let theta_err = th_dual.tail_bound(1.0) * upper_s.powf(k + 1.0) / (k + 1.0) + 2.0 * vol * th.tail_bound(1.0);

    let fa = |s: f64| s.powf(k) * (-mass / s).exp() * th_dual.minus_one(s);
    let fb = |u: f64| {
        let theta_minus_one = th.minus_one(u);
        // V u^(d/2) theta_L(u) - 1, the Poisson image of theta_{L*}(1/u) - 1
        let image = vol * u.powf(0.5 * d) * (1.0 + theta_minus_one) - 1.0;
        u.powf(-k - 2.0) * (-mass * u).exp() * image
    };

    let (ia, ea, na, ib, eb, nb) = match scheme {
        DeltaScheme::Adaptive => {
            let a = quadrature::adaptive(fa, 1.0, upper_s, floor, tol)?;
            let b = quadrature::adaptive(fb, 1.0, upper_u, floor, tol)?;
            (a.value, a.error, a.evaluations, b.value, b.error, b.evaluations)
        }
        DeltaScheme::FixedPanels => {
            let gl = GaussLegendre::new(20);
            let fw = |w: f64| {
                let u = w.exp();
                fb(u) * u
            };
            let wmax = upper_u.ln();
            let a = gl.panels(&fa, 1.0, upper_s, 128);
            let a_coarse = gl.panels(&fa, 1.0, upper_s, 64);
            let b = gl.panels(&fw, 0.0, wmax, 256);
            let b_coarse = gl.panels(&fw, 0.0, wmax, 128);
            (a, (a - a_coarse).abs(), 20 * 192, b, (b - b_coarse).abs(), 20 * 384)
        }
    };
    let pref = 1.0 / (8.0 * PI * vol.sqrt());
    let value = -pref * (ia + ib);
    if !value.is_finite() {
        return Err(Error::QuadratureFailure(format!("non-finite Delta_m for m = {m}")));
    }
    Ok(SumResult {
        value,
        tail_bound: pref * (ea + eb + tail_a(upper_s) + tail_b(upper_u) + theta_err),
        terms_used: (na + nb) as u64,
        cutoff_radius: upper_s,
    })
}

fn grow_until(done: impl Fn(f64) -> bool) -> Result<f64> {
    let mut x = 2.0;
    for _ in 0..400 {
        if done(x) {
            return Ok(x);
        }
        x *= 1.1;
    }
    Err(Error::NonConvergence("integration range does not close".into()))
}

/// `ln(1 - exp(-z))` for `z > 0` without cancellation.
pub fn ln_one_minus_exp(z: f64) -> f64 {
    if z < std::f64::consts::LN_2 {
        (-(-z).exp_m1()).ln()
    } else {
        (-(-z).exp()).ln_1p()
    }
}

fn check_pair(l: &Lattice, lam: &Lattice, params: &EtaParams) -> Result<()> {
    params.validate()?;
    if l.dim() != lam.dim() {
        return Err(Error::InvalidInput(format!(
            "lattices of different dimensions ({} and {})",
            l.dim(),
            lam.dim()
        )));
    }
    let qm = (-PI * params.t * params.m * params.m).exp();
    if qm >= 1.0 - 1e-15 {
        return Err(Error::DegenerateNome(qm));
    }
    Ok(())
}

/// `pi t^((d+1)/2) Delta_m(L)`, the logarithm of the `q`-power prefactor.
pub fn prefactor_term(l: &Lattice, params: &EtaParams) -> Result<SumResult> {
    let d = l.dim() as f64;
    let delta = casimir_delta(l, params.m, params.quad_tol)?;
    Ok(delta.scaled(PI * params.t.powf(0.5 * (d + 1.0))))
}

/// The two summands of a logarithm of `E`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaParts {
    /// `pi t^((d+1)/2) Delta_m(L)`.
    pub prefactor: SumResult,
    /// The double product (or its series rewriting).
    pub lattice_part: SumResult,
}

impl EtaParts {
    pub fn total(&self) -> SumResult {
        SumResult {
            value: self.prefactor.value + self.lattice_part.value,
            tail_bound: self.prefactor.tail_bound + self.lattice_part.tail_bound,
            terms_used: self.prefactor.terms_used + self.lattice_part.terms_used,
            cutoff_radius: self.lattice_part.cutoff_radius,
        }
    }
}

/// `ln E_{L,Lambda}^{(m)}(it)` from the product over primitive `w in Lambda`
/// (up to sign) and all `v in L`.
pub fn log_eta_product(l: &Lattice, lam: &Lattice, params: &EtaParams) -> Result<SumResult> {
    Ok(log_eta_product_parts(l, lam, params)?.total())
}

pub fn log_eta_product_parts(l: &Lattice, lam: &Lattice, params: &EtaParams) -> Result<EtaParts> {
    check_pair(l, lam, params)?;
    let prefactor = prefactor_term(l, params)?;
    let lattice_part = product_part(l, lam, params)?;
    Ok(EtaParts { prefactor, lattice_part })
}

/// `sum_{w in P_Lambda/+-} sum_{v in L} t^((d-1)/2) / (2|w|) ln(1 - q^(|w|(m^2 + |v|^2)))`.
fn product_part(l: &Lattice, lam: &Lattice, params: &EtaParams) -> Result<SumResult> {
    let d = l.dim() as f64;
    let (m2, t, tol) = (params.m * params.m, params.t, params.tol);
    let weight = t.powf(0.5 * (d - 1.0));
    let lambda1 = shells::shortest_norm_sq(lam).sqrt();
    // |ln(1 - e^-z)| <= e^-z / (1 - e^-z_min)
    let z_min = PI * t * lambda1 * m2;
    let blowup = 1.0 / -(-z_min).exp_m1();
    let th = theta(l, t * lambda1, 1e-6)?;
    let theta_max = th.value + th.tail_bound;

    // Primitive classes are at most half the nonzero vectors.
    let outer_env = Envelope::exponential(0.25 * weight * blowup * theta_max, 1.0, PI * t * m2);
    let geom = Geometry::of(lam);
    let r_w = select_radius(&geom, tol / 2.0, lambda1, |_| Some(outer_env))?;
    let ws = shells::primitive_representatives(lam, r_w).map_err(|e| match e {
        Error::EnumerationTooLarge { predicted, cap } => Error::NonConvergence(format!(
            "primitive window needs about {predicted:.3e} vectors, above the cap {cap:.3e}"
        )),
        other => other,
    })?;
    let w_norms: Vec<f64> = ws.iter().map(|w| w.norm()).collect();
    let w_weight: f64 = w_norms
        .iter()
        .map(|&w| weight / (2.0 * w) * blowup * (-PI * t * m2 * w).exp())
        .sum();

    let inner_env = Envelope::gaussian(1.0, PI * t * lambda1);
    let inner = LatticeShells::for_envelope(l, tol / (2.0 * w_weight.max(1e-300)), 0.0, |_| Some(inner_env))?;

    let per_w: Vec<(f64, f64)> = w_norms
        .par_iter()
        .map(|&w| {
            let scale = PI * t * w;
            let mut acc = Compensated::default();
            acc.add(ln_one_minus_exp(scale * m2));
            for s in &inner.series.shells {
                acc.add(s.multiplicity as f64 * ln_one_minus_exp(scale * (m2 + s.norm_sq)));
            }
            let c = weight / (2.0 * w);
            let tail = c * blowup * (-scale * m2).exp() * inner.tail(&Envelope::gaussian(1.0, scale));
            (c * acc.value(), tail)
        })
        .collect();
    let mut acc = Compensated::default();
    let mut tail = outer_env.lattice_tail(&geom, r_w);
    for (v, e) in per_w {
        acc.add(v);
        tail += e;
    }
    Ok(SumResult {
        value: acc.value(),
        tail_bound: tail,
        terms_used: ws.len() as u64 * (inner.terms() + 1),
        cutoff_radius: r_w,
    })
}

/// `ln E` from the series form: the same prefactor plus
/// `series_factor * t^((d-1)/2) * sum_{p in L} log_Lambda(1 - q^(m^2 + |p|^2))`.
pub fn log_eta_series(l: &Lattice, lam: &Lattice, params: &EtaParams) -> Result<SumResult> {
    Ok(log_eta_series_parts(l, lam, params)?.total())
}

pub fn log_eta_series_parts(l: &Lattice, lam: &Lattice, params: &EtaParams) -> Result<EtaParts> {
    check_pair(l, lam, params)?;
    let prefactor = prefactor_term(l, params)?;
    let lattice_part = series_part(l, lam, params)?;
    Ok(EtaParts { prefactor, lattice_part })
}

fn series_part(l: &Lattice, lam: &Lattice, params: &EtaParams) -> Result<SumResult> {
    let d = l.dim() as f64;
    let (m2, t, tol) = (params.m * params.m, params.t, params.tol);
    let factor = params.series_factor * t.powf(0.5 * (d - 1.0));
    let lambda1 = shells::shortest_norm_sq(lam).sqrt();
    let rate_min = PI * t * m2;

    // |log_Lambda(1 - e^-z)| <= exp(-(z - z0) lambda1) |log_Lambda(1 - e^-z0)|
    let probe = LogLatticeSeries::new(lam, rate_min, 1e-8)?;
    let head = probe.value(rate_min).abs() + probe.tail(rate_min);
    let outer_env = Envelope::gaussian(factor * head, PI * t * lambda1);
    let outer = LatticeShells::for_envelope(l, tol / 2.0, 0.0, |_| Some(outer_env))?;

    let points = outer.terms() as f64 + 1.0;
    let inner = LogLatticeSeries::new(lam, rate_min, tol / (2.0 * factor * points))?;
    let mut acc = Compensated::default();
    let mut inner_tail = inner.tail(rate_min);
    acc.add(inner.value(rate_min));
    for s in &outer.series.shells {
        let rate = PI * t * (m2 + s.norm_sq);
        let mult = s.multiplicity as f64;
        acc.add(mult * inner.value(rate));
        inner_tail += mult * inner.tail(rate);
    }
    Ok(SumResult {
        value: factor * acc.value(),
        tail_bound: outer.tail(&outer_env) + factor * inner_tail,
        terms_used: (outer.terms() + 1) * inner.shells().terms(),
        cutoff_radius: outer.radius(),
    })
}

/// Product against series evaluation of `ln E`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaComparison {
    pub product: f64,
    pub series: f64,
    pub difference: f64,
    /// Sum of the truncation bounds of both lattice parts plus a rounding allowance.
    pub combined_tolerance: f64,
    /// The multiplier that would make the two lattice parts coincide, when
    /// the series part is resolved above its truncation bound.
    pub implied_factor: Option<f64>,
    pub series_factor: f64,
    pub consistent: bool,
}

pub fn compare_product_series(l: &Lattice, lam: &Lattice, params: &EtaParams) -> Result<EtaComparison> {
    let product = log_eta_product_parts(l, lam, params)?;
    let series = log_eta_series_parts(l, lam, params)?;
    let p = product.total().value;
    let s = series.total().value;
    let rounding = 64.0 * f64::EPSILON * (p.abs() + s.abs() + product.prefactor.value.abs());
    let combined = product.lattice_part.tail_bound + series.lattice_part.tail_bound + rounding;
    let difference = p - s;
    Ok(EtaComparison {
        product: p,
        series: s,
        difference,
        combined_tolerance: combined,
        implied_factor: (series.lattice_part.value.abs() > series.lattice_part.tail_bound)
            .then(|| params.series_factor * product.lattice_part.value / series.lattice_part.value),
        series_factor: params.series_factor,
        consistent: difference.abs() <= combined,
    })
}

/// `eta(it) = q^(1/24) prod_{n >= 1} (1 - q^n)` with `q = exp(-2 pi t)`,
/// summed in logarithmic form. The tail bound is relative to the value.
pub fn dedekind_eta(t: f64, tol: f64) -> Result<SumResult> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::DomainError(format!("t must be positive, got {t}")));
    }
    if t < 1e-3 {
        return Err(Error::Underflow(format!("eta(it) underflows for t = {t} < 1e-3")));
    }
    let q = (-2.0 * PI * t).exp();
    let denom = (1.0 - q) * (1.0 - q);
    let mut acc = Compensated::default();
    acc.add(-PI * t / 12.0);
    let mut n = 1u64;
    loop {
        acc.add(ln_one_minus_exp(2.0 * PI * t * n as f64));
        // sum_{k > n} |ln(1 - q^k)| <= q^(n+1) / (1 - q)^2
        let tail = (-2.0 * PI * t * (n + 1) as f64).exp() / denom;
        if tail <= tol.min(1.0) * 0.5 {
            let value = acc.value().exp();
            return Ok(SumResult {
                value,
                tail_bound: value * tail.exp_m1(),
                terms_used: n,
                cutoff_radius: n as f64,
            });
        }
        n += 1;
    }
}

/// One row of the small-`m` experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaLimitRow {
    pub m: f64,
    /// `(2 pi m t)^(-1/2) E_{Z,Z}^{(m)}(it)`.
    pub normalized_value: f64,
    /// `eta(it)`.
    pub eta_reference: f64,
    /// `normalized_value - eta_reference`.
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaLimitReport {
    pub t: f64,
    pub rows: Vec<EtaLimitRow>,
}

impl EtaLimitReport {
    /// CSV with columns `m,normalized_value,eta_reference,deviation`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::InvalidInput(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

/// Tabulates `(2 pi m t)^(-1/2) E_{Z,Z}^{(m)}(it)` against `eta(it)` for each `m`.
/// Nothing is asserted about the trend.
pub fn eta_limit_experiment(t: f64, masses: &[f64], tol: f64, quad_tol: f64) -> Result<EtaLimitReport> {
    let z = Lattice::integer(1);
    let eta = dedekind_eta(t, tol)?.value;
    let mut rows = Vec::with_capacity(masses.len());
    for &m in masses {
        let params = EtaParams::new(m, t)?.with_tol(tol, quad_tol);
        let log_e = log_eta_product(&z, &z, &params)?.value;
        let normalized = (log_e - 0.5 * (2.0 * PI * m * t).ln()).exp();
        rows.push(EtaLimitRow {
            m,
            normalized_value: normalized,
            eta_reference: eta,
            deviation: normalized - eta,
        });
    }
    Ok(EtaLimitReport { t, rows })
}
