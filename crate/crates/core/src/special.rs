//! Lattice theta function, Epstein zeta function and generic radial energies.

use std::f64::consts::PI;

use statrs::function::gamma::{gamma, gamma_ur};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::quadrature;
use crate::shells::shortest_norm_sq;
use crate::sums::{Envelope, LatticeShells, SumResult};

/// Below this `alpha` the theta function is evaluated on the dual lattice
/// through Poisson summation.
pub const POISSON_SWITCH: f64 = 0.05;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!("{name} must be positive and finite, got {v}")))
    }
}

/// `theta_L(alpha) = sum_{p in L} exp(-pi alpha |p|^2)`.
pub fn theta(l: &Lattice, alpha: f64, tol: f64) -> Result<SumResult> {
    theta_with_switch(l, alpha, tol, POISSON_SWITCH)
}

pub fn theta_with_switch(l: &Lattice, alpha: f64, tol: f64, switch: f64) -> Result<SumResult> {
    check_positive("alpha", alpha)?;
    check_positive("tol", tol)?;
    if alpha < switch {
        // theta_L(alpha) = V^-1 alpha^(-d/2) theta_{L*}(1/alpha)
        let factor = 1.0 / (l.covolume() * alpha.powf(l.dim() as f64 / 2.0));
        return Ok(theta_direct(&l.dual(), 1.0 / alpha, tol / factor)?.scaled(factor));
    }
    theta_direct(l, alpha, tol)
}

fn theta_direct(l: &Lattice, alpha: f64, tol: f64) -> Result<SumResult> {
    let a = PI * alpha;
    let env = Envelope::gaussian(1.0, a);
    // start past the peak of r^(d-1) exp(-a r^2)
    let peak = (l.dim() as f64 / a).sqrt();
    let shells = LatticeShells::for_envelope(l, tol, peak, |_| Some(env))?;
    Ok(SumResult {
        value: 1.0 + shells.sum(|n| (-a * n).exp()),
        tail_bound: shells.tail(&env),
        terms_used: shells.terms() + 1,
        cutoff_radius: shells.radius(),
    })
}

/// Theta sums for many `alpha >= alpha_min` over one enumeration.
#[derive(Clone, Debug)]
pub struct ThetaSeries {
    shells: LatticeShells,
    alpha_min: f64,
}

impl ThetaSeries {
    pub fn new(l: &Lattice, alpha_min: f64, tol: f64) -> Result<Self> {
        check_positive("alpha_min", alpha_min)?;
        check_positive("tol", tol)?;
        let a = PI * alpha_min;
        let peak = (l.dim() as f64 / a).sqrt();
        let shells = LatticeShells::for_envelope(l, tol, peak, |_| Some(Envelope::gaussian(1.0, a)))?;
        Ok(ThetaSeries { shells, alpha_min })
    }

    pub fn alpha_min(&self) -> f64 {
        self.alpha_min
    }

    /// `theta_L(alpha) - 1`, summed without forming the leading 1.
    pub fn minus_one(&self, alpha: f64) -> f64 {
        debug_assert!(alpha >= self.alpha_min * (1.0 - 1e-12));
        let a = PI * alpha;
        self.shells.sum(|n| (-a * n).exp())
    }

    pub fn tail_bound(&self, alpha: f64) -> f64 {
        self.shells.tail(&Envelope::gaussian(1.0, PI * alpha.max(self.alpha_min)))
    }

    pub fn shells(&self) -> &LatticeShells {
        &self.shells
    }
}

/// `zeta_L(s) = sum_{p != 0} |p|^-s` for real `s > d`.
///
/// Evaluated through the theta splitting of the Mellin integral at `t = 1`,
///
/// ```text
/// pi^-(s/2) Gamma(s/2) zeta_L(s) = sum_{p != 0} G(s/2, pi|p|^2)
///     + V^-1 sum_{y in L*, y != 0} G((d-s)/2, pi|y|^2) + 2 / (V (s-d)) - 2/s,
/// ```
///
/// with `G(a, x) = int_1^inf u^(a-1) e^(-x u) du`. Both sums converge like
/// Gaussians; the lattice is first rescaled so that its shortest vector and
/// that of its dual have equal length.
pub fn epstein_zeta(l: &Lattice, s: f64, tol: f64) -> Result<SumResult> {
    let d = l.dim() as f64;
    check_zeta_args(d, s, tol)?;
    let lam = shortest_norm_sq(l).sqrt();
    let lam_dual = shortest_norm_sq(&l.dual()).sqrt();
    let c = (lam_dual / lam).sqrt();
    let lp = l.scaled(c);
    let dual = lp.dual();
    let vol = lp.covolume();
    let outer = PI.powf(s / 2.0) / gamma(s / 2.0) * c.powf(s);

    let a1 = s / 2.0;
    let a2 = (d - s) / 2.0;
    let excess = (a1 - 1.0).max(0.0);
    let env1 = move |r: f64| -> Option<Envelope> {
        if excess == 0.0 {
            Some(Envelope { scale: 1.0 / PI, power: 2.0, linear: 0.0, quadratic: PI })
        } else if PI * r * r >= 2.0 * excess {
            Some(Envelope { scale: 2.0 / PI, power: 2.0, linear: 0.0, quadratic: PI })
        } else {
            None
        }
    };
    let env2 = Envelope { scale: 1.0 / PI, power: 2.0, linear: 0.0, quadratic: PI };
    let primal = LatticeShells::for_envelope(&lp, tol / (2.0 * outer), 1.0, env1)?;
    let recip = LatticeShells::for_envelope(&dual, tol * vol / (2.0 * outer), 1.0, |_| Some(env2))?;

    let s1 = primal.sum(|n| upper_gamma_scaled(a1, PI * n));
    let s2 = recip.sum(|n| upper_gamma_scaled(a2, PI * n));
    let value = outer * (s1 + s2 / vol + 2.0 / (vol * (s - d)) - 2.0 / s);
    let tail1 = primal.tail(&env1(primal.radius()).expect("radius was selected by this envelope"));
    let tail2 = recip.tail(&env2);
    Ok(SumResult {
        value,
        tail_bound: outer * (tail1 + tail2 / vol),
        terms_used: primal.terms() + recip.terms(),
        cutoff_radius: primal.radius() / c,
    })
}

/// Plain shell sum of `|p|^-s` with the power-law tail bound. Converges
/// slowly; kept as an independent route for cross-checks.
pub fn epstein_zeta_direct(l: &Lattice, s: f64, tol: f64) -> Result<SumResult> {
    let d = l.dim() as f64;
    check_zeta_args(d, s, tol)?;
    let env = Envelope::power_law(1.0, s);
    let shells = LatticeShells::for_envelope(l, tol, 1.0, |_| Some(env))?;
    Ok(SumResult {
        value: shells.sum(|n| n.powf(-s / 2.0)),
        tail_bound: shells.tail(&env),
        terms_used: shells.terms(),
        cutoff_radius: shells.radius(),
    })
}

fn check_zeta_args(d: f64, s: f64, tol: f64) -> Result<()> {
    check_positive("tol", tol)?;
    if !(s > d) || !s.is_finite() {
        return Err(Error::DomainError(format!(
            "Epstein zeta needs real s > d = {d}, got s = {s}"
        )));
    }
    Ok(())
}

/// `G(a, x) = Gamma(a, x) x^-a = int_1^inf u^(a-1) exp(-x u) du` for real `a`, `x > 0`.
pub fn upper_gamma_scaled(a: f64, x: f64) -> f64 {
    if a > 0.0 && x < a + 1.0 {
        return gamma_ur(a, x) * gamma(a) * x.powf(-a);
    }
    if x >= 0.5 {
        return (-x).exp() * legendre_fraction(a, x);
    }
    let upper = 60.0 / x;
    let integrand = |v: f64| (1.0 + v).powf(a - 1.0) * (-x * v).exp();
    let r = quadrature::adaptive(integrand, 0.0, upper, 0.0, 1e-14)
        .expect("integrand is smooth and bounded on the truncated range");
    (-x).exp() * r.value
}

/// Continued fraction `1/(x+1-a- 1(1-a)/(x+3-a- 2(2-a)/(x+5-a- ...)))` by
/// the modified Lentz method.
fn legendre_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = if b.abs() < TINY { 1.0 / TINY } else { 1.0 / b };
    let mut h = d;
    for i in 1..2000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// How fast a user-supplied summand decays in `r = |p|`; only used to pick
/// the cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decay {
    /// `|f(r^2)| <= C exp(-rate r^2)`.
    Gaussian(f64),
    /// `|f(r^2)| <= C exp(-rate r)`.
    Exponential(f64),
    /// `|f(r^2)| <= C r^-k`, needs `k > d`.
    Power(f64),
}

impl Decay {
    fn envelope(&self, scale: f64) -> Envelope {
        match *self {
            Decay::Gaussian(a) => Envelope::gaussian(scale, a),
            Decay::Exponential(b) => Envelope::exponential(scale, 0.0, b),
            Decay::Power(k) => Envelope::power_law(scale, k),
        }
    }
}

/// `E_f[L] = sum_{p != 0} f(|p|^2)`.
///
/// The envelope constant is calibrated from `f` itself on `[R, 2R]` at each
/// trial cutoff, so the reported tail is an estimate that is only as good as
/// the decay hint.
pub fn lattice_energy<F>(l: &Lattice, f: F, decay: Decay, tol: f64) -> Result<SumResult>
where
    F: Fn(f64) -> f64,
{
    check_positive("tol", tol)?;
    let calibrated = |r: f64| {
        let unit = decay.envelope(1.0);
        let scale = [1.0, 1.25, 1.5, 2.0]
            .iter()
            .map(|k| {
                let x = k * r;
                f(x * x).abs() / unit.at(x)
            })
            .fold(0.0, f64::max);
        if scale.is_finite() {
            Some(decay.envelope(scale))
        } else {
            None
        }
    };
    let start = l.covolume().powf(1.0 / l.dim() as f64);
    let shells = LatticeShells::for_envelope(l, tol, start, calibrated)?;
    let value = shells.sum(&f);
    if !value.is_finite() {
        return Err(Error::NonConvergence("energy summand is not finite".into()));
    }
    let env = calibrated(shells.radius()).unwrap();
    Ok(SumResult {
        value,
        tail_bound: shells.tail(&env),
        terms_used: shells.terms(),
        cutoff_radius: shells.radius(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn upper_gamma_branches_agree_with_quadrature() {
        for &(a, x) in &[(1.0, 2.0), (2.5, 0.7), (-1.0, 3.0), (-0.5, 0.3), (-1.0, 0.2), (0.0, 1.5), (3.0, 10.0)] {
            let q = quadrature::adaptive(|u: f64| u.powf(a - 1.0) * (-x * u).exp(), 1.0, 1.0 + 80.0 / x, 0.0, 1e-14)
                .unwrap()
                .value;
            assert_relative_eq!(upper_gamma_scaled(a, x), q, max_relative = 1e-11);
        }
        // G(1, x) = e^-x / x
        assert_relative_eq!(upper_gamma_scaled(1.0, 4.0), (-4f64).exp() / 4.0, max_relative = 1e-14);
    }

    #[test]
    fn theta_of_z_direct_sum() {
        let direct: f64 = 1.0 + 2.0 * (1..20).map(|k| (-PI * (k * k) as f64).exp()).sum::<f64>();
        let r = theta(&Lattice::integer(1), 1.0, 1e-12).unwrap();
        assert_relative_eq!(r.value, direct, max_relative = 1e-14);
        assert!(r.tail_bound <= 1e-12);
        assert!((r.value - 1.0864348112).abs() < 1e-9);
    }

    #[test]
    fn theta_large_alpha() {
        let r = theta(&Lattice::integer(2), 50.0, 1e-30).unwrap();
        assert!(r.value - 1.0 < 1e-20);
    }

    #[test]
    fn theta_rejects_bad_args() {
        assert!(theta(&Lattice::integer(2), -1.0, 1e-10).is_err());
        assert!(theta(&Lattice::integer(2), 1.0, 0.0).is_err());
    }

    #[test]
    fn zeta_domain() {
        assert!(matches!(
            epstein_zeta(&Lattice::integer(2), 1.5, 1e-8),
            Err(Error::DomainError(_))
        ));
        assert!(epstein_zeta(&Lattice::integer(2), 2.0, 1e-8).is_err());
    }
}
