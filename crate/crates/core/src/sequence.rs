//! One-dimensional `N`-periodic point configurations `{t_n}` with
//! `t_{n+N} = t_n + N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSequence {
    points: Vec<f64>,
}

impl PeriodicSequence {
    /// `points` are `t_1 <= ... <= t_N` with `t_N - t_1 <= N`, where `N` is
    /// the number of points. Coincidences are allowed here and rejected by
    /// the evaluators.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::InvalidInput("a periodic sequence needs at least one point".into()));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("sequence points must be finite".into()));
        }
        if points.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("sequence points must be sorted".into()));
        }
        if points[n - 1] - points[0] > n as f64 {
            return Err(Error::InvalidInput(format!(
                "t_N - t_1 = {} exceeds the period {n}",
                points[n - 1] - points[0]
            )));
        }
        Ok(PeriodicSequence { points })
    }

    /// `t_n = n + shift` written with period `n_period`.
    pub fn equidistant(n_period: usize, shift: f64) -> Self {
        PeriodicSequence {
            points: (0..n_period).map(|k| k as f64 + shift).collect(),
        }
    }

    pub fn period(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `t_j` for any integer `j`, with `t_0 .. t_{N-1}` the stored points.
    pub fn at(&self, j: i64) -> f64 {
        let n = self.points.len() as i64;
        let (q, r) = (j.div_euclid(n), j.rem_euclid(n));
        self.points[r as usize] + (q * n) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_extension() {
        let s = PeriodicSequence::new(vec![0.0, 0.8]).unwrap();
        assert_eq!(s.period(), 2);
        assert_eq!(s.at(2), 2.0);
        assert_eq!(s.at(3), 2.8);
        assert_eq!(s.at(-1), -1.2);
        assert_eq!(s.at(-2), -2.0);
    }

    #[test]
    fn validation() {
        assert!(PeriodicSequence::new(vec![]).is_err());
        assert!(PeriodicSequence::new(vec![0.5, 0.1]).is_err());
        assert!(PeriodicSequence::new(vec![0.0, 2.5]).is_err());
        assert!(PeriodicSequence::new(vec![0.0, 0.0]).is_ok());
    }
}
