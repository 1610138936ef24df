//! Shape optimization of two-dimensional lattices over the modular
//! fundamental domain, and of one-dimensional periodic configurations.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eta::{log_eta_product, EtaParams};
use crate::lattice::Lattice;
use crate::llog::{log_lattice, log_sequence, pair_energy, LogArgument, PairMode, PairPotential};
use crate::sequence::PeriodicSequence;
use crate::special::theta;

/// Default seed of every randomized search; `LATTC_SEED` overrides it in the CLI.
pub const DEFAULT_SEED: u64 = 42;

/// Maximum number of translation/inversion steps when folding.
pub const MAX_FOLD_STEPS: usize = 30;

/// A point `x + iy` of the upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModularPoint {
    pub x: f64,
    pub y: f64,
}

impl ModularPoint {
    /// The triangular lattice `(1/2, sqrt(3)/2)`.
    pub const TRIANGULAR: ModularPoint = ModularPoint {
        x: 0.5,
        y: 0.866_025_403_784_438_6,
    };
    /// The square lattice `(0, 1)`.
    pub const SQUARE: ModularPoint = ModularPoint { x: 0.0, y: 1.0 };

    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(Error::DomainError(format!("modular point needs y > 0, got ({x}, {y})")));
        }
        Ok(ModularPoint { x, y })
    }

    /// Whether `0 <= x <= 1/2` and `x^2 + y^2 >= 1`, up to `slack`.
    pub fn in_fundamental_domain(&self, slack: f64) -> bool {
        self.x >= -slack && self.x <= 0.5 + slack && self.x * self.x + self.y * self.y >= 1.0 - slack
    }

    pub fn distance(&self, other: &ModularPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// The representative in `0 <= x <= 1/2, x^2 + y^2 >= 1` of the same
    /// lattice shape, by alternating `x -> x - round(x)` and
    /// `(x, y) -> (-x, y) / (x^2 + y^2)`, then `x -> |x|`.
    pub fn fold(self) -> ModularPoint {
        let ModularPoint { mut x, mut y } = self;
        let mut reduced = false;
        for _ in 0..MAX_FOLD_STEPS {
            x -= x.round();
            let r2 = x * x + y * y;
            if r2 >= 1.0 {
                reduced = true;
                break;
            }
            x = -x / r2;
            y /= r2;
        }
        if !reduced {
            log::warn!("fold of ({}, {}) did not settle in {MAX_FOLD_STEPS} steps", self.x, self.y);
            x -= x.round();
            let r2 = x * x + y * y;
            if r2 < 1.0 {
                y = (1.0 - x * x).sqrt();
            }
        }
        ModularPoint { x: x.abs(), y }
    }
}

impl fmt::Display for ModularPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Basis rows `sqrt(V/y) (1, 0)` and `sqrt(V/y) (x, y)`.
pub fn lattice_from_modular(p: ModularPoint, v: f64) -> Result<Lattice> {
    if !(p.y > 0.0) {
        return Err(Error::DomainError(format!("modular point needs y > 0, got y = {}", p.y)));
    }
    if !(v > 0.0) {
        return Err(Error::DomainError(format!("covolume must be positive, got {v}")));
    }
    let c = (v / p.y).sqrt();
    Lattice::from_rows(&[vec![c, 0.0], vec![c * p.x, c * p.y]])
}

/// The other lattice of a two-lattice objective.
#[derive(Clone, Debug)]
pub enum Partner {
    Fixed(Lattice),
    /// The same lattice as the one being optimized.
    Tied,
}

impl Partner {
    fn resolve<'a>(&'a self, scanned: &'a Lattice) -> &'a Lattice {
        match self {
            Partner::Fixed(l) => l,
            Partner::Tied => scanned,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A function of a lattice to be extremized. In two-lattice objectives the
/// optimized lattice is `Lambda` and the partner is `L`.
#[derive(Clone, Debug)]
pub enum Objective {
    /// `theta_L(alpha)`, minimized.
    Theta { alpha: f64 },
    /// `-theta_L(alpha)`, maximized.
    NegTheta { alpha: f64 },
    /// `log_L(x)`, maximized.
    LatticeLog { x: f64 },
    /// `E_f[L, Lambda]` for affine `f(r) = intercept + slope * r`, maximized.
    PairLog { partner: Partner, intercept: f64, slope: f64 },
    /// `ln E_{L,Lambda}^{(m)}(it)`, maximized.
    LogEta { m: f64, t: f64, partner: Partner },
    /// `factor` times another objective, with the same sense when `factor > 0`.
    Scaled { inner: Box<Objective>, factor: f64 },
}

impl Objective {
    pub fn sense(&self) -> Sense {
        match self {
            Objective::Theta { .. } => Sense::Minimize,
            Objective::Scaled { inner, factor } => match (inner.sense(), *factor >= 0.0) {
                (s, true) => s,
                (Sense::Minimize, false) => Sense::Maximize,
                (Sense::Maximize, false) => Sense::Minimize,
            },
            _ => Sense::Maximize,
        }
    }

    pub fn scaled(self, factor: f64) -> Objective {
        Objective::Scaled {
            inner: Box::new(self),
            factor,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Objective::Theta { alpha } => format!("theta(alpha={alpha})"),
            Objective::NegTheta { alpha } => format!("neg_theta(alpha={alpha})"),
            Objective::LatticeLog { x } => format!("llog(x={x})"),
            Objective::PairLog { partner, intercept, slope } => {
                format!("pair_llog(f={intercept}+{slope}r, {})", partner_name(partner))
            }
            Objective::LogEta { m, t, partner } => format!("log_eta(m={m}, t={t}, {})", partner_name(partner)),
            Objective::Scaled { inner, factor } => format!("{factor}*{}", inner.name()),
        }
    }

    /// The objective at a lattice, with lattice sums to absolute tolerance `tol`.
    pub fn evaluate(&self, l: &Lattice, tol: f64) -> Result<f64> {
        match self {
            Objective::Theta { alpha } => Ok(theta(l, *alpha, tol)?.value),
            Objective::NegTheta { alpha } => Ok(-theta(l, *alpha, tol)?.value),
            Objective::LatticeLog { x } => Ok(log_lattice(l, LogArgument::new(*x)?, tol)?.value),
            Objective::PairLog { partner, intercept, slope } => {
                let f = PairPotential::affine(*intercept, *slope)?;
                Ok(pair_energy(partner.resolve(l), l, &f, PairMode::Swapped, tol)?.value)
            }
            Objective::LogEta { m, t, partner } => {
                let params = EtaParams::new(*m, *t)?.with_tol(tol, EtaParams::DEFAULT_QUAD_TOL);
                Ok(log_eta_product(partner.resolve(l), l, &params)?.value)
            }
            Objective::Scaled { inner, factor } => Ok(factor * inner.evaluate(l, tol)?),
        }
    }

    /// The objective at the lattice of shape `p` (folded first) and covolume `v`.
    pub fn at(&self, p: ModularPoint, v: f64, tol: f64) -> Result<f64> {
        self.evaluate(&lattice_from_modular(p.fold(), v)?, tol)
    }
}

fn partner_name(p: &Partner) -> String {
    match p {
        Partner::Tied => "tied".into(),
        Partner::Fixed(l) => format!("L={:?}", l.rows()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

/// Grid values and the extremal node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub n: usize,
    pub sense: Sense,
    /// Row-major over `(i, j)`: `x_i = i / (2(n-1))`, `y_j` from `sqrt(1 - x_i^2)` to `y_max`.
    pub cells: Vec<ScanCell>,
    pub best_index: (usize, usize),
    pub best: ScanCell,
}

impl ScanResult {
    /// CSV with columns `x,y,value`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.cells {
            w.serialize(c).map_err(|e| Error::InvalidInput(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    /// The grid node at `(i, j)`.
    pub fn cell(&self, i: usize, j: usize) -> ScanCell {
        self.cells[i * self.n + j]
    }

    /// Whether `p` lies in one of the grid cells touching the best node.
    pub fn best_cell_contains(&self, p: ModularPoint) -> bool {
        let (bi, bj) = self.best_index;
        let n = self.n;
        let i_lo = bi.saturating_sub(1);
        let i_hi = (bi + 1).min(n - 1);
        let x_lo = self.cell(i_lo, 0).x;
        let x_hi = self.cell(i_hi, 0).x;
        if p.x < x_lo - 1e-12 || p.x > x_hi + 1e-12 {
            return false;
        }
        // relative height along the column, t = (y - y_lo(x)) / (y_max - y_lo(x))
        let y_max = self.cell(0, n - 1).y;
        let y_lo = (1.0 - p.x * p.x).max(0.0).sqrt();
        let t = (p.y - y_lo) / (y_max - y_lo);
        let step = 1.0 / (n - 1) as f64;
        let t_best = bj as f64 * step;
        t >= t_best - step - 1e-12 && t <= t_best + step + 1e-12
    }
}

/// Default upper end of the `y` range of [`scan_2d`].
pub const DEFAULT_Y_MAX: f64 = 2.5;

/// Evaluates `objective` on an `n x n` grid over `x in [0, 1/2]`,
/// `y in [sqrt(1 - x^2), y_max]`. Node `(n-1, 0)` is exactly the triangular point.
pub fn scan_2d(objective: &Objective, n: usize, v: f64, y_max: f64, tol: f64) -> Result<ScanResult> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("grid needs at least 2 nodes per side, got {n}")));
    }
    if !(y_max > 1.0) {
        return Err(Error::DomainError(format!("y_max must exceed 1, got {y_max}")));
    }
    let nodes: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let cells: Vec<ScanCell> = nodes
        .par_iter()
        .map(|&(i, j)| {
            let x = 0.5 * i as f64 / (n - 1) as f64;
            let y_lo = if i == n - 1 {
                ModularPoint::TRIANGULAR.y
            } else {
                (1.0 - x * x).sqrt()
            };
            let y = y_lo + (y_max - y_lo) * j as f64 / (n - 1) as f64;
            let value = objective.evaluate(&lattice_from_modular(ModularPoint { x, y }, v)?, tol)?;
            Ok(ScanCell { x, y, value })
        })
        .collect::<Result<_>>()?;
    let sense = objective.sense();
    let mut best = 0;
    for (k, c) in cells.iter().enumerate() {
        let better = match sense {
            Sense::Minimize => c.value < cells[best].value,
            Sense::Maximize => c.value > cells[best].value,
        };
        if better {
            best = k;
        }
    }
    Ok(ScanResult {
        n,
        sense,
        best_index: (best / n, best % n),
        best: cells[best],
        cells,
    })
}

/// Where an optimization ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArgPoint {
    Modular(ModularPoint),
    Sequence(PeriodicSequence),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub argpoint: ArgPoint,
    /// Objective value at `argpoint`, in the objective's own sign.
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub starts: usize,
}

impl OptimizationReport {
    pub fn modular_point(&self) -> Option<ModularPoint> {
        match &self.argpoint {
            ArgPoint::Modular(p) => Some(*p),
            ArgPoint::Sequence(_) => None,
        }
    }

    pub fn sequence(&self) -> Option<&PeriodicSequence> {
        match &self.argpoint {
            ArgPoint::Sequence(s) => Some(s),
            ArgPoint::Modular(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizeOptions {
    /// Termination threshold on the simplex diameter and the poll step.
    pub tol: f64,
    /// Absolute tolerance of the lattice sums behind each evaluation.
    pub sum_tol: f64,
    /// Edge length of the starting simplex.
    pub initial_step: f64,
    pub max_iterations: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            tol: 1e-6,
            sum_tol: 1e-14,
            initial_step: 0.05,
            max_iterations: 5000,
        }
    }
}

struct Counted<'a> {
    objective: &'a Objective,
    v: f64,
    sum_tol: f64,
    sign: f64,
    evaluations: usize,
}

impl Counted<'_> {
    /// The quantity minimized: `-objective` for maximization.
    fn cost(&mut self, x: f64, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Ok(f64::INFINITY);
        }
        self.evaluations += 1;
        Ok(-self.sign * self.objective.at(ModularPoint { x, y }, self.v, self.sum_tol)?)
    }
}

/// Extremizes `objective` over lattice shapes of covolume `v` by Nelder-Mead
/// in the upper half-plane; each trial point is folded into the fundamental
/// domain before evaluation. A compass poll of step `tol` around the best
/// point certifies termination; an improving poll restarts the simplex.
pub fn maximize_2d(objective: &Objective, start: ModularPoint, v: f64, opts: OptimizeOptions) -> Result<OptimizationReport> {
    if !(start.y > 0.0) {
        return Err(Error::DomainError(format!("start must lie in the upper half-plane, got {start}")));
    }
    let sign = match objective.sense() {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let mut f = Counted {
        objective,
        v,
        sum_tol: opts.sum_tol,
        sign,
        evaluations: 0,
    };
    let mut best = (start.x, start.y);
    let mut best_cost = f.cost(best.0, best.1)?;
    let mut iterations = 0;
    let mut step = opts.initial_step;
    let mut converged = false;
    loop {
        match poll(&mut f, best, best_cost, opts.tol)? {
            None => {
                converged = true;
                break;
            }
            Some((p, c)) => {
                best = p;
                best_cost = c;
            }
        }
        if iterations >= opts.max_iterations {
            break;
        }
        let (p, c, its) = nelder_mead(&mut f, best, best_cost, step, opts.tol, opts.max_iterations - iterations)?;
        best = p;
        best_cost = c;
        iterations += its;
        step = (step * 0.1).max(10.0 * opts.tol);
    }
    if !converged {
        return Err(Error::MaxIterations(opts.max_iterations));
    }
    let arg = ModularPoint { x: best.0, y: best.1 }.fold();
    Ok(OptimizationReport {
        argpoint: ArgPoint::Modular(arg),
        value: -sign * best_cost,
        iterations,
        evaluations: f.evaluations,
        converged,
        starts: 1,
    })
}

/// Best strict improvement among the `2d` axis neighbours at distance `h`.
fn poll(f: &mut Counted, p: (f64, f64), cost: f64, h: f64) -> Result<Option<((f64, f64), f64)>> {
    let mut best: Option<((f64, f64), f64)> = None;
    for (dx, dy) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
        let q = (p.0 + dx, p.1 + dy);
        let c = f.cost(q.0, q.1)?;
        if c < best.map_or(cost, |b| b.1) {
            best = Some((q, c));
        }
    }
    Ok(best)
}

fn nelder_mead(
    f: &mut Counted,
    start: (f64, f64),
    start_cost: f64,
    step: f64,
    tol: f64,
    max_iterations: usize,
) -> Result<((f64, f64), f64, usize)> {
    let mut simplex = [
        (start, start_cost),
        ((start.0 + step, start.1), f.cost(start.0 + step, start.1)?),
        ((start.0, start.1 + step), f.cost(start.0, start.1 + step)?),
    ];
    let lerp = |a: (f64, f64), b: (f64, f64), t: f64| (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
    let mut iterations = 0;
    while iterations < max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = (0..3)
            .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
            .map(|(i, j)| (simplex[i].0 .0 - simplex[j].0 .0).hypot(simplex[i].0 .1 - simplex[j].0 .1))
            .fold(0.0, f64::max);
        if diameter < tol {
            break;
        }
        iterations += 1;
        let centroid = lerp(simplex[0].0, simplex[1].0, 0.5);
        let worst = simplex[2];
        let reflected = lerp(centroid, worst.0, -1.0);
        let fr = f.cost(reflected.0, reflected.1)?;
        if fr < simplex[0].1 {
            let expanded = lerp(centroid, worst.0, -2.0);
            let fe = f.cost(expanded.0, expanded.1)?;
            simplex[2] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[1].1 {
            simplex[2] = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < worst.1 {
                let c = lerp(centroid, reflected, 0.5);
                (c, f.cost(c.0, c.1)?)
            } else {
                let c = lerp(centroid, worst.0, 0.5);
                (c, f.cost(c.0, c.1)?)
            };
            if fc < worst.1.min(fr) {
                simplex[2] = (contracted, fc);
            } else {
                let b = simplex[0].0;
                for vertex in &mut simplex[1..] {
                    let p = lerp(b, vertex.0, 0.5);
                    *vertex = (p, f.cost(p.0, p.1)?);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok((simplex[0].0, simplex[0].1, iterations))
}

/// [`maximize_2d`] from several starts, keeping the best result. Starts are
/// drawn uniformly from `0 <= x <= 1/2`, `sqrt(1 - x^2) <= y <= y_max` with a
/// seeded generator.
pub fn maximize_2d_multistart(
    objective: &Objective,
    starts: usize,
    v: f64,
    y_max: f64,
    seed: u64,
    opts: OptimizeOptions,
) -> Result<Vec<OptimizationReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<ModularPoint> = (0..starts)
        .map(|_| {
            let x: f64 = rng.random_range(0.0..=0.5);
            let lo = (1.0 - x * x).sqrt();
            ModularPoint {
                x,
                y: rng.random_range(lo..=y_max),
            }
        })
        .collect();
    points
        .par_iter()
        .map(|&p| maximize_2d(objective, p, v, opts))
        .collect()
}

/// Maximizes the sequence-logarithm over `N`-periodic configurations with
/// `t_1 = 0`, by compass search from `restarts` random sorted starting
/// configurations plus the seed generator's stream, keeping the best.
pub fn optimize_sequence_1d(n: usize, x: LogArgument, restarts: usize, tol: f64, seed: u64) -> Result<OptimizationReport> {
    if n == 0 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::DomainError(format!("tol must be positive, got {tol}")));
    }
    let sum_tol = 1e-15;
    if n == 1 {
        let seq = PeriodicSequence::new(vec![0.0])?;
        let value = log_sequence(&seq, x, sum_tol)?.value;
        return Ok(OptimizationReport {
            argpoint: ArgPoint::Sequence(seq),
            value,
            iterations: 0,
            evaluations: 1,
            converged: true,
            starts: 1,
        });
    }
    let restarts = restarts.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = n as f64;
    let starts: Vec<Vec<f64>> = (0..restarts)
        .map(|_| {
            let mut free: Vec<f64> = (1..n).map(|_| rng.random_range(0.05..nf - 0.05)).collect();
            free.sort_by(f64::total_cmp);
            free
        })
        .collect();
    let runs: Vec<Result<(Vec<f64>, f64, usize, usize, bool)>> = starts
        .into_par_iter()
        .map(|free| compass_1d(free, n, x, tol, sum_tol))
        .collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut iterations = 0;
    let mut evaluations = 0;
    let mut all_converged = true;
    for run in runs {
        let (free, value, its, evals, conv) = run?;
        iterations += its;
        evaluations += evals;
        all_converged &= conv;
        if best.as_ref().is_none_or(|b| value > b.1) {
            best = Some((free, value));
        }
    }
    let (free, value) = best.expect("at least one start");
    let mut points = vec![0.0];
    points.extend(free);
    if !all_converged {
        return Err(Error::MaxIterations(iterations));
    }
    Ok(OptimizationReport {
        argpoint: ArgPoint::Sequence(PeriodicSequence::new(points)?),
        value,
        iterations,
        evaluations,
        converged: true,
        starts: restarts,
    })
}

const COMPASS_MAX_ITERATIONS: usize = 200_000;

fn sequence_value(free: &[f64], n: usize, x: LogArgument, sum_tol: f64) -> Result<f64> {
    let nf = n as f64;
    let mut prev = 0.0;
    for &t in free {
        if t <= prev + 1e-9 || t >= nf - 1e-9 {
            return Ok(f64::NEG_INFINITY);
        }
        prev = t;
    }
    let mut points = Vec::with_capacity(n);
    points.push(0.0);
    points.extend_from_slice(free);
    Ok(log_sequence(&PeriodicSequence::new(points)?, x, sum_tol)?.value)
}

fn compass_1d(
    mut free: Vec<f64>,
    n: usize,
    x: LogArgument,
    tol: f64,
    sum_tol: f64,
) -> Result<(Vec<f64>, f64, usize, usize, bool)> {
    let mut value = sequence_value(&free, n, x, sum_tol)?;
    let mut evaluations = 1;
    let mut step = 0.25;
    let mut iterations = 0;
    while step >= tol {
        if iterations >= COMPASS_MAX_ITERATIONS {
            return Ok((free, value, iterations, evaluations, false));
        }
        iterations += 1;
        let mut improved = false;
        for k in 0..free.len() {
            for dir in [1.0, -1.0] {
                let mut trial = free.clone();
                trial[k] += dir * step;
                let v = sequence_value(&trial, n, x, sum_tol)?;
                evaluations += 1;
                if v > value {
                    free = trial;
                    value = v;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((free, value, iterations, evaluations, true))
}

/// Central differences of an objective at three step sizes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub point: ModularPoint,
    pub h: f64,
    /// `(d/dx, d/dy)` at steps `h`, `h/2`, `h/4`.
    pub estimates: [[f64; 2]; 3],
    /// Best estimate, at step `h/4`.
    pub gradient: [f64; 2],
    pub magnitude: f64,
    /// `|D(h) - D(h/2)| / |D(h/2) - D(h/4)|` per component; about 4 for a
    /// second-order rule, absent when the differences vanish.
    pub richardson_ratio: [Option<f64>; 2],
}

/// Finite-difference gradient of `objective` in `(x, y)` at `p`, with lattice
/// sums to `sum_tol`.
pub fn gradient_check(objective: &Objective, p: ModularPoint, h: f64, v: f64, sum_tol: f64) -> Result<GradientReport> {
    if !(p.y > h) || !(h > 0.0) {
        return Err(Error::DomainError(format!("need 0 < h < y, got h = {h}, y = {}", p.y)));
    }
    let mut estimates = [[0.0; 2]; 3];
    for (k, est) in estimates.iter_mut().enumerate() {
        let hk = h / (1 << k) as f64;
        for (c, slot) in est.iter_mut().enumerate() {
            let (dx, dy) = if c == 0 { (hk, 0.0) } else { (0.0, hk) };
            let plus = objective.at(ModularPoint { x: p.x + dx, y: p.y + dy }, v, sum_tol)?;
            let minus = objective.at(ModularPoint { x: p.x - dx, y: p.y - dy }, v, sum_tol)?;
            *slot = (plus - minus) / (2.0 * hk);
        }
    }
    let gradient = estimates[2];
    let ratio = |c: usize| {
        let a = (estimates[0][c] - estimates[1][c]).abs();
        let b = (estimates[1][c] - estimates[2][c]).abs();
        (b > 0.0 && a > 0.0).then(|| a / b)
    };
    Ok(GradientReport {
        point: p,
        h,
        estimates,
        gradient,
        magnitude: gradient[0].hypot(gradient[1]),
        richardson_ratio: [ratio(0), ratio(1)],
    })
}
