//! Sampled cadlag paths on a uniform time grid.
//!
//! Every path is stored as its node values and read right-continuously: the
//! value at node `k` holds on `[k dt, (k+1) dt)`. Loss curves additionally
//! carry the implicit value `0` at `0-`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance of the Lévy-metric bisection.
pub const LEVY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_end: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        let grid = Self { t_end, n_steps };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid with step `dt` covering `[0, t_end]`; `t_end` must be a multiple of `dt`
    /// up to rounding.
    pub fn with_step(t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        let n = (t_end / dt).round();
        if n < 1.0 || ((n * dt - t_end).abs() > 1e-9 * t_end.max(1.0)) {
            return Err(Error::InvalidParameter(format!("t_end = {t_end} is not a positive multiple of dt = {dt}")));
        }
        Self::new(t_end, n as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(format!("t_end must be positive and finite, got {}", self.t_end)));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidParameter("n_steps must be at least 1".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_end
        } else {
            k as f64 * self.dt()
        }
    }

    /// Node whose interval `[k dt, (k+1) dt)` contains `t`, clamped to the grid.
    pub fn node_at(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        let k = (t / self.dt() + 1e-9).floor();
        (k as usize).min(self.n_steps)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(move |k| self.time(k))
    }

    pub(crate) fn ensure_same(&self, other: &TimeGrid) -> Result<()> {
        if self.n_steps != other.n_steps || self.t_end != other.t_end {
            return Err(Error::GridMismatch(format!(
                "({}, {} steps) vs ({}, {} steps)",
                self.t_end, self.n_steps, other.t_end, other.n_steps
            )));
        }
        Ok(())
    }
}

/// Node values of a function on a [`TimeGrid`].
pub trait Sampled {
    fn grid(&self) -> &TimeGrid;
    fn values(&self) -> &[f64];
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl GridPath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.n_nodes() {
            return Err(Error::InvalidPath(format!("expected {} node values, got {}", grid.n_nodes(), values.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPath(format!("non-finite value at node {k}")));
        }
        Ok(Self { grid, values })
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl Sampled for GridPath {
    fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A nondecreasing `[0, 1]`-valued loss function restricted to the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LossCurve {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl LossCurve {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.n_nodes() {
            return Err(Error::InvalidPath(format!("expected {} node values, got {}", grid.n_nodes(), values.len())));
        }
        for (k, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidPath(format!("loss value {v} at node {k} outside [0, 1]")));
            }
            if k > 0 && v < values[k - 1] {
                return Err(Error::InvalidPath(format!("loss decreases at node {k}: {} -> {v}", values[k - 1])));
            }
        }
        Ok(Self { grid, values })
    }

    pub fn zero(grid: TimeGrid) -> Self {
        Self { values: vec![0.0; grid.n_nodes()], grid }
    }

    pub fn constant(grid: TimeGrid, level: f64) -> Result<Self> {
        Self::new(grid, vec![level; grid.n_nodes()])
    }

    /// Cumulative fraction of `total` given per-node event counts.
    pub fn from_counts(grid: TimeGrid, counts: &[u64], total: u64) -> Result<Self> {
        if counts.len() != grid.n_nodes() {
            return Err(Error::InvalidPath(format!("expected {} node counts, got {}", grid.n_nodes(), counts.len())));
        }
        if total == 0 {
            return Err(Error::InvalidParameter("total must be positive".into()));
        }
        let mut acc = 0u64;
        let values = counts
            .iter()
            .map(|&c| {
                acc += c;
                acc as f64 / total as f64
            })
            .collect();
        Self::new(grid, values)
    }

    /// Right-continuous evaluation with `0` before time zero and constant
    /// extension after `t_end`.
    pub fn value_at(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            self.values[self.grid.node_at(t)]
        }
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl Sampled for LossCurve {
    fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Skorokhod reflection at zero: returns `(x, l)` with
/// `l_k = max(0, -min_{j<=k} y_j)` and `x = y + l`.
pub fn skorokhod_reflect(y: &GridPath) -> (GridPath, GridPath) {
    let mut running_min = f64::INFINITY;
    let mut x = Vec::with_capacity(y.values.len());
    let mut l = Vec::with_capacity(y.values.len());
    for &v in &y.values {
        running_min = running_min.min(v);
        let push = (-running_min).max(0.0);
        l.push(push);
        x.push(v + push);
    }
    (GridPath { grid: y.grid, values: x }, GridPath { grid: y.grid, values: l })
}

/// Maximum nodewise absolute difference.
pub fn sup_distance<A, B>(a: &A, b: &B) -> Result<f64>
where
    A: Sampled + ?Sized,
    B: Sampled + ?Sized,
{
    a.grid().ensure_same(b.grid())?;
    Ok(a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// Lévy distance between two loss curves viewed as distribution functions on
/// `[0, inf]`, i.e. the smallest `eps` with
/// `a(t - eps) - eps <= b(t) <= a(t + eps) + eps` for all `t`.
///
/// Both curves are step functions, so the condition only needs checking once
/// per grid interval. The infimum is located by bisection to
/// [`LEVY_TOLERANCE`].
pub fn levy_metric(a: &LossCurve, b: &LossCurve) -> Result<f64> {
    a.grid.ensure_same(&b.grid)?;
    if a.values == b.values {
        return Ok(0.0);
    }
    let dt = a.grid.dt();
    let n = a.grid.n_steps;
    let f = &a.values;
    let g = &b.values;

    let feasible = |eps: f64| -> bool {
        let r = eps / dt;
        for (k, &gk) in g.iter().enumerate().take(n) {
            // sup of f(t - eps) over t in [t_k, t_{k+1})
            let j = (k as f64 + 1.0 - r).ceil() - 1.0;
            let upper = if j < 0.0 { 0.0 } else { f[(j as usize).min(n)] };
            if upper - eps > gk {
                return false;
            }
            // inf of f(t + eps) over the same interval
            let i = ((k as f64 + r).floor() as usize).min(n);
            if gk > f[i] + eps {
                return false;
            }
        }
        f[n] - eps <= g[n] && g[n] <= f[n] + eps
    };

    if feasible(0.0) {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > LEVY_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub node: usize,
    pub time: f64,
    pub size: f64,
}

/// Increments of at least `threshold`, including an initial jump at node 0
/// measured from the `0-` value.
pub fn jump_detect(l: &LossCurve, threshold: f64) -> Vec<Jump> {
    assert!(threshold > 0.0, "jump threshold must be positive");
    let mut prev = 0.0;
    let mut jumps = Vec::new();
    for (k, &v) in l.values.iter().enumerate() {
        let size = v - prev;
        if size >= threshold {
            jumps.push(Jump { node: k, time: l.grid.time(k), size });
        }
        prev = v;
    }
    jumps
}
