//! N-particle system with elastic feedback and physical cascade resolution.
//!
//! Particle `i` follows `Y^i = X^i_{0-} + B^i - alpha * Lambda^N` and is killed
//! once its Skorokhod regulator `L^i = max(0, -min Y^i)` reaches the threshold
//! `xi^i ~ Exp(kappa)`. Equivalently it is absorbed when `X_{0-} + xi + B -
//! alpha * Lambda^N` reaches zero; [`simulate_absorbing`] runs that form from
//! the same random draws and must agree exactly with [`simulate_elastic`].
//!
//! Each time step diffuses all alive particles, then resolves the cascade at
//! the new node as the least fixed point of
//! `F(x) = #{i : h_i <= alpha x} / N`, where `h_i` is the post-diffusion
//! headroom. Kills inside a step are detected with the Brownian-bridge
//! crossing probability `exp(-2 a b / dt)` unless disabled in [`SimOptions`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::paths::{skorokhod_reflect, GridPath, LossCurve, Sampled};
use crate::sampling::{Lane, ModelParams, RngStream};

/// Bridge kill probabilities below `exp(-BRIDGE_CUTOFF)` are treated as zero.
const BRIDGE_CUTOFF: f64 = 40.0;

const PAR_MIN_LEN: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct Cascade {
    /// Size `D` of the loss jump, a multiple of `1/N`.
    pub jump: f64,
    /// Indices into the input headroom slice, sorted by headroom.
    pub killed: Vec<usize>,
}

/// Least fixed point of `F(x) = #{i : h_i <= alpha x} / n_total`.
///
/// Sorting once makes the fixed-point iteration from zero a single walk:
/// the `c`-th smallest headroom is absorbed iff it lies within
/// `alpha (c - 1) / n_total`.
pub fn resolve_cascade(headrooms: &[f64], alpha: f64, n_total: usize) -> Cascade {
    let mut order: Vec<usize> = (0..headrooms.len()).collect();
    order.sort_by(|&i, &j| headrooms[i].total_cmp(&headrooms[j]).then(i.cmp(&j)));
    let mut c = 0;
    while c < order.len() && headrooms[order[c]] <= alpha * (c as f64 / n_total as f64) {
        c += 1;
    }
    order.truncate(c);
    Cascade { jump: c as f64 / n_total as f64, killed: order }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElasticTracking {
    /// Kill when `Y + xi <= alpha * Lambda`.
    #[default]
    Headroom,
    /// Track the running minimum of `Y` and kill when `L >= xi`.
    RunningMinimum,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub enum PathStorage {
    #[default]
    None,
    /// Every particle's path at every node (memory `N * (n_steps + 1)`).
    Full,
    /// Positions of the alive particles at the listed nodes only.
    Nodes(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub bridge_correction: bool,
    pub tracking: ElasticTracking,
    pub storage: PathStorage,
    /// Explicit stream id per particle; defaults to `base.stream_id + i`.
    pub stream_ids: Option<Vec<u64>>,
    /// Re-check every cascade for least-fixed-point minimality by exhaustive
    /// evaluation of `F`. Quadratic in the cascade size; for tests.
    pub audit_cascades: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            bridge_correction: true,
            tracking: ElasticTracking::Headroom,
            storage: PathStorage::None,
            stream_ids: None,
            audit_cascades: false,
        }
    }
}

/// Initial condition of the absorbing system.
#[derive(Debug, Clone, PartialEq)]
pub enum AbsorbingStart {
    /// `Y_{0-} = X_{0-} + xi` with the same draws the elastic system uses.
    ElasticShift,
    /// `Y_{0-} = X_{0-}`: the plain absorbing model, the `kappa = inf` limit.
    NoShift,
    /// Explicit `Y_{0-}` per particle.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Elastic,
    Absorbing,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CascadeSummary {
    /// Nodes where the feedback killed more particles than diffusion alone.
    pub cascade_events: usize,
    pub largest_jump: f64,
    pub largest_jump_node: usize,
    /// Cascades whose result failed the exhaustive minimality audit.
    pub audit_failures: usize,
    pub audited: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub node: usize,
    /// `X_t` of the particles alive after the cascade at `node` (reflected
    /// for the elastic model, the absorbed coordinate for the absorbing one).
    pub positions: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub model: Model,
    pub n_particles: usize,
    pub loss_curve: LossCurve,
    /// Cumulative number of killed particles at each node.
    pub dead_counts: Vec<u64>,
    pub kill_nodes: Vec<Option<u32>>,
    /// `Y` (elastic) or the absorbed coordinate (absorbing), frozen after death.
    pub paths: Option<Vec<GridPath>>,
    pub snapshots: Vec<Snapshot>,
    pub summary: CascadeSummary,
}

impl SimOutput {
    pub fn alive_at(&self, node: usize) -> u64 {
        self.n_particles as u64 - self.dead_counts[node]
    }

    /// Positions of the particles alive at `node`.
    pub fn positions_at(&self, node: usize) -> Result<Vec<f64>> {
        if let Some(s) = self.snapshots.iter().find(|s| s.node == node) {
            return Ok(s.positions.clone());
        }
        let paths = self.paths.as_ref().ok_or(Error::PathsNotStored(node))?;
        if node >= self.loss_curve.grid().n_nodes() {
            return Err(Error::PathsNotStored(node));
        }
        let alive = |i: usize| self.kill_nodes[i].map_or(true, |k| k as usize > node);
        Ok(paths
            .iter()
            .enumerate()
            .filter(|&(i, _)| alive(i))
            .map(|(_, p)| match self.model {
                Model::Elastic => skorokhod_reflect(p).0.values()[node],
                Model::Absorbing => p.values()[node],
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    /// Particle counts per bin `[j w, (j+1) w)`.
    pub counts: Vec<u64>,
    pub n_total: usize,
}

impl Histogram {
    /// Mass per bin, each particle weighing `1/N`.
    pub fn masses(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n_total as f64).collect()
    }

    pub fn densities(&self) -> Vec<f64> {
        self.masses().into_iter().map(|m| m / self.bin_width).collect()
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_count() as f64 / self.n_total as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|j| (j as f64 + 0.5) * self.bin_width).collect()
    }
}

/// Histogram of `X_t` over the particles alive at `node`: a Monte Carlo
/// estimate of the sub-probability measure `nu_t`.
pub fn empirical_density(output: &SimOutput, node: usize, bin_width: f64) -> Result<Histogram> {
    if !(bin_width > 0.0) {
        return Err(invalid(format!("bin width must be positive, got {bin_width}")));
    }
    let xs = output.positions_at(node)?;
    let max = xs.iter().cloned().fold(0.0, f64::max);
    let n_bins = if xs.is_empty() { 0 } else { (max / bin_width).floor() as usize + 1 };
    let mut counts = vec![0u64; n_bins];
    for x in xs {
        let j = ((x.max(0.0) / bin_width).floor() as usize).min(n_bins - 1);
        counts[j] += 1;
    }
    Ok(Histogram { bin_width, counts, n_total: output.n_particles })
}

pub fn simulate_elastic(params: &ModelParams, stream_base: &RngStream) -> Result<SimOutput> {
    simulate_elastic_with(params, stream_base, &SimOptions::default())
}

pub fn simulate_elastic_with(params: &ModelParams, stream_base: &RngStream, opts: &SimOptions) -> Result<SimOutput> {
    params.validate()?;
    let streams = particle_streams(params, stream_base, opts)?;
    let (y, xi): (Vec<f64>, Vec<f64>) =
        streams.par_iter().with_min_len(PAR_MIN_LEN).map(|s| (params.law.draw(s), params.threshold(s))).unzip();
    Engine::new(params, opts, Model::Elastic, streams, y, xi).run()
}

pub fn simulate_absorbing(params: &ModelParams, stream_base: &RngStream) -> Result<SimOutput> {
    simulate_absorbing_with(params, stream_base, &AbsorbingStart::ElasticShift, &SimOptions::default())
}

pub fn simulate_absorbing_with(
    params: &ModelParams,
    stream_base: &RngStream,
    start: &AbsorbingStart,
    opts: &SimOptions,
) -> Result<SimOutput> {
    params.validate()?;
    let streams = particle_streams(params, stream_base, opts)?;
    let y: Vec<f64> = match start {
        AbsorbingStart::ElasticShift => {
            if params.kappa == 0.0 {
                return Err(invalid("absorbing form needs kappa > 0 or an explicit shift"));
            }
            streams.par_iter().with_min_len(PAR_MIN_LEN).map(|s| params.law.draw(s) + params.threshold(s)).collect()
        }
        AbsorbingStart::NoShift => streams.par_iter().with_min_len(PAR_MIN_LEN).map(|s| params.law.draw(s)).collect(),
        AbsorbingStart::Explicit(v) => {
            if v.len() != params.n_particles || v.iter().any(|x| !x.is_finite()) {
                return Err(invalid("explicit start needs one finite value per particle"));
            }
            v.clone()
        }
    };
    let xi = vec![0.0; y.len()];
    Engine::new(params, opts, Model::Absorbing, streams, y, xi).run()
}

fn particle_streams(params: &ModelParams, base: &RngStream, opts: &SimOptions) -> Result<Vec<RngStream>> {
    match &opts.stream_ids {
        Some(ids) if ids.len() != params.n_particles => {
            Err(invalid(format!("expected {} stream ids, got {}", params.n_particles, ids.len())))
        }
        Some(ids) => Ok(ids.iter().map(|&id| RngStream::new(base.seed, id)).collect()),
        None => Ok((0..params.n_particles as u64).map(|i| base.particle(i)).collect()),
    }
}

/// Alive particles in structure-of-arrays form, kept in original index order.
struct Alive {
    idx: Vec<u32>,
    /// `X_{0-} + B_t` (elastic) or `Y_{0-} + B_t` (absorbing); no feedback term.
    y: Vec<f64>,
    /// Elastic threshold, `0` in the absorbing form.
    xi: Vec<f64>,
    /// Running minimum of `y - alpha Lambda` (elastic only).
    runmin: Vec<f64>,
    /// Killed inside the current step by the bridge check.
    bridged: Vec<bool>,
}

struct Engine<'a> {
    params: &'a ModelParams,
    opts: &'a SimOptions,
    model: Model,
    streams: Vec<RngStream>,
    alive: Alive,
    dead: u64,
    n: usize,
}

impl<'a> Engine<'a> {
    fn new(
        params: &'a ModelParams,
        opts: &'a SimOptions,
        model: Model,
        streams: Vec<RngStream>,
        y: Vec<f64>,
        xi: Vec<f64>,
    ) -> Self {
        let n = y.len();
        let alive = Alive { idx: (0..n as u32).collect(), runmin: y.clone(), y, xi, bridged: vec![false; n] };
        Self { params, opts, model, streams, alive, dead: 0, n }
    }

    #[inline]
    fn loss_level(&self, extra: usize) -> f64 {
        self.params.alpha * ((self.dead + extra as u64) as f64 / self.n as f64)
    }

    fn run(mut self) -> Result<SimOutput> {
        let grid = self.params.grid;
        let n_nodes = grid.n_nodes();
        let sqrt_dt = grid.dt().sqrt();
        let two_over_dt = 2.0 / grid.dt();

        let mut kill_nodes: Vec<Option<u32>> = vec![None; self.n];
        let mut dead_counts = Vec::with_capacity(n_nodes);
        let mut summary = CascadeSummary::default();
        let mut snapshots = Vec::new();
        let snapshot_nodes: &[usize] = match &self.opts.storage {
            PathStorage::Nodes(nodes) => nodes,
            _ => &[],
        };
        let mut paths: Option<Vec<Vec<f64>>> = match self.opts.storage {
            PathStorage::Full => Some(vec![Vec::with_capacity(n_nodes); self.n]),
            _ => None,
        };

        for k in 0..n_nodes {
            if k > 0 {
                let level = self.loss_level(0);
                self.diffuse(k as u32 - 1, level, sqrt_dt, two_over_dt);
            }
            let killed = self.cascade(&mut summary, k);
            let c = killed.len();

            for &j in &killed {
                kill_nodes[self.alive.idx[j] as usize] = Some(k as u32);
            }
            if let Some(paths) = paths.as_mut() {
                // record the value at death before the particle leaves the arrays
                let level = self.loss_level(c);
                for &j in &killed {
                    paths[self.alive.idx[j] as usize].push(self.alive.y[j] - level);
                }
            }
            self.remove(&killed);
            self.dead += c as u64;
            dead_counts.push(self.dead);

            let level = self.loss_level(0);
            if self.model == Model::Elastic {
                self.alive
                    .runmin
                    .par_iter_mut()
                    .with_min_len(PAR_MIN_LEN)
                    .zip(self.alive.y.par_iter())
                    .for_each(|(m, &y)| *m = m.min(y - level));
            }
            if let Some(paths) = paths.as_mut() {
                for (&i, &y) in self.alive.idx.iter().zip(&self.alive.y) {
                    paths[i as usize].push(y - level);
                }
                // frozen values for particles that died earlier
                for p in paths.iter_mut() {
                    if p.len() < k + 1 {
                        let last = *p.last().expect("dead particle has a recorded value");
                        p.push(last);
                    }
                }
            }
            if snapshot_nodes.contains(&k) {
                snapshots.push(Snapshot { node: k, positions: self.positions(level) });
            }
        }

        let loss_curve = LossCurve::from_counts(
            grid,
            &dead_counts
                .iter()
                .scan(0u64, |prev, &d| {
                    let inc = d - *prev;
                    *prev = d;
                    Some(inc)
                })
                .collect::<Vec<_>>(),
            self.n as u64,
        )?;
        let paths =
            paths.map(|ps| ps.into_iter().map(|p| GridPath::new(grid, p)).collect::<Result<Vec<_>>>()).transpose()?;
        Ok(SimOutput {
            model: self.model,
            n_particles: self.n,
            loss_curve,
            dead_counts,
            kill_nodes,
            paths,
            snapshots,
            summary,
        })
    }

    /// Advance every alive particle from node `step` to `step + 1` and flag
    /// bridge crossings. `level` is `alpha * Lambda` at the left node.
    fn diffuse(&mut self, step: u32, level: f64, sqrt_dt: f64, two_over_dt: f64) {
        let bridge = self.opts.bridge_correction;
        let streams = &self.streams;
        let a = &mut self.alive;
        a.y.par_iter_mut()
            .with_min_len(PAR_MIN_LEN)
            .zip(a.bridged.par_iter_mut())
            .zip(a.xi.par_iter())
            .zip(a.idx.par_iter())
            .for_each(|(((y, flag), &xi), &i)| {
                let s = &streams[i as usize];
                let before = *y + xi - level;
                *y += sqrt_dt * s.normal(Lane::Brownian, step);
                *flag = false;
                if bridge && xi.is_finite() {
                    let after = *y + xi - level;
                    if before > 0.0 && after > 0.0 {
                        let exponent = two_over_dt * before * after;
                        if exponent < BRIDGE_CUTOFF {
                            *flag = s.uniform(Lane::Bridge, step) < (-exponent).exp();
                        }
                    }
                }
            });
    }

    #[inline]
    fn sort_key(&self, j: usize) -> f64 {
        if self.alive.bridged[j] {
            f64::NEG_INFINITY
        } else {
            self.alive.y[j] + self.alive.xi[j]
        }
    }

    /// Whether alive particle `j` is dead once `alpha * Lambda` reaches `level`.
    #[inline]
    fn is_killed(&self, j: usize, level: f64) -> bool {
        let a = &self.alive;
        if a.bridged[j] {
            return true;
        }
        match (self.model, self.opts.tracking) {
            (Model::Elastic, ElasticTracking::RunningMinimum) => {
                let low = a.runmin[j].min(a.y[j] - level);
                (-low).max(0.0) >= a.xi[j]
            }
            _ => a.y[j] + a.xi[j] <= level,
        }
    }

    /// Resolve the cascade at `node`; returns alive-array positions of the
    /// killed particles, in ascending order.
    fn cascade(&self, summary: &mut CascadeSummary, node: usize) -> Vec<usize> {
        let m = self.alive.y.len();
        let base = self.loss_level(0);
        let direct: usize =
            (0..m).into_par_iter().with_min_len(PAR_MIN_LEN).filter(|&j| self.is_killed(j, base)).count();
        if direct == 0 {
            return Vec::new();
        }

        // Sort only the particles within reach of a jump of `window / N`,
        // widening the window until the walk stops inside it.
        let mut window = (2 * direct + 16).min(m);
        let (killed, c) = loop {
            let reach = self.loss_level(window);
            let margin = 1e-12 * reach.abs().max(1.0);
            let mut cand: Vec<(f64, usize)> = (0..m)
                .into_par_iter()
                .with_min_len(PAR_MIN_LEN)
                .filter_map(|j| {
                    let key = self.sort_key(j);
                    (key <= reach + margin).then_some((key, j))
                })
                .collect();
            cand.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut c = 0;
            while c < cand.len() && self.is_killed(cand[c].1, self.loss_level(c)) {
                c += 1;
            }
            if c < window || window == m {
                let mut killed: Vec<usize> = cand[..c].iter().map(|&(_, j)| j).collect();
                killed.sort_unstable();
                break (killed, c);
            }
            window = (2 * window).max(c + 1).min(m);
        };

        if c > direct {
            summary.cascade_events += 1;
        }
        let jump = c as f64 / self.n as f64;
        if jump > summary.largest_jump {
            summary.largest_jump = jump;
            summary.largest_jump_node = node;
        }
        if self.opts.audit_cascades {
            summary.audited += 1;
            let f = |x: usize| (0..m).filter(|&j| self.is_killed(j, self.loss_level(x))).count();
            let minimal = f(c) == c && (0..c).all(|x| f(x) > x);
            if !minimal {
                summary.audit_failures += 1;
            }
        }
        killed
    }

    /// Drop the given (ascending) positions while keeping index order.
    fn remove(&mut self, killed: &[usize]) {
        if killed.is_empty() {
            return;
        }
        let a = &mut self.alive;
        let mut next_killed = killed.iter().peekable();
        let mut w = 0;
        for r in 0..a.y.len() {
            if next_killed.peek() == Some(&&r) {
                next_killed.next();
                continue;
            }
            a.idx[w] = a.idx[r];
            a.y[w] = a.y[r];
            a.xi[w] = a.xi[r];
            a.runmin[w] = a.runmin[r];
            w += 1;
        }
        a.idx.truncate(w);
        a.y.truncate(w);
        a.xi.truncate(w);
        a.runmin.truncate(w);
        a.bridged.truncate(w);
        a.bridged.iter_mut().for_each(|b| *b = false);
    }

    fn positions(&self, level: f64) -> Vec<f64> {
        let a = &self.alive;
        match self.model {
            Model::Elastic => a.y.iter().zip(&a.runmin).map(|(&y, &m)| (y - level) + (-m).max(0.0)).collect(),
            Model::Absorbing => a.y.iter().map(|&y| y - level).collect(),
        }
    }
}
