//! Config-driven experiment runner.
//!
//! An [`ExperimentConfig`] names one experiment kind plus the model
//! parameters and a seed. [`run_experiment`] executes the solvers, writes CSV
//! tables and a `run.json` manifest listing every file with its SHA-256
//! digest. Outputs are a pure function of the config: reruns reproduce the
//! same bytes under any thread count.
//!
//! CSV schemas:
//!
//! | file | header |
//! |------|--------|
//! | `loss_<tag>.csv` | `t,lambda` |
//! | `distances.csv` | `param_a,param_b,levy,sup` |
//! | `jumps.csv` | `t,size,param` |
//! | `density_<tag>.csv` | `t,x,v` |

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mkv_solver::{blowup_guaranteed, gamma_zero_analytic, picard_solve, PicardConfig};
use crate::particle::{
    empirical_density, simulate_absorbing_with, simulate_elastic_with, AbsorbingStart, PathStorage, SimOptions,
    SimOutput,
};
use crate::paths::{jump_detect, levy_metric, sup_distance, LossCurve, Sampled};
use crate::sampling::{InitialLaw, ModelParams, RngStream};
use crate::stefan_pde::{initial_density, pde_solve_with, PdeGrid, PdeOptions};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "run.json";
pub const PICARD_STREAM_OFFSET: u64 = 1 << 40;

fn default_true() -> bool {
    true
}

fn default_bin_width() -> f64 {
    0.05
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSpec {
    pub x_max: f64,
    pub nx: usize,
    pub dt: f64,
    /// Gaussian mollification width for the initial density; `0` uses the
    /// law's density as is.
    #[serde(default)]
    pub mollify_width: f64,
    /// Model-grid nodes at which densities are exported.
    #[serde(default)]
    pub snapshot_nodes: Option<Vec<usize>>,
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSpec {
    #[serde(default)]
    pub n_iter_max: Option<usize>,
    pub mc_samples: usize,
    #[serde(default = "default_true")]
    pub bridge_correction: bool,
    #[serde(default)]
    pub stop_tol: Option<f64>,
}

impl PicardSpec {
    pub fn to_config(&self) -> PicardConfig {
        let mut c = PicardConfig::with_samples(self.mc_samples);
        c.bridge_correction = self.bridge_correction;
        if let Some(n) = self.n_iter_max {
            c.n_iter_max = n;
        }
        if let Some(t) = self.stop_tol {
            c.stop_tol = t;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Elastic runs across `kappas` with common random numbers, plus the
    /// absorbing run with zero threshold as the `kappa = inf` proxy.
    KappaSweep {
        kappas: Vec<f64>,
        #[serde(default = "default_true")]
        include_absorbing: bool,
    },
    /// Runs across particle counts; distances are taken to the largest `N`.
    NSweep {
        ns: Vec<usize>,
    },
    PdeCompare {
        pde: PdeSpec,
    },
    BlowupDemo {
        /// Defaults to `10 / N`.
        #[serde(default)]
        jump_threshold: Option<f64>,
    },
    PicardVsParticle {
        picard: PicardSpec,
    },
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::KappaSweep { .. } => "kappa_sweep",
            ExperimentKind::NSweep { .. } => "n_sweep",
            ExperimentKind::PdeCompare { .. } => "pde_compare",
            ExperimentKind::BlowupDemo { .. } => "blowup_demo",
            ExperimentKind::PicardVsParticle { .. } => "picard_vs_particle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub params: ModelParams,
    #[serde(default = "default_true")]
    pub bridge_correction: bool,
    #[serde(flatten)]
    pub kind: ExperimentKind,
}

fn strictly_increasing<T: PartialOrd>(xs: &[T]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        self.params.validate().map_err(|e| Error::Config(e.to_string()))?;
        match &self.kind {
            ExperimentKind::KappaSweep { kappas, .. } => {
                if kappas.is_empty() || !strictly_increasing(kappas) {
                    return bad("kappas must be nonempty and strictly increasing".into());
                }
                if kappas.iter().any(|&k| !(k >= 0.0) || !k.is_finite()) {
                    return bad("kappas must be finite and >= 0".into());
                }
            }
            ExperimentKind::NSweep { ns } => {
                if ns.is_empty() || !strictly_increasing(ns) || ns[0] == 0 {
                    return bad("ns must be nonempty, positive and strictly increasing".into());
                }
            }
            ExperimentKind::PdeCompare { pde } => {
                self.pde_grid(pde).validate().map_err(|e| Error::Config(e.to_string()))?;
                if !(pde.bin_width > 0.0) {
                    return bad("pde.bin_width must be positive".into());
                }
                if !self.params.law.has_density() && !(pde.mollify_width > 0.0) {
                    return bad("a point-mass law needs pde.mollify_width > 0".into());
                }
                if let Some(nodes) = &pde.snapshot_nodes {
                    if nodes.iter().any(|&k| k > self.params.grid.n_steps) || !strictly_increasing(nodes) {
                        return bad("pde.snapshot_nodes must be increasing model-grid nodes".into());
                    }
                }
            }
            ExperimentKind::BlowupDemo { jump_threshold } => {
                if let Some(t) = jump_threshold {
                    if !(*t > 0.0 && *t < 1.0) {
                        return bad("jump_threshold must lie in (0, 1)".into());
                    }
                }
            }
            ExperimentKind::PicardVsParticle { picard } => {
                picard.to_config().validate().map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        Ok(())
    }

    fn pde_grid(&self, pde: &PdeSpec) -> PdeGrid {
        PdeGrid { x_max: pde.x_max, nx: pde.nx, dt: pde.dt, t_end: self.params.grid.t_end }
    }

    fn stream(&self) -> RngStream {
        RngStream::new(self.seed, 0)
    }

    /// Picard samples come from streams disjoint from the particles', so the
    /// comparison is between independent estimates.
    fn picard_stream(&self) -> RngStream {
        RngStream::new(self.seed, PICARD_STREAM_OFFSET)
    }

    fn sim_options(&self) -> SimOptions {
        SimOptions { bridge_correction: self.bridge_correction, ..Default::default() }
    }
}

/// A table ready to be written.
#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Loss { tag: String, curve: LossCurve },
    Distances(Vec<DistanceRow>),
    Jumps(Vec<JumpRow>),
    Density { tag: String, rows: Vec<DensityRow> },
}

impl Table {
    pub fn file_name(&self) -> String {
        match self {
            Table::Loss { tag, .. } => format!("loss_{tag}.csv"),
            Table::Distances(_) => "distances.csv".into(),
            Table::Jumps(_) => "jumps.csv".into(),
            Table::Density { tag, .. } => format!("density_{tag}.csv"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub param_a: String,
    pub param_b: String,
    pub levy: f64,
    pub sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpRow {
    pub t: f64,
    pub size: f64,
    pub param: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub t: f64,
    pub x: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFlags {
    pub blowup_guaranteed: bool,
    /// The initial law has a density, as the uniqueness theory assumes.
    pub density_hypothesis: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollification_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub code_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub config: ExperimentConfig,
    pub flags: RunFlags,
    /// Named scalar diagnostics, e.g. distances and invariant checks.
    pub checks: BTreeMap<String, serde_json::Value>,
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Tables and diagnostics of one experiment, before anything is written.
#[derive(Debug, Clone, Default)]
pub struct RunResult {
    pub tables: Vec<Table>,
    pub checks: BTreeMap<String, serde_json::Value>,
}

fn sub_run<T>(run: impl Into<String>, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::SubRun { run: run.into(), source: Box::new(e) })
}

fn distance_row(a: &str, b: &str, la: &LossCurve, lb: &LossCurve) -> Result<DistanceRow> {
    Ok(DistanceRow { param_a: a.into(), param_b: b.into(), levy: levy_metric(la, lb)?, sup: sup_distance(la, lb)? })
}

fn jump_rows(curve: &LossCurve, threshold: f64, param: &str) -> Vec<JumpRow> {
    jump_detect(curve, threshold)
        .into_iter()
        .map(|j| JumpRow { t: j.time, size: j.size, param: param.into() })
        .collect()
}

fn nodewise_le(a: &LossCurve, b: &LossCurve) -> bool {
    a.values().iter().zip(b.values()).all(|(x, y)| x <= y)
}

/// Run the solvers for `config` without touching the filesystem.
pub fn compute(config: &ExperimentConfig) -> Result<RunResult> {
    config.validate()?;
    let p = config.params;
    let stream = config.stream();
    let opts = config.sim_options();
    let default_threshold = |n: usize| (10.0 / n as f64).min(0.5);
    let mut out = RunResult::default();
    let check = |out: &mut RunResult, k: &str, v: serde_json::Value| {
        out.checks.insert(k.to_string(), v);
    };

    match &config.kind {
        ExperimentKind::KappaSweep { kappas, include_absorbing } => {
            let runs: Vec<(String, SimOutput)> = kappas
                .par_iter()
                .map(|&kappa| {
                    let tag = format!("kappa_{kappa}");
                    let r = simulate_elastic_with(&ModelParams { kappa, ..p }, &stream, &opts);
                    sub_run(tag.clone(), r).map(|o| (tag, o))
                })
                .collect::<Result<_>>()?;
            let mut curves: Vec<(String, LossCurve)> = runs.into_iter().map(|(t, o)| (t, o.loss_curve)).collect();
            let monotone = curves.windows(2).all(|w| nodewise_le(&w[0].1, &w[1].1));
            check(&mut out, "monotone_in_kappa", monotone.into());
            if *include_absorbing {
                let r = simulate_absorbing_with(&p, &stream, &AbsorbingStart::NoShift, &opts);
                let inf = sub_run("kappa_inf", r)?.loss_curve;
                let bounded = curves.iter().all(|(_, c)| nodewise_le(c, &inf));
                check(&mut out, "bounded_by_absorbing", bounded.into());
                let mut rows = Vec::new();
                for (tag, c) in &curves {
                    rows.push(distance_row(tag, "kappa_inf", c, &inf)?);
                }
                out.tables.push(Table::Distances(rows));
                curves.push(("kappa_inf".into(), inf));
            }
            let th = default_threshold(p.n_particles);
            let jumps = curves.iter().flat_map(|(t, c)| jump_rows(c, th, t)).collect();
            out.tables.push(Table::Jumps(jumps));
            out.tables.extend(curves.into_iter().map(|(tag, curve)| Table::Loss { tag, curve }));
        }
        ExperimentKind::NSweep { ns } => {
            let curves: Vec<(String, LossCurve)> = ns
                .par_iter()
                .map(|&n| {
                    let tag = format!("n_{n}");
                    let r = simulate_elastic_with(&ModelParams { n_particles: n, ..p }, &stream, &opts);
                    sub_run(tag.clone(), r).map(|o| (tag, o.loss_curve))
                })
                .collect::<Result<_>>()?;
            let (ref_tag, reference) = curves.last().expect("ns is nonempty");
            let mut rows = Vec::new();
            for (tag, c) in &curves[..curves.len() - 1] {
                rows.push(distance_row(tag, ref_tag, c, reference)?);
            }
            let decreasing = rows.windows(2).all(|w| w[1].levy <= w[0].levy);
            check(&mut out, "levy_decreasing_in_n", decreasing.into());
            out.tables.push(Table::Distances(rows));
            let jumps = curves.iter().zip(ns).flat_map(|((t, c), &n)| jump_rows(c, default_threshold(n), t)).collect();
            out.tables.push(Table::Jumps(jumps));
            out.tables.extend(curves.into_iter().map(|(tag, curve)| Table::Loss { tag, curve }));
        }
        ExperimentKind::PdeCompare { pde } => {
            let grid = config.pde_grid(pde);
            let nodes = match &pde.snapshot_nodes {
                Some(n) => n.clone(),
                None => PdeOptions::every_tenth(&p.grid).snapshot_nodes,
            };
            let pde_opts = PdeOptions { snapshot_nodes: nodes.clone(), truncation_tol: 1e-6 };
            let (particle, sol) = rayon::join(
                || {
                    let o = SimOptions { storage: PathStorage::Nodes(nodes.clone()), ..opts.clone() };
                    sub_run("particle", simulate_elastic_with(&p, &stream, &o))
                },
                || {
                    let v0 = initial_density(&p.law, &grid, pde.mollify_width);
                    sub_run("pde", v0.and_then(|v0| pde_solve_with(&p, &grid, &v0, &pde_opts)))
                },
            );
            let (particle, sol) = (particle?, sol?);
            out.tables.push(Table::Distances(vec![distance_row(
                "particle",
                "pde",
                &particle.loss_curve,
                &sol.loss_curve,
            )?]));
            let xs = grid.xs();
            let pde_rows = sol
                .snapshots
                .iter()
                .flat_map(|s| xs.iter().zip(&s.v).map(move |(&x, &v)| DensityRow { t: s.time, x, v }))
                .collect();
            let mut particle_rows = Vec::new();
            for &k in &nodes {
                let h = sub_run("particle", empirical_density(&particle, k, pde.bin_width))?;
                let t = p.grid.time(k);
                particle_rows.extend(h.centers().into_iter().zip(h.densities()).map(|(x, v)| DensityRow { t, x, v }));
            }
            let max_res = sol.stefan.iter().map(|c| c.undercooling_residual).fold(0.0, f64::max);
            check(&mut out, "mass_defect", sol.max_mass_defect.into());
            check(&mut out, "max_tail_mass", sol.max_tail_mass.into());
            check(&mut out, "truncation_warning", sol.truncation_warning.into());
            check(&mut out, "stefan_max_residual", max_res.into());
            check(&mut out, "dx", grid.dx().into());
            out.tables.push(Table::Density { tag: "pde".into(), rows: pde_rows });
            out.tables.push(Table::Density { tag: "particle".into(), rows: particle_rows });
            out.tables.push(Table::Loss { tag: "particle".into(), curve: particle.loss_curve });
            out.tables.push(Table::Loss { tag: "pde".into(), curve: sol.loss_curve });
        }
        ExperimentKind::BlowupDemo { jump_threshold } => {
            let th = jump_threshold.unwrap_or_else(|| default_threshold(p.n_particles));
            let o = sub_run("particle", simulate_elastic_with(&p, &stream, &opts))?;
            let jumps = jump_rows(&o.loss_curve, th, "particle");
            let max_jump = jumps.iter().map(|j| j.size).fold(0.0, f64::max);
            check(&mut out, "max_jump", max_jump.into());
            check(&mut out, "cascade_events", o.summary.cascade_events.into());
            out.tables.push(Table::Jumps(jumps));
            out.tables.push(Table::Loss { tag: "particle".into(), curve: o.loss_curve });
        }
        ExperimentKind::PicardVsParticle { picard } => {
            let cfg = picard.to_config();
            let (report, particle) = rayon::join(
                || sub_run("picard", picard_solve(&p, &cfg, &config.picard_stream())),
                || sub_run("particle", simulate_elastic_with(&p, &stream, &opts)),
            );
            let (report, particle) = (report?, particle?);
            let increasing = report.iterates.windows(2).all(|w| nodewise_le(&w[0], &w[1]));
            check(&mut out, "picard_converged", report.converged.into());
            check(&mut out, "picard_applications", report.n_applications().into());
            check(&mut out, "picard_iterates_increasing", increasing.into());
            check(&mut out, "picard_sup_distances", serde_json::to_value(&report.sup_distances)?);
            out.tables.push(Table::Distances(vec![distance_row(
                "picard",
                "particle",
                &report.final_loss,
                &particle.loss_curve,
            )?]));
            for (n, it) in report.iterates.iter().enumerate().skip(1) {
                out.tables.push(Table::Loss { tag: format!("picard_iter_{n}"), curve: it.clone() });
            }
            out.tables.push(Table::Loss { tag: "picard".into(), curve: report.final_loss });
            out.tables.push(Table::Loss { tag: "particle".into(), curve: particle.loss_curve });
        }
    }
    Ok(out)
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.into(), source }
}

fn write_table(table: &Table, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err(path))?;
    match table {
        Table::Loss { curve, .. } => {
            // re-check the loss-curve invariants on the way out
            let curve = LossCurve::new(*curve.grid(), curve.values().to_vec())?;
            w.write_record(["t", "lambda"]).map_err(csv_err(path))?;
            for (t, v) in curve.grid().times().zip(curve.values()) {
                w.write_record([t.to_string(), v.to_string()]).map_err(csv_err(path))?;
            }
        }
        Table::Distances(rows) => {
            w.write_record(["param_a", "param_b", "levy", "sup"]).map_err(csv_err(path))?;
            for r in rows {
                w.serialize(r).map_err(csv_err(path))?;
            }
        }
        Table::Jumps(rows) => {
            w.write_record(["t", "size", "param"]).map_err(csv_err(path))?;
            for r in rows {
                w.serialize(r).map_err(csv_err(path))?;
            }
        }
        Table::Density { rows, .. } => {
            w.write_record(["t", "x", "v"]).map_err(csv_err(path))?;
            for r in rows {
                w.serialize(r).map_err(csv_err(path))?;
            }
        }
    }
    w.flush().map_err(|source| Error::Io { path: path.into(), source })
}

fn digest_file(path: &Path) -> Result<(String, u64)> {
    let bytes = fs::read(path).map_err(|source| Error::Io { path: path.into(), source })?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

/// Write `tables` into `output_dir`, fill the manifest's inventory and write
/// the manifest itself.
pub fn write_outputs(tables: &[Table], manifest: &mut RunManifest, output_dir: &Path) -> Result<Vec<FileEntry>> {
    fs::create_dir_all(output_dir).map_err(|source| Error::Io { path: output_dir.into(), source })?;
    let mut files = Vec::with_capacity(tables.len());
    let mut headers_written = BTreeMap::new();
    for table in tables {
        let name = table.file_name();
        if headers_written.insert(name.clone(), ()).is_some() {
            return Err(Error::Config(format!("two tables map to {name}")));
        }
        let path = output_dir.join(&name);
        write_table(table, &path)?;
        let (sha256, bytes) = digest_file(&path)?;
        files.push(FileEntry { path: name, sha256, bytes });
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    manifest.files = files.clone();
    let path = output_dir.join(MANIFEST_NAME);
    let text = serde_json::to_string_pretty(manifest)?;
    fs::write(&path, text).map_err(|source| Error::Io { path, source })?;
    Ok(files)
}

/// Execute `config` and write its outputs into `output_dir`. On failure the
/// manifest is still written, marked invalid, and the error is returned.
pub fn run_experiment(config: &ExperimentConfig, output_dir: &Path) -> Result<RunManifest> {
    let started_unix = unix_now();
    let result = compute(config);
    let flags = RunFlags {
        blowup_guaranteed: blowup_guaranteed(config.params.alpha, &config.params.law, config.params.kappa),
        density_hypothesis: config.params.law.has_density(),
        mollification_width: match &config.kind {
            ExperimentKind::PdeCompare { pde } if pde.mollify_width > 0.0 => Some(pde.mollify_width),
            _ => None,
        },
    };
    let mut manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix,
        finished_unix: 0,
        config: config.clone(),
        flags,
        checks: BTreeMap::new(),
        valid: true,
        error: None,
        files: Vec::new(),
    };
    match result {
        Ok(r) => {
            manifest.checks = r.checks;
            manifest.finished_unix = unix_now();
            write_outputs(&r.tables, &mut manifest, output_dir)?;
            Ok(manifest)
        }
        Err(e) => {
            manifest.valid = false;
            manifest.error = Some(e.to_string());
            manifest.finished_unix = unix_now();
            write_outputs(&[], &mut manifest, output_dir)?;
            Err(e)
        }
    }
}

/// Parse a `loss_<tag>.csv` file back into times and values.
pub fn read_loss_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    #[derive(Deserialize)]
    struct Row {
        t: f64,
        lambda: f64,
    }
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for row in r.deserialize::<Row>() {
        let row = row.map_err(csv_err(path))?;
        ts.push(row.t);
        vs.push(row.lambda);
    }
    Ok((ts, vs))
}

/// Closed-form reference values used by the test suites.
pub fn oracle_values() -> Result<Vec<(&'static str, f64)>> {
    use statrs::distribution::{Continuous, ContinuousCDF, Normal};
    let n = Normal::standard();
    let gamma0 = gamma_zero_analytic(1.0, &InitialLaw::PointMass { x0: 0.0 }, 1.0)?;
    Ok(vec![
        ("gamma_zero(point_mass 0, kappa 1, t 1)", gamma0),
        ("closed form 1 - 2 e^(1/2) Phi(-1)", 1.0 - 2.0 * 0.5f64.exp() * n.cdf(-1.0)),
        ("survival 2 e^(1/2) Phi(-1)", 2.0 * 0.5f64.exp() * n.cdf(-1.0)),
        ("absorbing first passage from 1 by t 1: 2 Phi(-1)", 2.0 * n.cdf(-1.0)),
        ("E|1 + B_1|", 2.0 * n.cdf(1.0) - 1.0 + 2.0 * n.pdf(1.0)),
        ("blow-up threshold, uniform(0.2,1.2), kappa 2", 2.0 * (0.7 + 0.5)),
    ])
}
