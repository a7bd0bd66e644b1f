//! Solvers for the loss function itself: the operator `Gamma_kappa`, its
//! Picard iterates from zero, a quadrature oracle for `Gamma_kappa[0]`, and
//! the blow-up criterion.
//!
//! `Gamma_kappa[l]_t` is the probability that `X_{0-} + xi + B_s - alpha l_s`
//! has reached zero by time `t`. Sample `s` of a Monte Carlo estimate uses the
//! stream of particle `s`, so Picard iterates, different `kappa` and `alpha`
//! values and the particle system all share their random numbers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Result};
use crate::paths::{sup_distance, LossCurve, Sampled};
use crate::quad::integrate;
use crate::sampling::{InitialLaw, Lane, ModelParams, RngStream};

const BRIDGE_CUTOFF: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub n_iter_max: usize,
    pub mc_samples: usize,
    pub bridge_correction: bool,
    /// Sup-distance between successive iterates below which iteration stops.
    pub stop_tol: f64,
}

impl PicardConfig {
    /// Defaults with `stop_tol = 2 / sqrt(mc_samples)`.
    pub fn with_samples(mc_samples: usize) -> Self {
        Self { n_iter_max: 50, mc_samples, bridge_correction: true, stop_tol: 2.0 / (mc_samples.max(1) as f64).sqrt() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iter_max == 0 || self.mc_samples == 0 {
            return Err(invalid("n_iter_max and mc_samples must be at least 1"));
        }
        if self.mc_samples > u32::MAX as usize {
            return Err(invalid("mc_samples must fit in 32 bits"));
        }
        if !(self.stop_tol > 0.0) {
            return Err(invalid(format!("stop_tol must be positive, got {}", self.stop_tol)));
        }
        Ok(())
    }
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self::with_samples(100_000)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// `l^0 = 0, l^1, ..., l^n`.
    pub iterates: Vec<LossCurve>,
    /// `sup |l^{j+1} - l^j|` for each application of the operator.
    pub sup_distances: Vec<f64>,
    pub converged: bool,
    pub final_loss: LossCurve,
}

impl SolveReport {
    pub fn n_applications(&self) -> usize {
        self.sup_distances.len()
    }
}

/// Kill node of one sample under the loss levels `level[k] = alpha l_k`.
#[inline]
fn sample_kill_node(
    s: &RngStream,
    key0: f64,
    level: &[f64],
    sqrt_dt: f64,
    two_over_dt: f64,
    bridge: bool,
) -> Option<usize> {
    if !key0.is_finite() {
        return None;
    }
    if key0 <= level[0] {
        return Some(0);
    }
    let mut key = key0;
    for k in 1..level.len() {
        let before = key - level[k - 1];
        key += sqrt_dt * s.normal(Lane::Brownian, k as u32 - 1);
        let after = key - level[k - 1];
        if bridge && after > 0.0 {
            let exponent = two_over_dt * before * after;
            if exponent < BRIDGE_CUTOFF && s.uniform(Lane::Bridge, k as u32 - 1) < (-exponent).exp() {
                return Some(k);
            }
        }
        if key <= level[k] {
            return Some(k);
        }
    }
    None
}

/// Monte Carlo estimate of `Gamma_kappa[l]` on `l`'s grid.
pub fn gamma_apply(
    l: &LossCurve,
    params: &ModelParams,
    config: &PicardConfig,
    stream: &RngStream,
) -> Result<LossCurve> {
    params.validate()?;
    config.validate()?;
    let grid = *l.grid();
    grid.ensure_same(&params.grid)?;
    let level: Vec<f64> = l.values().iter().map(|v| params.alpha * v).collect();
    let sqrt_dt = grid.dt().sqrt();
    let two_over_dt = 2.0 / grid.dt();
    let n_nodes = grid.n_nodes();
    let counts = (0..config.mc_samples)
        .into_par_iter()
        .with_min_len(1024)
        .fold(
            || vec![0u64; n_nodes],
            |mut acc, i| {
                let s = stream.particle(i as u64);
                let key0 = params.law.draw(&s) + params.threshold(&s);
                let node = sample_kill_node(&s, key0, &level, sqrt_dt, two_over_dt, config.bridge_correction);
                if let Some(k) = node {
                    acc[k] += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; n_nodes],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    LossCurve::from_counts(grid, &counts, config.mc_samples as u64)
}

/// Picard iteration `l^{n+1} = Gamma_kappa[l^n]` from `l^0 = 0` with one fixed
/// sample bank, so the iterates increase nodewise.
pub fn picard_solve(params: &ModelParams, config: &PicardConfig, stream: &RngStream) -> Result<SolveReport> {
    config.validate()?;
    let mut iterates = vec![LossCurve::zero(params.grid)];
    let mut sup_distances = Vec::new();
    let mut converged = false;
    for _ in 0..config.n_iter_max {
        let prev = iterates.last().expect("starts with the zero curve");
        let next = gamma_apply(prev, params, config, stream)?;
        let d = sup_distance(&next, prev)?;
        sup_distances.push(d);
        iterates.push(next);
        if d < config.stop_tol {
            converged = true;
            break;
        }
    }
    let final_loss = iterates.last().expect("at least one iterate").clone();
    Ok(SolveReport { iterates, sup_distances, converged, final_loss })
}

/// Upper tail of the standard normal.
fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// `E[2 Phi(-(x + xi)/sqrt t)]` over `xi ~ Exp(kappa)`, with `xi = -ln(u)/kappa`.
fn shifted_first_passage(x: f64, t: f64, kappa: f64) -> f64 {
    let sqrt_t = t.sqrt();
    let f = |u: f64| {
        if u <= 0.0 {
            0.0
        } else {
            2.0 * normal_sf((x - u.ln() / kappa) / sqrt_t)
        }
    };
    integrate(f, 0.0, 1.0, 1e-13).value
}

/// `Gamma_kappa[0]_t = P(inf_{s<=t} X_{0-} + xi + B_s <= 0)`, by nested
/// adaptive quadrature of the reflection-principle formula.
pub fn gamma_zero_analytic(t: f64, law: &InitialLaw, kappa: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid(format!("t must be positive, got {t}")));
    }
    if !(kappa >= 0.0) {
        return Err(invalid(format!("kappa must be >= 0, got {kappa}")));
    }
    law.validate()?;
    if kappa == 0.0 {
        return Ok(0.0);
    }
    let inner = |x: f64| shifted_first_passage(x, t, kappa);
    let tol = 1e-11;
    let value = match *law {
        InitialLaw::PointMass { x0 } => inner(x0),
        InitialLaw::Uniform { a, b } => integrate(inner, a, b, tol * (b - a)).value / (b - a),
        InitialLaw::ShiftedExponential { shift, rate } => {
            integrate(|v: f64| if v <= 0.0 { 0.0 } else { inner(shift - v.ln() / rate) }, 0.0, 1.0, tol).value
        }
        InitialLaw::Gamma { shape, scale } => {
            let norm = statrs::function::gamma::ln_gamma(shape + 1.0) + shape * scale.ln();
            let cutoff = law.upper_cutoff();
            if shape < 1.0 {
                // w = x^shape removes the density's singularity at zero
                let f = |w: f64| {
                    let x = w.powf(1.0 / shape);
                    inner(x) * (-x / scale - norm).exp()
                };
                integrate(f, 0.0, cutoff.powf(shape), tol).value
            } else {
                let f = |x: f64| inner(x) * law.pdf(x).expect("gamma has a density");
                let mode = (shape - 1.0) * scale;
                integrate(f, 0.0, mode, tol).value + integrate(f, mode, cutoff, tol).value
            }
        }
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Sufficient condition for a jump: `alpha > 2 (m_{0-} + 1/kappa)`. A `false`
/// result says nothing about continuity.
pub fn blowup_guaranteed(alpha: f64, law: &InitialLaw, kappa: f64) -> bool {
    kappa > 0.0 && alpha > 2.0 * (law.mean() + 1.0 / kappa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::TimeGrid;

    fn phi_cdf(z: f64) -> f64 {
        statrs::distribution::ContinuousCDF::cdf(&statrs::distribution::Normal::standard(), z)
    }

    /// Closed form of the inner exponential integral.
    fn closed_inner(x: f64, t: f64, kappa: f64) -> f64 {
        let s = t.sqrt();
        2.0 * phi_cdf(-x / s) - 2.0 * (kappa * x + 0.5 * kappa * kappa * t).exp() * phi_cdf(-(x + kappa * t) / s)
    }

    fn params(alpha: f64, kappa: f64, law: InitialLaw, n_steps: usize) -> ModelParams {
        ModelParams { alpha, kappa, law, grid: TimeGrid::new(1.0, n_steps).unwrap(), n_particles: 1 }
    }

    #[test]
    fn point_mass_matches_closed_form() {
        for (x, t, kappa) in [(0.0, 1.0, 1.0), (0.5, 1.0, 2.0), (1.0, 0.3, 0.5), (2.0, 2.0, 4.0)] {
            let got = gamma_zero_analytic(t, &InitialLaw::PointMass { x0: x }, kappa).unwrap();
            assert!((got - closed_inner(x, t, kappa)).abs() < 1e-10, "{x} {t} {kappa}");
        }
        let v = gamma_zero_analytic(1.0, &InitialLaw::PointMass { x0: 0.0 }, 1.0).unwrap();
        assert!((v - 0.476843).abs() < 1e-6, "{v}");
    }

    #[test]
    fn large_kappa_collapses_to_first_passage() {
        let v = gamma_zero_analytic(1.0, &InitialLaw::PointMass { x0: 1.0 }, 1e6).unwrap();
        assert!((v - 0.317311).abs() < 1e-4, "{v}");
    }

    #[test]
    fn short_time_is_zero_away_from_origin() {
        let v = gamma_zero_analytic(1e-6, &InitialLaw::Uniform { a: 0.2, b: 1.2 }, 1.0).unwrap();
        assert!(v < 1e-12);
        assert!(gamma_zero_analytic(0.0, &InitialLaw::Uniform { a: 0.2, b: 1.2 }, 1.0).is_err());
    }

    #[test]
    fn laws_with_density_match_outer_oracle() {
        // outer integral against the closed-form inner, by plain midpoint rule
        let cases = [
            InitialLaw::Uniform { a: 0.2, b: 1.2 },
            InitialLaw::Gamma { shape: 2.0, scale: 0.5 },
            InitialLaw::Gamma { shape: 0.5, scale: 1.0 },
            InitialLaw::ShiftedExponential { shift: 0.1, rate: 3.0 },
        ];
        for law in cases {
            let got = gamma_zero_analytic(1.0, &law, 1.5).unwrap();
            let n = 400_000;
            let reference: f64 = (0..n)
                .map(|i| {
                    let u = (i as f64 + 0.5) / n as f64;
                    // quantile via bisection on the cdf
                    let (mut lo, mut hi) = (0.0, law.upper_cutoff());
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if law.cdf(mid) < u {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    closed_inner(0.5 * (lo + hi), 1.0, 1.5)
                })
                .sum::<f64>()
                / n as f64;
            assert!((got - reference).abs() < 2e-5, "{law:?}: {got} vs {reference}");
        }
    }

    #[test]
    fn analytic_monotonicity() {
        let at = |x0: f64, t: f64, k: f64| gamma_zero_analytic(t, &InitialLaw::PointMass { x0 }, k).unwrap();
        assert!(at(0.2, 1.0, 1.0) > at(0.4, 1.0, 1.0));
        assert!(at(0.2, 0.5, 1.0) < at(0.2, 1.0, 1.0));
        assert!(at(0.2, 1.0, 0.5) < at(0.2, 1.0, 2.0));
        assert_eq!(gamma_zero_analytic(1.0, &InitialLaw::PointMass { x0: 0.0 }, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn blowup_examples() {
        let m1 = InitialLaw::PointMass { x0: 1.0 };
        assert!(blowup_guaranteed(5.0, &m1, 1.0));
        assert!(!blowup_guaranteed(3.0, &m1, 1.0));
        assert!(blowup_guaranteed(1.01, &InitialLaw::PointMass { x0: 0.5 }, 1e6));
        assert!(!blowup_guaranteed(100.0, &m1, 0.0));
    }

    #[test]
    fn gamma_estimate_near_oracle() {
        let p = params(1e-12, 1.0, InitialLaw::PointMass { x0: 0.0 }, 200);
        let cfg = PicardConfig::with_samples(200_000);
        let l = gamma_apply(&LossCurve::zero(p.grid), &p, &cfg, &RngStream::new(1, 0)).unwrap();
        let exact = gamma_zero_analytic(1.0, &p.law, 1.0).unwrap();
        // 3 sigma at 2e5 samples
        assert!((l.last() - exact).abs() < 0.0034, "{} vs {exact}", l.last());
    }

    #[test]
    fn saturated_input_kills_everything_at_once() {
        let p = params(50.0, 1.0, InitialLaw::Uniform { a: 0.0, b: 1.0 }, 20);
        let cfg = PicardConfig::with_samples(2000);
        let one = LossCurve::constant(p.grid, 1.0).unwrap();
        let l = gamma_apply(&one, &p, &cfg, &RngStream::new(2, 0)).unwrap();
        // every xi below 49 for 2000 unit exponentials at rate 1
        assert!(l.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn gamma_is_monotone_in_input_kappa_and_alpha() {
        let law = InitialLaw::Uniform { a: 0.0, b: 1.0 };
        let cfg = PicardConfig::with_samples(5000);
        let s = RngStream::new(3, 10);
        let grid = TimeGrid::new(1.0, 50).unwrap();
        let small = LossCurve::new(grid, (0..51).map(|k| 0.2 * k as f64 / 50.0).collect()).unwrap();
        let big = LossCurve::new(grid, (0..51).map(|k| 0.5 * k as f64 / 50.0).collect()).unwrap();
        let base = params(1.0, 1.0, law, 50);
        let lo = gamma_apply(&small, &base, &cfg, &s).unwrap();
        let hi = gamma_apply(&big, &base, &cfg, &s).unwrap();
        let hk = gamma_apply(&small, &ModelParams { kappa: 3.0, ..base }, &cfg, &s).unwrap();
        let ha = gamma_apply(&small, &ModelParams { alpha: 2.0, ..base }, &cfg, &s).unwrap();
        for k in 0..51 {
            assert!(lo.values()[k] <= hi.values()[k]);
            assert!(lo.values()[k] <= hk.values()[k]);
            assert!(lo.values()[k] <= ha.values()[k]);
        }
    }

    #[test]
    fn picard_decoupled_converges_in_two() {
        let p = params(1e-12, 1.0, InitialLaw::PointMass { x0: 0.5 }, 50);
        let r = picard_solve(&p, &PicardConfig::with_samples(20_000), &RngStream::new(4, 0)).unwrap();
        assert!(r.converged);
        assert_eq!(r.n_applications(), 2);
        assert_eq!(r.iterates.len(), 3);
    }

    #[test]
    fn picard_iterates_increase_and_dominate_in_kappa() {
        let law = InitialLaw::Uniform { a: 0.2, b: 1.2 };
        let cfg = PicardConfig::with_samples(10_000);
        let s = RngStream::new(5, 0);
        let lo = picard_solve(&params(0.8, 0.5, law, 100), &cfg, &s).unwrap();
        let hi = picard_solve(&params(0.8, 2.0, law, 100), &cfg, &s).unwrap();
        for w in lo.iterates.windows(2) {
            assert!(w[0].values().iter().zip(w[1].values()).all(|(a, b)| a <= b));
        }
        assert!(lo.converged);
        // both start from zero with shared samples, so every iterate is ordered
        for (a, b) in lo.iterates.iter().zip(&hi.iterates) {
            assert!(a.values().iter().zip(b.values()).all(|(x, y)| x <= y));
        }
    }

    #[test]
    fn picard_blowup_regime_shows_a_jump() {
        let p = params(10.0, 2.0, InitialLaw::Uniform { a: 0.2, b: 1.2 }, 200);
        let r = picard_solve(&p, &PicardConfig::with_samples(20_000), &RngStream::new(6, 0)).unwrap();
        assert!(!crate::paths::jump_detect(&r.final_loss, 0.05).is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(PicardConfig { n_iter_max: 0, ..Default::default() }.validate().is_err());
        assert!(PicardConfig { stop_tol: 0.0, ..Default::default() }.validate().is_err());
        assert!((PicardConfig::default().stop_tol - 2.0 / 100_000f64.sqrt()).abs() < 1e-15);
    }
}
