//! Initial laws, elastic thresholds and reproducible random streams.
//!
//! Randomness is counter-based: a variate is addressed by
//! `(seed, stream_id, lane, index)` and never depends on how many other
//! variates were drawn before it, or on which thread drew them. Particle `i`
//! of a run with base stream `s` uses stream id `s + i`, so the same seed
//! replays the same initial positions, thresholds and Brownian increments
//! across every solver and parameter value.

mod philox;

use rand::RngCore;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF};

use crate::error::{invalid, Result};
use crate::paths::TimeGrid;

pub use philox::philox4x32_10;

/// Purpose of a draw. Lanes partition the counter space of a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Lane {
    Initial = 0,
    Threshold = 1,
    Brownian = 2,
    Bridge = 3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Stream of the `i`-th particle (or Monte Carlo sample) under this base.
    #[inline]
    pub fn particle(&self, i: u64) -> Self {
        Self { seed: self.seed, stream_id: self.stream_id.wrapping_add(i) }
    }

    /// Generator for one cell of the counter space. A cell provides up to
    /// 2^24 blocks of 128 bits; typical consumers use one or two.
    #[inline]
    pub fn cell(&self, lane: Lane, index: u32) -> CellRng {
        CellRng {
            key: [self.seed as u32, (self.seed >> 32) as u32],
            index,
            lane_block: (lane as u32) << 24,
            stream: [self.stream_id as u32, (self.stream_id >> 32) as u32],
            buf: [0; 4],
            pos: 4,
        }
    }

    /// Uniform on the open interval `(0, 1)`.
    #[inline]
    pub fn uniform(&self, lane: Lane, index: u32) -> f64 {
        open_unit(self.cell(lane, index).next_u64())
    }

    /// Standard normal variate (ziggurat) for `(lane, index)`.
    #[inline]
    pub fn normal(&self, lane: Lane, index: u32) -> f64 {
        StandardNormal.sample(&mut self.cell(lane, index))
    }

    /// Unit-rate exponential `E_i = -ln U_i` from the threshold lane. The same
    /// `E_i` serves every `kappa` through `xi = E_i / kappa`.
    #[inline]
    pub fn unit_exponential(&self, index: u32) -> f64 {
        -self.uniform(Lane::Threshold, index).ln()
    }
}

#[inline]
fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Generator over a single counter cell; implements [`RngCore`] so any
/// `rand_distr` distribution can draw from it.
#[derive(Debug, Clone)]
pub struct CellRng {
    key: [u32; 2],
    index: u32,
    lane_block: u32,
    stream: [u32; 2],
    buf: [u32; 4],
    pos: usize,
}

impl CellRng {
    #[inline]
    fn refill(&mut self) {
        let block = self.lane_block & 0x00FF_FFFF;
        assert!(block < 0x00FF_FFFF, "counter cell exhausted");
        self.buf = philox4x32_10([self.index, self.lane_block, self.stream[0], self.stream[1]], self.key);
        self.lane_block += 1;
        self.pos = 0;
    }
}

impl RngCore for CellRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        if self.pos >= 4 {
            self.refill();
        }
        let v = self.buf[self.pos];
        self.pos += 1;
        v
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        if self.pos >= 3 {
            self.refill();
        }
        let v = (self.buf[self.pos] as u64) | ((self.buf[self.pos + 1] as u64) << 32);
        self.pos += 2;
        v
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(4) {
            let bytes = self.next_u32().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// Law of the initial position `X_{0-}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitialLaw {
    /// Degenerate law; has no density, so runs using it sit outside the
    /// uniqueness theory and are flagged in run manifests.
    PointMass {
        x0: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    ShiftedExponential {
        shift: f64,
        rate: f64,
    },
}

impl InitialLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            InitialLaw::PointMass { x0 } => x0 >= 0.0 && x0.is_finite(),
            InitialLaw::Uniform { a, b } => a >= 0.0 && a < b && b.is_finite(),
            InitialLaw::Gamma { shape, scale } => shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite(),
            InitialLaw::ShiftedExponential { shift, rate } => {
                shift >= 0.0 && rate > 0.0 && shift.is_finite() && rate.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid initial law {self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            InitialLaw::PointMass { x0 } => x0,
            InitialLaw::Uniform { a, b } => 0.5 * (a + b),
            InitialLaw::Gamma { shape, scale } => shape * scale,
            InitialLaw::ShiftedExponential { shift, rate } => shift + 1.0 / rate,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            InitialLaw::PointMass { .. } => 0.0,
            InitialLaw::Uniform { a, b } => (b - a).powi(2) / 12.0,
            InitialLaw::Gamma { shape, scale } => shape * scale * scale,
            InitialLaw::ShiftedExponential { rate, .. } => 1.0 / (rate * rate),
        }
    }

    pub fn has_density(&self) -> bool {
        !matches!(self, InitialLaw::PointMass { .. })
    }

    /// Density at `x`; `None` for the point mass.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        Some(match *self {
            InitialLaw::PointMass { .. } => return None,
            InitialLaw::Uniform { a, b } => {
                if (a..=b).contains(&x) {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            InitialLaw::Gamma { shape, scale } => {
                if x < 0.0 {
                    0.0
                } else {
                    statrs::distribution::Gamma::new(shape, 1.0 / scale).expect("validated gamma parameters").pdf(x)
                }
            }
            InitialLaw::ShiftedExponential { shift, rate } => {
                if x < shift {
                    0.0
                } else {
                    rate * (-rate * (x - shift)).exp()
                }
            }
        })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            InitialLaw::PointMass { x0 } => {
                if x >= x0 {
                    1.0
                } else {
                    0.0
                }
            }
            InitialLaw::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            InitialLaw::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    statrs::distribution::Gamma::new(shape, 1.0 / scale).expect("validated gamma parameters").cdf(x)
                }
            }
            InitialLaw::ShiftedExponential { shift, rate } => {
                if x <= shift {
                    0.0
                } else {
                    1.0 - (-rate * (x - shift)).exp()
                }
            }
        }
    }

    /// A point beyond which the law has mass below roughly `1e-16`.
    pub fn upper_cutoff(&self) -> f64 {
        match *self {
            InitialLaw::PointMass { x0 } => x0,
            InitialLaw::Uniform { b, .. } => b,
            InitialLaw::Gamma { shape, scale } => scale * (shape + 40.0 + 12.0 * shape.sqrt()),
            InitialLaw::ShiftedExponential { shift, rate } => shift + 37.0 / rate,
        }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            InitialLaw::PointMass { x0 } => x0,
            InitialLaw::Uniform { a, b } => a + (b - a) * open_unit(rng.next_u64()),
            InitialLaw::Gamma { shape, scale } => {
                Gamma::new(shape, scale).expect("validated gamma parameters").sample(rng)
            }
            InitialLaw::ShiftedExponential { shift, rate } => shift - open_unit(rng.next_u64()).ln() / rate,
        }
    }

    /// Initial position of the particle owning `stream`.
    #[inline]
    pub fn draw(&self, stream: &RngStream) -> f64 {
        self.sample(&mut stream.cell(Lane::Initial, 0))
    }
}

/// Physical and discretisation parameters shared by every solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Feedback strength.
    pub alpha: f64,
    /// Elastic killing rate; `0` means purely reflecting (no threshold).
    pub kappa: f64,
    pub law: InitialLaw,
    #[serde(flatten)]
    pub grid: TimeGrid,
    pub n_particles: usize,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(invalid(format!("kappa must be finite and >= 0, got {}", self.kappa)));
        }
        if self.n_particles == 0 {
            return Err(invalid("n_particles must be at least 1"));
        }
        if self.n_particles > u32::MAX as usize || self.grid.n_steps >= u32::MAX as usize {
            return Err(invalid("n_particles and n_steps must fit in 32 bits"));
        }
        self.law.validate()?;
        self.grid.validate()
    }

    /// Threshold `xi = E / kappa`, or `+inf` when `kappa = 0`.
    #[inline]
    pub fn threshold(&self, stream: &RngStream) -> f64 {
        if self.kappa == 0.0 {
            f64::INFINITY
        } else {
            stream.unit_exponential(0) / self.kappa
        }
    }
}

/// `n` i.i.d. draws from `law`; draw `i` lives in cell `(Initial, i)`.
pub fn sample_initial(law: &InitialLaw, n: usize, stream: &RngStream) -> Result<Vec<f64>> {
    law.validate()?;
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    Ok((0..n as u32).map(|i| law.sample(&mut stream.cell(Lane::Initial, i))).collect())
}

/// `n` i.i.d. `Exp(kappa)` draws `E_i / kappa` with `E_i` shared across `kappa`.
pub fn sample_exponential(kappa: f64, n: usize, stream: &RngStream) -> Result<Vec<f64>> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(invalid(format!("kappa must be positive, got {kappa}")));
    }
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    Ok((0..n as u32).map(|i| stream.unit_exponential(i) / kappa).collect())
}

pub fn mean_initial(law: &InitialLaw) -> f64 {
    law.mean()
}
