//! Quantum-jump Monte Carlo unraveling of the ladder decay plus a
//! beamsplitter/detector model producing time-tagged click records.
//!
//! For diagonal initial states the no-jump evolution carries no coherence,
//! so a trajectory is a pure cascade: from rung `k` the waiting time is
//! exponential with rate `k(Ñ−k+1)` (units of `Γ`), then `k → k−1`. A
//! trajectory from rung `k₀` emits exactly `k₀` photons when run to
//! completion.

use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ladder::LadderBasis;

#[derive(Clone, Debug, PartialEq)]
pub enum JumpError {
    RungOutOfRange { rung: usize, dim: usize },
    InvalidDetectorModel,
}

impl fmt::Display for JumpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpError::RungOutOfRange { rung, dim } => {
                write!(f, "initial rung {rung} outside ladder of dimension {dim}")
            }
            JumpError::InvalidDetectorModel => write!(f, "detector model parameters out of range"),
        }
    }
}

/// Beamsplitter + APD pair model for the HBT arm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorModel {
    /// Overall detection efficiency `η ∈ (0, 1]`.
    pub efficiency: f64,
    /// Probability that a detected photon routes to channel 1.
    pub split_ratio: f64,
    /// Gaussian timing jitter σ in ns.
    pub time_jitter_ns: f64,
    /// Per-channel dead time in ns.
    pub dead_time_ns: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            efficiency: 0.1,
            split_ratio: 0.5,
            time_jitter_ns: 0.0,
            dead_time_ns: 0.0,
        }
    }
}

impl DetectorModel {
    pub fn validate(&self) -> Result<(), JumpError> {
        let ok = self.efficiency > 0.0
            && self.efficiency <= 1.0
            && (0.0..=1.0).contains(&self.split_ratio)
            && self.time_jitter_ns >= 0.0
            && self.dead_time_ns >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(JumpError::InvalidDetectorModel)
        }
    }
}

/// One detection event, time relative to the common trigger of its
/// repetition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeTagRecord {
    pub repetition: u64,
    /// Detector channel, 1 or 2.
    pub channel: u8,
    pub time_ns: f64,
}

fn sample_exp(rng: &mut impl Rng, rate: f64) -> f64 {
    // 1 − u ∈ (0, 1], so the log is finite.
    -libm::log(1.0 - rng.random::<f64>()) / rate
}

fn sample_gauss(rng: &mut impl Rng, sigma: f64) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    sigma * libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

/// Sample one cascade trajectory starting from `initial_rung`, returning
/// emission times in units of `1/Γ`, ascending, truncated at `t_max`.
pub fn sample_trajectory(
    basis: &LadderBasis,
    initial_rung: usize,
    t_max: f64,
    rng: &mut impl Rng,
) -> Result<Vec<f64>, JumpError> {
    if initial_rung >= basis.dim() {
        return Err(JumpError::RungOutOfRange {
            rung: initial_rung,
            dim: basis.dim(),
        });
    }
    let mut emissions = Vec::with_capacity(initial_rung);
    let mut rung = initial_rung;
    let mut t = 0.0;
    while rung > 0 {
        t += sample_exp(rng, basis.rate(rung));
        if t > t_max {
            break;
        }
        emissions.push(t);
        rung -= 1;
    }
    Ok(emissions)
}

/// Run the emissions through the detector chain: η-thinning, beamsplitter
/// routing, timing jitter, then per-channel dead-time pruning (jitter is
/// applied before pruning: the timing electronics sit after the detector).
pub fn detect(
    emissions_ns: &[f64],
    model: &DetectorModel,
    repetition: u64,
    rng: &mut impl Rng,
) -> Result<Vec<TimeTagRecord>, JumpError> {
    model.validate()?;
    let mut clicks: Vec<TimeTagRecord> = Vec::new();
    for &t in emissions_ns {
        if rng.random::<f64>() >= model.efficiency {
            continue;
        }
        let channel = if rng.random::<f64>() < model.split_ratio { 1 } else { 2 };
        let mut time_ns = t;
        if model.time_jitter_ns > 0.0 {
            time_ns += sample_gauss(rng, model.time_jitter_ns);
        }
        clicks.push(TimeTagRecord {
            repetition,
            channel,
            time_ns,
        });
    }
    clicks.sort_by(|a, b| a.time_ns.partial_cmp(&b.time_ns).unwrap());

    if model.dead_time_ns > 0.0 {
        let mut last = [f64::NEG_INFINITY; 2];
        clicks.retain(|c| {
            let slot = (c.channel - 1) as usize;
            if c.time_ns - last[slot] >= model.dead_time_ns {
                last[slot] = c.time_ns;
                true
            } else {
                false
            }
        });
    }
    Ok(clicks)
}

/// Parameters for synthetic dataset generation.
#[derive(Clone, Debug)]
pub struct GenerateParams {
    pub basis: LadderBasis,
    /// Starting rung; the fully inverted state is `basis.dim() − 1`.
    pub initial_rung: usize,
    /// Trajectory cutoff in units of `1/Γ`.
    pub t_max: f64,
    /// Conversion factor, ns per `1/Γ`.
    pub inv_gamma_ns: f64,
    pub seed: u64,
}

impl GenerateParams {
    /// The emitted photon number is the same for every repetition exactly
    /// when the trajectory starts from a single rung and is not truncated.
    /// `t_max ≥ 64` leaves a truncation probability below `e⁻⁶⁴` even for
    /// the slowest single-atom cascade.
    pub fn fixed_photon_number(&self) -> Option<u32> {
        if self.t_max >= 64.0 {
            Some(self.initial_rung as u32)
        } else {
            None
        }
    }
}

/// RNG for one repetition: one ChaCha key per dataset seed, one stream per
/// repetition, so shards can be generated in any order.
fn repetition_rng(seed: u64, repetition: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(repetition);
    rng
}

/// Generate the click records of a single repetition. Pure function of
/// `(params, model, repetition)`; parallel callers shard over repetitions.
pub fn repetition_records(
    params: &GenerateParams,
    model: &DetectorModel,
    repetition: u64,
) -> Result<Vec<TimeTagRecord>, JumpError> {
    let mut rng = repetition_rng(params.seed, repetition);
    let emissions = sample_trajectory(&params.basis, params.initial_rung, params.t_max, &mut rng)?;
    let emissions_ns: Vec<f64> = emissions.iter().map(|t| t * params.inv_gamma_ns).collect();
    detect(&emissions_ns, model, repetition, &mut rng)
}

/// Generate a full dataset of `n_repetitions` repetitions, concatenated in
/// repetition order.
pub fn generate_dataset(
    params: &GenerateParams,
    model: &DetectorModel,
    n_repetitions: u64,
) -> Result<Vec<TimeTagRecord>, JumpError> {
    model.validate()?;
    let mut out = Vec::new();
    for rep in 0..n_repetitions {
        out.extend(repetition_records(params, model, rep)?);
    }
    Ok(out)
}
