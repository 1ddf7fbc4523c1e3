//! Binned Hanbury-Brown–Twiss coincidence accumulation and the pulsed
//! `g²` estimator.
//!
//! `n₁`, `n₂` are per-bin click totals summed over repetitions; `n_c(b₁,b₂)`
//! counts, per repetition, every (channel-1 click in `b₁`, channel-2 click
//! in `b₂`) pair — cross-channel only, all pairs. The estimator is
//! `g²(b₁,b₂) = R·n_c(b₁,b₂)/(n₁(b₁)·n₂(b₂))` with `R` the repetition
//! count; the `R` factor makes statistically independent channels read 1.
//! Bins with an empty denominator are NaN, never silently 0 or 1.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::jump::TimeTagRecord;

#[derive(Clone, Debug, PartialEq)]
pub enum HbtError {
    InvalidSpec,
    BadChannel { repetition: u64, channel: u8 },
    SpecMismatch,
}

impl fmt::Display for HbtError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HbtError::InvalidSpec => write!(f, "binning spec is invalid"),
            HbtError::BadChannel { repetition, channel } => {
                write!(f, "unknown channel {channel} in repetition {repetition}")
            }
            HbtError::SpecMismatch => write!(f, "correlation maps have different binning specs"),
        }
    }
}

/// Analysis window and bin widths. The minimum bin used in practice is
/// 1 ns; the diagonal `g²(t,t)` is coarsened over `integration_bins` bins
/// (2 ns by default).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinningSpec {
    pub bin_ns: f64,
    pub t_start_ns: f64,
    pub t_end_ns: f64,
    pub integration_bins: usize,
}

impl Default for BinningSpec {
    fn default() -> Self {
        Self {
            bin_ns: 1.0,
            t_start_ns: 0.0,
            t_end_ns: 100.0,
            integration_bins: 2,
        }
    }
}

impl BinningSpec {
    pub fn validate(&self) -> Result<(), HbtError> {
        if !(self.bin_ns > 0.0) || self.t_end_ns <= self.t_start_ns || self.integration_bins < 1 {
            return Err(HbtError::InvalidSpec);
        }
        let window = self.t_end_ns - self.t_start_ns;
        let n = libm::round(window / self.bin_ns);
        if n < 1.0 || (n * self.bin_ns - window).abs() > 1e-6 * self.bin_ns {
            return Err(HbtError::InvalidSpec);
        }
        if self.integration_bins as f64 * self.bin_ns > window + 1e-9 {
            return Err(HbtError::InvalidSpec);
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        libm::round((self.t_end_ns - self.t_start_ns) / self.bin_ns) as usize
    }

    /// Bin index of a click, or `None` outside the window.
    pub fn bin_of(&self, t_ns: f64) -> Option<usize> {
        if t_ns < self.t_start_ns || t_ns >= self.t_end_ns {
            return None;
        }
        let idx = libm::floor((t_ns - self.t_start_ns) / self.bin_ns) as usize;
        Some(idx.min(self.n_bins() - 1))
    }

    /// Center time of bin `b`.
    pub fn bin_center(&self, b: usize) -> f64 {
        self.t_start_ns + (b as f64 + 0.5) * self.bin_ns
    }
}

/// Raw coincidence counts; a commutative-monoid value under [`merge`].
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMap {
    pub spec: BinningSpec,
    /// Per-bin channel-1 click totals over all repetitions.
    pub n1: Vec<u64>,
    /// Per-bin channel-2 click totals over all repetitions.
    pub n2: Vec<u64>,
    /// Cross-channel pair counts, row-major `nc[b1 * n_bins + b2]`.
    pub nc: Vec<u64>,
    pub n_repetitions: u64,
    /// `Σ_r n1_r·n2_r` over repetitions (equals `Σ nc`); for the sum rule.
    pub pair_sum: u64,
    /// `Σ_r (n1_r·n2_r)²`, for the sum-rule variance estimate.
    pub pair_sqsum: u128,
}

impl CorrelationMap {
    pub fn empty(spec: BinningSpec) -> Result<Self, HbtError> {
        spec.validate()?;
        let n = spec.n_bins();
        Ok(Self {
            spec,
            n1: vec![0; n],
            n2: vec![0; n],
            nc: vec![0; n * n],
            n_repetitions: 0,
            pair_sum: 0,
            pair_sqsum: 0,
        })
    }

    pub fn nc_at(&self, b1: usize, b2: usize) -> u64 {
        self.nc[b1 * self.spec.n_bins() + b2]
    }

    pub fn total_nc(&self) -> u64 {
        self.nc.iter().sum()
    }

    fn add_repetition(&mut self, bins1: &[usize], bins2: &[usize]) {
        let n = self.spec.n_bins();
        for &b in bins1 {
            self.n1[b] += 1;
        }
        for &b in bins2 {
            self.n2[b] += 1;
        }
        for &b1 in bins1 {
            for &b2 in bins2 {
                self.nc[b1 * n + b2] += 1;
            }
        }
        let pairs = (bins1.len() * bins2.len()) as u64;
        self.pair_sum += pairs;
        self.pair_sqsum += u128::from(pairs) * u128::from(pairs);
    }
}

/// Accumulate counts from records grouped by repetition (record order
/// within a repetition does not matter). `n_repetitions` overrides the
/// inferred `max repetition id + 1`; pass it whenever trailing repetitions
/// may have produced no clicks.
pub fn accumulate(
    records: &[TimeTagRecord],
    spec: &BinningSpec,
    n_repetitions: Option<u64>,
) -> Result<CorrelationMap, HbtError> {
    let mut map = CorrelationMap::empty(*spec)?;
    let mut bins1: Vec<usize> = Vec::new();
    let mut bins2: Vec<usize> = Vec::new();
    let mut current_rep: Option<u64> = None;
    let mut max_rep = 0u64;

    let flush = |map: &mut CorrelationMap, bins1: &mut Vec<usize>, bins2: &mut Vec<usize>| {
        if !bins1.is_empty() || !bins2.is_empty() {
            map.add_repetition(bins1, bins2);
            bins1.clear();
            bins2.clear();
        }
    };

    for rec in records {
        if current_rep != Some(rec.repetition) {
            flush(&mut map, &mut bins1, &mut bins2);
            current_rep = Some(rec.repetition);
        }
        max_rep = max_rep.max(rec.repetition);
        let Some(bin) = spec.bin_of(rec.time_ns) else {
            continue;
        };
        match rec.channel {
            1 => bins1.push(bin),
            2 => bins2.push(bin),
            channel => {
                return Err(HbtError::BadChannel {
                    repetition: rec.repetition,
                    channel,
                })
            }
        }
    }
    flush(&mut map, &mut bins1, &mut bins2);

    map.n_repetitions = n_repetitions.unwrap_or(if records.is_empty() { 0 } else { max_rep + 1 });
    Ok(map)
}

/// Elementwise merge of two maps built over disjoint repetition shards.
pub fn merge(a: &CorrelationMap, b: &CorrelationMap) -> Result<CorrelationMap, HbtError> {
    if a.spec != b.spec {
        return Err(HbtError::SpecMismatch);
    }
    let mut out = a.clone();
    for (x, y) in out.n1.iter_mut().zip(b.n1.iter()) {
        *x += y;
    }
    for (x, y) in out.n2.iter_mut().zip(b.n2.iter()) {
        *x += y;
    }
    for (x, y) in out.nc.iter_mut().zip(b.nc.iter()) {
        *x += y;
    }
    out.n_repetitions += b.n_repetitions;
    out.pair_sum += b.pair_sum;
    out.pair_sqsum += b.pair_sqsum;
    Ok(out)
}

/// Sum counts over `factor`-wide blocks along both axes. Trailing bins that
/// do not fill a block are dropped.
pub fn coarsen(map: &CorrelationMap, factor: usize) -> Result<CorrelationMap, HbtError> {
    if factor < 1 {
        return Err(HbtError::InvalidSpec);
    }
    let n_old = map.spec.n_bins();
    let n_new = n_old / factor;
    if n_new < 1 {
        return Err(HbtError::InvalidSpec);
    }
    let spec = BinningSpec {
        bin_ns: map.spec.bin_ns * factor as f64,
        t_start_ns: map.spec.t_start_ns,
        t_end_ns: map.spec.t_start_ns + map.spec.bin_ns * (n_new * factor) as f64,
        integration_bins: 1,
    };
    let mut out = CorrelationMap::empty(spec)?;
    for b in 0..n_old {
        if b / factor >= n_new {
            continue;
        }
        out.n1[b / factor] += map.n1[b];
        out.n2[b / factor] += map.n2[b];
    }
    for b1 in 0..n_old {
        for b2 in 0..n_old {
            let (c1, c2) = (b1 / factor, b2 / factor);
            if c1 < n_new && c2 < n_new {
                out.nc[c1 * n_new + c2] += map.nc[b1 * n_old + b2];
            }
        }
    }
    out.n_repetitions = map.n_repetitions;
    out.pair_sum = map.pair_sum;
    out.pair_sqsum = map.pair_sqsum;
    Ok(out)
}

/// `g²` matrix with per-entry standard errors from uncorrelated Poisson
/// propagation. Undefined entries (empty denominator) are NaN.
#[derive(Clone, Debug)]
pub struct G2Map {
    pub spec: BinningSpec,
    pub g2: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl G2Map {
    pub fn at(&self, b1: usize, b2: usize) -> (f64, f64) {
        let idx = b1 * self.spec.n_bins() + b2;
        (self.g2[idx], self.sigma[idx])
    }
}

pub fn estimate_g2(map: &CorrelationMap) -> G2Map {
    let n = map.spec.n_bins();
    let r = map.n_repetitions as f64;
    let mut g2 = vec![f64::NAN; n * n];
    let mut sigma = vec![f64::NAN; n * n];
    for b1 in 0..n {
        for b2 in 0..n {
            let denom = map.n1[b1] as f64 * map.n2[b2] as f64;
            if denom == 0.0 || r == 0.0 {
                continue;
            }
            let idx = b1 * n + b2;
            let nc = map.nc[idx] as f64;
            let value = r * nc / denom;
            g2[idx] = value;
            sigma[idx] = if nc > 0.0 {
                value
                    * libm::sqrt(1.0 / nc + 1.0 / map.n1[b1] as f64 + 1.0 / map.n2[b2] as f64)
            } else {
                // Zero observed coincidences: quote the one-count scale.
                r / denom
            };
        }
    }
    G2Map {
        spec: map.spec,
        g2,
        sigma,
    }
}

/// One coarsened diagonal sample of `g²(t,t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagPoint {
    /// Block center time.
    pub t_ns: f64,
    /// Block half-width (the x-axis uncertainty convention we report).
    pub half_width_ns: f64,
    pub g2: f64,
    pub sigma: f64,
}

/// Diagonal `g²(t,t)`, coarsened over `spec.integration_bins`-wide blocks
/// by summing counts before forming the ratio (sum-then-divide).
pub fn diagonal_g2(map: &CorrelationMap) -> Result<Vec<DiagPoint>, HbtError> {
    let coarse = coarsen(map, map.spec.integration_bins)?;
    let est = estimate_g2(&coarse);
    let n = coarse.spec.n_bins();
    Ok((0..n)
        .map(|b| {
            let (g2, sigma) = est.at(b, b);
            DiagPoint {
                t_ns: coarse.spec.bin_center(b),
                half_width_ns: coarse.spec.bin_ns / 2.0,
                g2,
                sigma,
            }
        })
        .collect())
}

/// Outcome of the photon-number sum-rule diagnostic.
///
/// For datasets where every repetition emits the same photon number the
/// count-weighted sum `Σ n₁n₂ g² = R·Σ n_c` equals `Σ n₁·Σ n₂` up to the
/// exact `(N_ph−1)/N_ph` combinatorial factor, which is what forces
/// anti-correlations to accompany bunching. With a shot-to-shot varying
/// photon number the identity has no reason to hold.
#[derive(Clone, Copy, Debug)]
pub struct SumRuleReport {
    /// `Σ n₁n₂ g² = R·Σ n_c`.
    pub lhs: f64,
    /// `Σ n₁ · Σ n₂`.
    pub rhs: f64,
    /// `lhs/rhs − 1`.
    pub rel_dev: f64,
    /// Estimated relative statistical error on `rel_dev`.
    pub sigma_rel: f64,
    /// The fixed per-repetition photon number, when known.
    pub fixed_nph: Option<u32>,
    /// `−1/N_ph`, the deviation expected for a fixed photon number.
    pub expected_dev: Option<f64>,
    /// Whether `rel_dev` is consistent with `expected_dev` (None when the
    /// fixed-photon-number flag is absent: the identity is only valid when
    /// `N_ph` is the same for each repetition, so we can only warn).
    pub consistent: Option<bool>,
}

pub fn sum_rule_check(map: &CorrelationMap, fixed_nph: Option<u32>) -> SumRuleReport {
    let r = map.n_repetitions as f64;
    let total1: u64 = map.n1.iter().sum();
    let total2: u64 = map.n2.iter().sum();
    let pair_sum = map.pair_sum as f64;
    let lhs = r * pair_sum;
    let rhs = total1 as f64 * total2 as f64;
    let rel_dev = if rhs > 0.0 { lhs / rhs - 1.0 } else { f64::NAN };

    // Sample variance of the per-repetition pair count drives the
    // fluctuation of lhs.
    let sigma_rel = if r > 1.0 && pair_sum > 0.0 {
        let mean = pair_sum / r;
        let var = (map.pair_sqsum as f64 / r - mean * mean).max(0.0) * r / (r - 1.0);
        libm::sqrt(var * r) / pair_sum
    } else {
        f64::NAN
    };

    let expected_dev = fixed_nph.filter(|&n| n > 0).map(|n| -1.0 / f64::from(n));
    let consistent = match expected_dev {
        Some(expected) if rel_dev.is_finite() && sigma_rel.is_finite() => {
            Some((rel_dev - expected).abs() <= 6.0 * sigma_rel + 1e-9)
        }
        _ => None,
    };

    SumRuleReport {
        lhs,
        rhs,
        rel_dev,
        sigma_rel,
        fixed_nph,
        expected_dev,
        consistent,
    }
}
