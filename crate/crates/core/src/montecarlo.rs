//! Direct simulation of the ±1 hopping walk.
//!
//! Walker `i` draws from its own PCG-XSL-RR 128/64 generator (`Pcg64`),
//! seeded through `SeedableRng::seed_from_u64` with the key
//! `mix(seed ^ mix(i))`, where `mix` is the SplitMix64 finaliser
//! (`z ^= z >> 30; z *= 0xbf58476d1ce4e5b9; z ^= z >> 27; z *= 0x94d049bb133111eb; z ^= z >> 31`
//! applied to `z + 0x9e3779b97f4a7c15`). Each hop consumes one 64-bit draw and
//! moves right when its lowest bit is 1. Because a walker's path depends only
//! on `(seed, i)`, the histogram is the same for any thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::transport::site_probability;

/// Default bound on the number of lattice sites a count table may hold.
pub const DEFAULT_MAX_SITES: usize = 1 << 24;

/// Sites with fewer expected walkers are pooled for the chi-square test
/// and get no z-score.
pub const MIN_EXPECTED: f64 = 10.0;

const BLOCK: u64 = 1 << 14;

/// SplitMix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of walker `index`'s private generator.
pub fn walker_key(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// Final position of walker `index` after `steps` hops.
pub fn walk(seed: u64, index: u64, steps: u64) -> i64 {
    let mut rng = Pcg64::seed_from_u64(walker_key(seed, index));
    let mut x = 0i64;
    for _ in 0..steps {
        x += if rng.next_u64() & 1 == 1 { 1 } else { -1 };
    }
    x
}

/// Ensemble end positions of one simulation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McHistogram {
    pub steps: u64,
    pub walkers: u64,
    pub seed: u64,
    counts: BTreeMap<i64, u64>,
}

impl McHistogram {
    /// Build from an explicit table, checking the total and the lattice.
    pub fn from_counts(steps: u64, walkers: u64, seed: u64, mut counts: BTreeMap<i64, u64>) -> Result<Self> {
        let total: u64 = counts.values().sum();
        if total != walkers {
            return Err(Error::InvalidHistogram(format!("counts sum to {total}, expected {walkers}")));
        }
        for &x in counts.keys() {
            if x.unsigned_abs() > steps || !(x.unsigned_abs() + steps).is_multiple_of(2) {
                return Err(Error::InvalidHistogram(format!("site {x} is unreachable in {steps} steps")));
            }
        }
        counts.retain(|_, c| *c > 0);
        Ok(Self { steps, walkers, seed, counts })
    }

    pub fn counts(&self) -> &BTreeMap<i64, u64> {
        &self.counts
    }

    pub fn count(&self, x: i64) -> u64 {
        self.counts.get(&x).copied().unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        let n = self.walkers as f64;
        self.counts.iter().map(|(&x, &c)| x as f64 * c as f64).sum::<f64>() / n
    }

    /// Population variance of the end positions.
    pub fn variance(&self) -> f64 {
        let n = self.walkers as f64;
        let m = self.mean();
        self.counts.iter().map(|(&x, &c)| (x as f64 - m).powi(2) * c as f64).sum::<f64>() / n
    }
}

/// Simulate `walkers` independent walks of `steps` hops.
pub fn simulate(walkers: u64, steps: u64, seed: u64) -> Result<McHistogram> {
    simulate_bounded(walkers, steps, seed, DEFAULT_MAX_SITES)
}

/// [`simulate`] with an explicit bound on the count-table size.
pub fn simulate_bounded(walkers: u64, steps: u64, seed: u64, max_sites: usize) -> Result<McHistogram> {
    if walkers == 0 {
        return Err(Error::Domain { func: "simulate", value: 0.0, expected: "walkers >= 1" });
    }
    let sites = usize::try_from(steps).ok().and_then(|s| s.checked_add(1)).unwrap_or(usize::MAX);
    if sites > max_sites {
        return Err(Error::ResourceLimit { entries: sites, limit: max_sites });
    }
    let blocks = walkers.div_ceil(BLOCK);
    let partial: Vec<Vec<u64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut table = vec![0u64; sites];
            let end = ((b + 1) * BLOCK).min(walkers);
            for i in b * BLOCK..end {
                let x = walk(seed, i, steps);
                table[((x + steps as i64) / 2) as usize] += 1;
            }
            table
        })
        .collect();
    let mut merged = vec![0u64; sites];
    for table in &partial {
        for (m, c) in merged.iter_mut().zip(table) {
            *m += c;
        }
    }
    let counts = merged
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(k, c)| (2 * k as i64 - steps as i64, c))
        .collect();
    McHistogram::from_counts(steps, walkers, seed, counts)
}

/// One site of a histogram comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteComparison {
    pub x: i64,
    pub count: u64,
    pub expected: f64,
    /// Absent when the expected count is below [`MIN_EXPECTED`].
    pub z: Option<f64>,
}

/// Agreement between a simulated histogram and the exact lattice law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramComparison {
    pub max_z: f64,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    pub sites: Vec<SiteComparison>,
}

/// Per-site z-scores and a Pearson chi-square with pooled tails.
///
/// Consecutive sites are merged into a bin until its expected count reaches
/// [`MIN_EXPECTED`]; a short remainder joins the last bin.
pub fn histogram_compare(h: &McHistogram) -> HistogramComparison {
    let n = h.walkers as f64;
    let t = h.steps as i64;
    let sites: Vec<SiteComparison> = (-t..=t)
        .step_by(2)
        .map(|x| {
            let prob = site_probability(x, h.steps);
            let expected = n * prob;
            let count = h.count(x);
            let z = (expected >= MIN_EXPECTED)
                .then(|| (count as f64 - expected) / (n * prob * (1.0 - prob)).sqrt());
            SiteComparison { x, count, expected, z }
        })
        .collect();
    let max_z = sites.iter().filter_map(|s| s.z).fold(0.0, |m: f64, z| m.max(z.abs()));

    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for s in &sites {
        obs += s.count as f64;
        exp += s.expected;
        if exp >= MIN_EXPECTED {
            bins.push((obs, exp));
            (obs, exp) = (0.0, 0.0);
        }
    }
    if exp > 0.0 || obs > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => bins.push((obs, exp)),
        }
    }
    let chi2: f64 = bins.iter().map(|&(o, e)| (o - e).powi(2) / e).sum();
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64).map(|d| d.sf(chi2)).unwrap_or(f64::NAN)
    };
    HistogramComparison { max_z, chi2, dof, p_value, sites }
}

/// CSV table with columns `x,count,expected,z`; `z` is empty where undefined.
pub fn comparison_csv(cmp: &HistogramComparison) -> String {
    let mut out = String::from("x,count,expected,z\n");
    for s in &cmp.sites {
        let z = s.z.map(|z| format!("{z:.16e}")).unwrap_or_default();
        let _ = writeln!(out, "{},{},{:.16e},{}", s.x, s.count, s.expected, z);
    }
    out
}
