//! Brownian path bundles on a uniform time grid and their pairwise
//! interaction energies.

mod energy;

pub use energy::{interaction_energy, pairwise_energy_matrix, EnergyPlan, QuadratureMode, QuadratureRule};

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// SplitMix64 finalizer; derives the seed of work item `index` from a run seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream for item `stream` of a run; streams never overlap.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub k: usize,
    pub d: usize,
    pub t: f64,
    pub steps: usize,
    pub seed: u64,
    pub start: Vec<f64>,
    /// `k × (steps+1) × d`, row-major.
    pub values: Vec<f64>,
}

impl PathBundle {
    pub fn path(&self, i: usize) -> &[f64] {
        let len = (self.steps + 1) * self.d;
        &self.values[i * len..(i + 1) * len]
    }

    pub fn position(&self, i: usize, step: usize) -> &[f64] {
        let p = self.path(i);
        &p[step * self.d..(step + 1) * self.d]
    }

    pub fn endpoint(&self, i: usize) -> &[f64] {
        self.position(i, self.steps)
    }

    pub fn dt(&self) -> f64 {
        self.t / self.steps as f64
    }

    pub fn write_csv<W: Write>(&self, w: W, i: usize) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["step".to_string()];
        header.extend((0..self.d).map(|c| format!("x{c}")));
        wr.write_record(&header)?;
        for s in 0..=self.steps {
            let mut row = vec![s.to_string()];
            row.extend(self.position(i, s).iter().map(|v| v.to_string()));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `k` independent d-dimensional Brownian motions from `start`; path `i`
/// draws from stream `i` of the ChaCha8 generator seeded with `seed`.
pub fn sample_paths(k: usize, d: usize, t: f64, steps: usize, seed: u64, start: &[f64]) -> Result<PathBundle> {
    if steps < 2 {
        return Err(Error::OutOfRange(format!("steps = {steps} must be at least 2")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::OutOfRange(format!("horizon t = {t} must be positive")));
    }
    if start.len() != d || d == 0 {
        return Err(Error::OutOfRange(format!("start point has {} coordinates, expected d = {d}", start.len())));
    }
    let sd = (t / steps as f64).sqrt();
    let mut values = Vec::with_capacity(k * (steps + 1) * d);
    for i in 0..k {
        let mut rng = rng_for(seed, i as u64);
        values.extend_from_slice(start);
        let mut cur = start.to_vec();
        for _ in 0..steps {
            for c in cur.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *c += sd * z;
            }
            values.extend_from_slice(&cur);
        }
    }
    Ok(PathBundle { k, d, t, steps, seed, start: start.to_vec(), values })
}
