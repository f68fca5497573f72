use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, MemeRecord, Propaganda, Split};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl SplitRatios {
    pub const DEFAULT: SplitRatios = SplitRatios { train: 0.7, dev: 0.1, test: 0.2 };

    pub fn new(train: f64, dev: f64, test: f64) -> Result<Self, DatasetError> {
        let ratios = SplitRatios { train, dev, test };
        ratios.validate()?;
        Ok(ratios)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.train, self.dev, self.test]
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let values = self.as_array();
        if values.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(DatasetError::Argument(format!("split ratios must be positive, got {values:?}")));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(DatasetError::Argument(format!("split ratios must sum to 1, got {sum}")));
        }
        Ok(())
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios::DEFAULT
    }
}

/// Apportions `n` items over `ratios` by largest remainder. Ties on the
/// fractional part go to the earlier split.
pub fn largest_remainder(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let quotas = ratios.map(|r| r * n as f64);
    let mut sizes = quotas.map(|q| q.floor() as usize);
    let assigned: usize = sizes.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Assigns every record to train/dev/test, stratified on the propaganda
/// label. The output keeps input order; only `split` changes.
pub fn stratified_split(
    records: &[MemeRecord],
    ratios: SplitRatios,
    seed: u64,
) -> Result<Vec<MemeRecord>, DatasetError> {
    ratios.validate()?;
    if records.is_empty() {
        return Err(DatasetError::Argument("cannot split an empty record list".into()));
    }
    let mut out = records.to_vec();
    let strata = [Propaganda::Propagandistic, Propaganda::NotPropagandistic];
    for (stratum_idx, stratum) in strata.into_iter().enumerate() {
        let mut members: Vec<usize> =
            records.iter().enumerate().filter(|(_, r)| r.propaganda == stratum).map(|(i, _)| i).collect();
        if members.is_empty() {
            continue;
        }
        let stream_seed = seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stratum_idx as u64 + 1));
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed);
        members.shuffle(&mut rng);
        let sizes = largest_remainder(members.len(), &ratios.as_array());
        let mut cursor = 0;
        for (split, size) in Split::ALL.into_iter().zip(sizes) {
            for &idx in &members[cursor..cursor + size] {
                out[idx].split = Some(split);
            }
            cursor += size;
        }
    }
    Ok(out)
}
