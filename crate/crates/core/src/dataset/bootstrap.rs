use rand::Rng;

use super::DatasetError;
use crate::seed::stream_rng;

/// One with-replacement resample. Indices refer to the source slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BootstrapReplica {
    pub index: usize,
    /// Resampled indices, same length as the source.
    pub calibration: Vec<usize>,
    /// Out-of-bag indices in ascending order.
    pub validation: Vec<usize>,
}

impl BootstrapReplica {
    pub fn oob_fraction(&self) -> f64 {
        self.validation.len() as f64 / self.calibration.len() as f64
    }
}

/// Resamples whole items. Replica `i` draws from its own stream derived
/// from `(seed, i)`, so results do not depend on evaluation order.
pub fn bootstrap_split<T>(items: &[T], n_replicas: usize, seed: u64) -> Result<Vec<BootstrapReplica>, DatasetError> {
    if items.is_empty() {
        return Err(DatasetError::Input("bootstrap of an empty sample set".into()));
    }
    if n_replicas == 0 {
        return Err(DatasetError::Input("replica count must be >= 1".into()));
    }
    let n = items.len();
    Ok((0..n_replicas)
        .map(|index| {
            let mut rng = stream_rng(seed, index as u64);
            let calibration: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let mut drawn = vec![false; n];
            for &i in &calibration {
                drawn[i] = true;
            }
            let validation = (0..n).filter(|&i| !drawn[i]).collect();
            BootstrapReplica { index, calibration, validation }
        })
        .collect())
}
