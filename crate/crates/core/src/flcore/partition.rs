use rand::seq::SliceRandom;

use super::{DatasetShard, FlError, Sample};
use crate::seed::rng_from_seed;
use crate::topology::UavId;

/// Shuffle, then split into contiguous shards whose sizes differ by at most
/// one (the first `n mod U` shards get the extra sample).
pub fn partition_iid(
    dataset: &[Sample],
    uav_ids: &[UavId],
    seed: u64,
) -> Result<Vec<DatasetShard>, FlError> {
    let n_uavs = uav_ids.len();
    if n_uavs == 0 || dataset.len() < n_uavs {
        return Err(FlError::DatasetTooSmall {
            samples: dataset.len(),
            needed: n_uavs.max(1),
        });
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let base = dataset.len() / n_uavs;
    let extra = dataset.len() % n_uavs;
    let mut start = 0;
    Ok(uav_ids
        .iter()
        .enumerate()
        .map(|(i, &owner)| {
            let len = base + usize::from(i < extra);
            let samples = order[start..start + len]
                .iter()
                .map(|&j| dataset[j].clone())
                .collect();
            start += len;
            DatasetShard { owner, samples }
        })
        .collect())
}

/// Label-sorted shard deal: sort by label (stable), cut into
/// `U * shards_per_uav` near-equal contiguous label-shards, and hand each UAV
/// `shards_per_uav` of them through a seeded permutation.
///
/// A UAV sees at most `shards_per_uav` labels when every label-shard falls
/// inside a single class, e.g. balanced classes whose size is a multiple of
/// the shard size.
pub fn partition_noniid(
    dataset: &[Sample],
    uav_ids: &[UavId],
    shards_per_uav: usize,
    seed: u64,
) -> Result<Vec<DatasetShard>, FlError> {
    let n_shards = uav_ids.len() * shards_per_uav;
    if n_shards == 0 || dataset.len() < n_shards {
        return Err(FlError::DatasetTooSmall {
            samples: dataset.len(),
            needed: n_shards.max(1),
        });
    }
    let mut by_label: Vec<usize> = (0..dataset.len()).collect();
    by_label.sort_by_key(|&i| dataset[i].label);
    let bounds: Vec<usize> = (0..=n_shards).map(|s| s * dataset.len() / n_shards).collect();
    let mut deal: Vec<usize> = (0..n_shards).collect();
    deal.shuffle(&mut rng_from_seed(seed));
    Ok(uav_ids
        .iter()
        .enumerate()
        .map(|(i, &owner)| {
            let samples = deal[i * shards_per_uav..(i + 1) * shards_per_uav]
                .iter()
                .flat_map(|&s| by_label[bounds[s]..bounds[s + 1]].iter())
                .map(|&j| dataset[j].clone())
                .collect();
            DatasetShard { owner, samples }
        })
        .collect())
}
