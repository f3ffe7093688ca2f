use crate::bench::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::Real;

/// Draws a fraction of `ds` without replacement and shuffles it.
///
/// Stratified selection takes `⌊fraction · N_c⌋` samples of every class `c`;
/// otherwise `⌊fraction · N⌋` samples are drawn from the whole set.
pub fn subset(ds: &Dataset, fraction: Real, seed: u64, stratified: bool) -> Result<Dataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("data fraction must be in (0, 1], got {fraction}")));
    }
    let mut rng = Rng::new(seed);
    let mut chosen = Vec::new();
    if stratified {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.class_count];
        for (i, &l) in ds.labels.iter().enumerate() {
            by_class[l].push(i);
        }
        for (class, members) in by_class.iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            let take = (fraction * members.len() as Real).floor() as usize;
            if take == 0 {
                return Err(Error::Config(format!(
                    "fraction {fraction} leaves class {class} ({} samples) empty",
                    members.len()
                )));
            }
            chosen.extend(rng.sample_indices(members.len(), take).into_iter().map(|j| members[j]));
        }
    } else {
        let take = (fraction * ds.len() as Real).floor() as usize;
        if take == 0 {
            return Err(Error::Config(format!("fraction {fraction} selects no samples")));
        }
        chosen = rng.sample_indices(ds.len(), take);
    }
    rng.shuffle(&mut chosen);
    Ok(ds.select(&chosen))
}
