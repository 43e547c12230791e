use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::PosteriorDraws;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// `m` completed copies of `data`. Copy `k` fills every missing record from the missing-data law
/// of one joint draw; the draws are spread evenly over the retained set.
pub fn impute(data: &Dataset, draws: &PosteriorDraws, m: usize, seed: u64) -> Result<Vec<Dataset>> {
    if !data.n_missing_known() || data.n_missing() == 0 {
        return Err(Error::Data("no missing records to impute".into()));
    }
    if m > draws.len() {
        return Err(Error::InvalidArgument(format!("{m} imputations requested from {} draws", draws.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|k| {
            let index = ((k as f64 + 0.5) * draws.len() as f64 / m as f64) as usize;
            let missing = draws.model(index)?.missing_model()?;
            let fill: Vec<f64> = (0..data.n_missing()).map(|_| missing.draw(&mut rng)).collect();
            data.completed(&fill)
        })
        .collect()
}
