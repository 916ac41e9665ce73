//! Speaker-disjoint train/valid/test assignment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::record::{CorpusManifest, Split};

/// Assigns every record to train/valid/test at speaker granularity.
///
/// Speakers are shuffled deterministically by `seed` and partitioned so the
/// speaker counts approximate `ratios` (train, valid, test); valid and test
/// are guaranteed at least one speaker each, which is why at least three
/// speakers are required.
pub fn split_corpus(
    manifest: &CorpusManifest,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<CorpusManifest> {
    let (r_train, r_valid, r_test) = ratios;
    let arr = [r_train, r_valid, r_test];
    if arr.iter().any(|&r| r <= 0.0) || (arr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::BadRatios(arr));
    }
    let mut speakers = manifest.speakers();
    let n = speakers.len();
    if n < 3 {
        return Err(Error::TooFewSpeakers(n, 3));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    speakers.shuffle(&mut rng);

    let n_valid = ((r_valid * n as f64).round() as usize).max(1);
    let n_test = ((r_test * n as f64).round() as usize).max(1);
    let n_train = n
        .checked_sub(n_valid + n_test)
        .filter(|&t| t >= 1)
        .ok_or(Error::TooFewSpeakers(n, n_valid + n_test + 1))?;

    let assignment = |speaker: &str| -> Split {
        let pos = speakers.iter().position(|s| s == speaker).expect("known speaker");
        if pos < n_train {
            Split::Train
        } else if pos < n_train + n_valid {
            Split::Valid
        } else {
            Split::Test
        }
    };

    let mut out = manifest.clone();
    for record in &mut out.records {
        record.split = assignment(&record.speaker_id);
    }
    Ok(out)
}
