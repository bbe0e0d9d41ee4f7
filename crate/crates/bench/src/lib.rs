//! Shared model builders for the benchmark suite.

use isac_regions::prob::{Alphabet, CondDist, FactoredModel, Variant};

/// All-binary general-inner model with smoothly varying factor tables,
/// deterministic in `seed`.
pub fn reference_general_inner(seed: u64) -> FactoredModel {
    let mut state = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).max(1);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let alphabets = Variant::GeneralInner
        .variables()
        .iter()
        .map(|r| Alphabet::binary(*r))
        .collect();
    let factors = Variant::GeneralInner
        .signature()
        .iter()
        .map(|sig| {
            let rows = 1usize << sig.givens.len();
            let cols = 1usize << sig.targets.len();
            let table = (0..rows)
                .map(|_| {
                    let mut row: Vec<f64> = (0..cols).map(|_| next() + 0.05).collect();
                    let sum: f64 = row.iter().sum();
                    row.iter_mut().for_each(|p| *p /= sum);
                    row
                })
                .collect();
            CondDist::new(sig.targets, sig.givens, table)
        })
        .collect();
    FactoredModel::new(Variant::GeneralInner, alphabets, factors)
}
