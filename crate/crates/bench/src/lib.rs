//! Fixtures shared by the benchmarks.

use idm_core::{Counts, IdmConfig, JointCounts};

/// Deterministic counts of length `d` with total close to `n`.
pub fn counts(d: usize, n: u64) -> Counts {
    let per = n / d as u64;
    Counts::new((0..d as u64).map(|k| per + k % 3).collect()).expect("d > 0")
}

/// A `rows x cols` table with mildly dependent cells.
pub fn table(rows: usize, cols: usize) -> JointCounts {
    JointCounts::from_rows(
        (0..rows)
            .map(|i| (0..cols).map(|j| 1 + ((i * 7 + j * 3) % 5) as u64 + u64::from(i == j) * 4).collect())
            .collect(),
    )
    .expect("non-empty rectangular table")
}

pub fn config() -> IdmConfig {
    IdmConfig::new(1.0).expect("s = 1 is valid")
}
