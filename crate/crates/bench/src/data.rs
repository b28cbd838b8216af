//! Synthetic classification data.
//!
//! `k` class centers are drawn from `N(0, SEPARATION²)` on the first
//! `⌈frac·p⌉` (informative) coordinates. Sample `i` has label `i mod k`; its
//! informative coordinates are its class center plus `N(0, 1)` noise and the
//! remaining coordinates are pure `N(0, 1)` noise. Centers and samples come
//! from separate streams.

use idiff::linalg::DenseMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{BenchError, BenchResult};
use crate::rng::{stream, stream_rng};

pub const SEPARATION: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct Classification {
    /// `m × p` features.
    pub x: DenseMatrix,
    pub labels: Vec<usize>,
    pub classes: usize,
    pub informative: usize,
}

impl Classification {
    /// Row-major `m × k` one-hot encoding.
    pub fn one_hot(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.labels.len() * self.classes];
        for (i, &c) in self.labels.iter().enumerate() {
            y[i * self.classes + c] = 1.0;
        }
        y
    }

    pub fn samples(&self) -> usize {
        self.x.rows()
    }

    pub fn features(&self) -> usize {
        self.x.cols()
    }

    /// Rows `range` as a new data set.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        let start = range.start;
        Self {
            x: DenseMatrix::from_fn(range.len(), self.x.cols(), |i, j| self.x[(start + i, j)]),
            labels: self.labels[range].to_vec(),
            classes: self.classes,
            informative: self.informative,
        }
    }
}

pub fn gen_classification(
    seed: u64,
    m: usize,
    p: usize,
    k: usize,
    informative_frac: f64,
) -> BenchResult<Classification> {
    if !(informative_frac > 0.0 && informative_frac <= 1.0) {
        return Err(BenchError::Config(format!(
            "informative fraction must lie in (0, 1], got {informative_frac}"
        )));
    }
    if m == 0 || p == 0 || k == 0 {
        return Err(BenchError::Config(format!(
            "dimensions must be positive, got m={m}, p={p}, k={k}"
        )));
    }
    let informative = ((informative_frac * p as f64).ceil() as usize).clamp(1, p);
    let mut centers_rng = stream_rng(seed, stream::CLASS_CENTERS);
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            (0..informative)
                .map(|_| SEPARATION * centers_rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let mut rng = stream_rng(seed, stream::SAMPLES);
    let labels: Vec<usize> = (0..m).map(|i| i % k).collect();
    let mut data = vec![0.0; m * p];
    for (i, &c) in labels.iter().enumerate() {
        for j in 0..p {
            let noise: f64 = rng.sample(StandardNormal);
            data[i * p + j] = noise + if j < informative { centers[c][j] } else { 0.0 };
        }
    }
    let x = DenseMatrix::from_fn(m, p, |i, j| data[i * p + j]);
    Ok(Classification {
        x,
        labels,
        classes: k,
        informative,
    })
}
