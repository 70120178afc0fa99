//! Exhaustive-scan k-nearest-neighbors with vote-ratio probabilities.

use std::cmp::Ordering;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub reference: Array2<f64>,
    pub labels: Vec<u8>,
    pub k: usize,
}

pub fn fit_knn(x: ArrayView2<f64>, labels: &[u8], k: usize) -> Result<KnnModel> {
    if labels.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: labels.len(),
        });
    }
    if k == 0 || k > x.nrows() {
        return Err(Error::Validation(format!("k = {k} must lie in 1..={}", x.nrows())));
    }
    Ok(KnnModel {
        reference: x.as_standard_layout().to_owned(),
        labels: labels.to_vec(),
        k,
    })
}

fn squared_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

impl KnnModel {
    /// Indices of the `k` nearest reference rows, nearest first. Equal
    /// distances are ordered by lower row index.
    pub fn neighbors(&self, x: ArrayView1<f64>) -> Vec<usize> {
        let mut dist: Vec<(f64, usize)> = self
            .reference
            .outer_iter()
            .enumerate()
            .map(|(i, r)| (squared_distance(r, x), i))
            .collect();
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, by_distance_then_index);
            dist.truncate(self.k);
        }
        dist.sort_unstable_by(by_distance_then_index);
        dist.into_iter().map(|(_, i)| i).collect()
    }

    /// `[votes₀ / k, votes₁ / k]`.
    pub fn predict_proba(&self, x: ArrayView1<f64>) -> [f64; 2] {
        let ones = self.neighbors(x).into_iter().filter(|&i| self.labels[i] == 1).count();
        let p1 = ones as f64 / self.k as f64;
        [(self.k - ones) as f64 / self.k as f64, p1]
    }

    pub fn predict_proba_batch(&self, x: ArrayView2<f64>) -> Vec<[f64; 2]> {
        x.axis_iter(Axis(0))
            .into_par_iter()
            .map(|row| self.predict_proba(row))
            .collect()
    }
}
