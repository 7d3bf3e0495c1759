//! Random forest over the entropy-split trees.
//!
//! Each tree draws its own RNG stream from the master seed and tree index,
//! so fitting is reproducible regardless of how trees are scheduled across
//! workers.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, Matrix, TreeBuilder};
use crate::seeding::derive_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: u32,
    pub max_depth: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub params: ForestParams,
    pub n_classes: usize,
    pub trees: Vec<DecisionTree>,
    /// Mean weighted information gain per feature, normalized to sum 1
    /// (all zeros when no split ever fired).
    pub importances: Vec<f64>,
}

impl RandomForest {
    /// Fits `params.n_estimators` trees, each on a bootstrap sample drawn
    /// from `rows` (indices into the matrix). `seed` fixes every stream;
    /// feature candidates per split follow the usual `ceil(sqrt(p))` rule.
    pub fn fit(
        cols: &[Vec<f64>],
        labels: &[u32],
        n_classes: usize,
        rows: &[u32],
        params: ForestParams,
        seed: u64,
    ) -> RandomForest {
        let n = rows.len();
        let p = cols.len();
        let m_try = (p as f64).sqrt().ceil() as usize;
        let matrix = Matrix { cols, labels };
        let fits: Vec<_> = (0..params.n_estimators)
            .into_par_iter()
            .map(|t| {
                let mut rng = derive_rng(seed, "tree", &[t as u64]);
                let samples: Vec<u32> = (0..n).map(|_| rows[rng.gen_range(0..n)]).collect();
                let mut builder = TreeBuilder::new(n_classes);
                builder.fit(&matrix, samples, params.max_depth, m_try, 2, &mut rng)
            })
            .collect();

        let mut importances = vec![0.0; p];
        let mut trees = Vec::with_capacity(fits.len());
        for f in fits {
            for (i, g) in f.gains.iter().enumerate() {
                importances[i] += g;
            }
            trees.push(f.tree);
        }
        let total: f64 = importances.iter().sum();
        if total > 0.0 {
            for v in &mut importances {
                *v /= total;
            }
        }
        RandomForest {
            params,
            n_classes,
            trees,
            importances,
        }
    }

    /// Tree-vote distribution over classes; sums to 1.
    pub fn vote(&self, row: &[f64]) -> Vec<f64> {
        let mut counts = vec![0u32; self.n_classes];
        for t in &self.trees {
            counts[t.predict(row) as usize] += 1;
        }
        let total = self.trees.len() as f64;
        counts.into_iter().map(|c| c as f64 / total).collect()
    }

    /// Argmax class of the vote distribution; ties go to the lowest class
    /// index.
    pub fn predict(&self, row: &[f64]) -> u32 {
        let votes = self.vote(row);
        let mut best = 0usize;
        for (i, &v) in votes.iter().enumerate().skip(1) {
            if v > votes[best] {
                best = i;
            }
        }
        best as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable(n_classes: usize, per_class: usize) -> (Vec<Vec<f64>>, Vec<u32>) {
        let mut col = Vec::new();
        let mut labels = Vec::new();
        for c in 0..n_classes {
            for j in 0..per_class {
                col.push(c as f64 + j as f64 * 1e-3);
                labels.push(c as u32);
            }
        }
        (vec![col], labels)
    }

    #[test]
    fn learns_separable_data() {
        let (cols, labels) = separable(5, 10);
        let rows: Vec<u32> = (0..labels.len() as u32).collect();
        let f = RandomForest::fit(
            &cols,
            &labels,
            5,
            &rows,
            ForestParams {
                n_estimators: 30,
                max_depth: 10,
            },
            42,
        );
        for (i, &l) in labels.iter().enumerate() {
            assert_eq!(f.predict(&[cols[0][i]]), l);
        }
    }

    #[test]
    fn votes_sum_to_one() {
        let (cols, labels) = separable(3, 8);
        let rows: Vec<u32> = (0..labels.len() as u32).collect();
        let f = RandomForest::fit(
            &cols,
            &labels,
            3,
            &rows,
            ForestParams {
                n_estimators: 17,
                max_depth: 6,
            },
            1,
        );
        let v = f.vote(&[1.5]);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn refit_is_bit_identical() {
        let (cols, labels) = separable(4, 12);
        let params = ForestParams {
            n_estimators: 25,
            max_depth: 8,
        };
        let rows: Vec<u32> = (0..labels.len() as u32).collect();
        let a = RandomForest::fit(&cols, &labels, 4, &rows, params, 7);
        let b = RandomForest::fit(&cols, &labels, 4, &rows, params, 7);
        assert_eq!(a, b);
    }

    #[test]
    fn importances_normalized() {
        let (mut cols, labels) = separable(4, 12);
        cols.push(vec![0.0; labels.len()]); // constant channel
        let rows: Vec<u32> = (0..labels.len() as u32).collect();
        let f = RandomForest::fit(
            &cols,
            &labels,
            4,
            &rows,
            ForestParams {
                n_estimators: 20,
                max_depth: 8,
            },
            3,
        );
        assert!((f.importances.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(f.importances[1], 0.0);
        assert!(f.importances.iter().all(|&v| v >= 0.0));
    }
}
