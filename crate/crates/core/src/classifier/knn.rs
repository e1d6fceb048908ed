use serde::{Deserialize, Serialize};

use super::{check_dim, ClassifierError, Disease, Scaler};
use crate::scalar::{squared_distance, Scalar};

pub const DEFAULT_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Exemplar<T> {
    /// Standardised with the model's scaler.
    pub features: Vec<T>,
    pub disease: Disease,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct KnnModel<T> {
    pub k: usize,
    pub scaler: Scaler<T>,
    pub exemplars: Vec<Exemplar<T>>,
}

impl<T: Scalar> KnnModel<T> {
    /// Standardises the raw samples and stores them as exemplars, keeping
    /// the caller's order (exemplar index breaks distance ties).
    pub fn fit(samples: &[(Vec<T>, Disease)], k: usize) -> Result<Self, ClassifierError> {
        if samples.is_empty() {
            return Err(ClassifierError::EmptyModel);
        }
        let d = samples[0].0.len();
        for (x, _) in samples {
            check_dim(d, x.len())?;
        }
        if k == 0 || k > samples.len() {
            return Err(ClassifierError::InvalidParameter(format!(
                "k = {k} must lie in 1..={}",
                samples.len()
            )));
        }
        let rows: Vec<Vec<T>> = samples.iter().map(|(x, _)| x.clone()).collect();
        let scaler = Scaler::fit(&rows);
        let exemplars = samples
            .iter()
            .map(|(x, disease)| Exemplar {
                features: scaler.transform(x),
                disease: *disease,
            })
            .collect();
        Ok(Self { k, scaler, exemplars })
    }

    pub fn dim(&self) -> usize {
        self.scaler.dim()
    }

    /// Exemplar indices ordered by distance to `x`, nearest first.
    pub fn neighbours(&self, x: &[T]) -> Result<Vec<(usize, T)>, ClassifierError> {
        if self.exemplars.is_empty() {
            return Err(ClassifierError::EmptyModel);
        }
        check_dim(self.dim(), x.len())?;
        let z = self.scaler.transform(x);
        let mut dists: Vec<(usize, T)> = self
            .exemplars
            .iter()
            .enumerate()
            .map(|(i, e)| (i, squared_distance(&e.features, &z)))
            .collect();
        dists.sort_by(|a, b| a.1.total_cmp_s(&b.1).then(a.0.cmp(&b.0)));
        Ok(dists)
    }

    /// Majority vote among the `k` nearest exemplars. When several labels
    /// share the top vote count, the one whose closest member ranks first
    /// wins, i.e. the single nearest neighbour decides whenever it is part
    /// of the tie.
    pub fn predict(&self, x: &[T]) -> Result<Disease, ClassifierError> {
        let ranked = self.neighbours(x)?;
        let k = self.k.min(ranked.len());
        let mut votes = [0usize; 3];
        let mut first_rank = [usize::MAX; 3];
        for (rank, &(i, _)) in ranked[..k].iter().enumerate() {
            let d = self.exemplars[i].disease.index();
            votes[d] += 1;
            first_rank[d] = first_rank[d].min(rank);
        }
        let best = Disease::ALL
            .into_iter()
            .max_by(|a, b| {
                votes[a.index()]
                    .cmp(&votes[b.index()])
                    .then(first_rank[b.index()].cmp(&first_rank[a.index()]))
            })
            .expect("three labels");
        Ok(best)
    }

    pub(crate) fn validate(&self) -> Result<(), ClassifierError> {
        self.scaler.validate()?;
        if self.exemplars.is_empty() {
            return Err(ClassifierError::EmptyModel);
        }
        if self.k == 0 || self.k > self.exemplars.len() {
            return Err(ClassifierError::MalformedDocument(format!(
                "k = {} outside 1..={}",
                self.k,
                self.exemplars.len()
            )));
        }
        for e in &self.exemplars {
            if e.features.len() != self.dim() || e.features.iter().any(|v| !v.is_finite()) {
                return Err(ClassifierError::MalformedDocument("bad exemplar features".into()));
            }
        }
        Ok(())
    }
}

pub fn knn_predict<T: Scalar>(model: &KnnModel<T>, x: &[T]) -> Result<Disease, ClassifierError> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Disease::*;

    fn model(points: &[(f64, Disease)], k: usize) -> KnnModel<f64> {
        // Identity scaler so distances are easy to reason about.
        KnnModel {
            k,
            scaler: Scaler {
                mean: vec![0.0],
                std: vec![1.0],
            },
            exemplars: points
                .iter()
                .map(|&(x, d)| Exemplar {
                    features: vec![x],
                    disease: d,
                })
                .collect(),
        }
    }

    #[test]
    fn exact_match_k1() {
        let m = model(&[(0.0, Mosaic), (1.0, LeafScald), (2.0, RedStripe)], 1);
        assert_eq!(m.predict(&[1.0]).unwrap(), LeafScald);
    }

    #[test]
    fn majority_wins() {
        let m = model(&[(0.0, LeafScald), (0.1, Mosaic), (0.2, Mosaic), (5.0, RedStripe)], 3);
        assert_eq!(m.predict(&[0.0]).unwrap(), Mosaic);
    }

    #[test]
    fn vote_tie_goes_to_nearest() {
        let m = model(&[(0.0, RedStripe), (1.0, Mosaic), (2.0, Mosaic), (3.0, RedStripe)], 4);
        assert_eq!(m.predict(&[0.4]).unwrap(), RedStripe);
        assert_eq!(m.predict(&[2.6]).unwrap(), RedStripe);
        assert_eq!(m.predict(&[1.4]).unwrap(), Mosaic);
    }

    #[test]
    fn distance_tie_goes_to_lower_index() {
        let m = model(&[(-1.0, Mosaic), (1.0, LeafScald)], 1);
        assert_eq!(m.predict(&[0.0]).unwrap(), Mosaic);
    }

    #[test]
    fn empty_and_bad_k() {
        let mut m = model(&[(0.0, Mosaic)], 1);
        m.exemplars.clear();
        assert_eq!(m.predict(&[0.0]).unwrap_err(), ClassifierError::EmptyModel);
        assert!(KnnModel::<f64>::fit(&[(vec![0.0], Mosaic)], 2).is_err());
        assert_eq!(KnnModel::<f64>::fit(&[], 1).unwrap_err(), ClassifierError::EmptyModel);
    }

    #[test]
    fn fit_standardises() {
        let m = KnnModel::fit(&[(vec![10.0, 1.0], Mosaic), (vec![20.0, 1.0], LeafScald)], 1).unwrap();
        assert_eq!(m.exemplars[0].features, vec![-1.0, 0.0]);
        assert_eq!(m.predict(&[19.0, 5.0]).unwrap(), LeafScald);
    }
}
