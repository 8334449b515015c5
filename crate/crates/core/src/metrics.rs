use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accuracy and confusion counts over a fixed, ascending class list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub classes: Vec<u32>,
    pub n: usize,
    pub accuracy: f64,
    /// `confusion[true][predicted]`, indexed like `classes`.
    pub confusion: Vec<Vec<usize>>,
}

impl Evaluation {
    pub fn from_predictions(classes: &[u32], truth: &[u32], predicted: &[u32]) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::Empty);
        }
        if truth.len() != predicted.len() {
            return Err(Error::Dimension {
                expected: truth.len(),
                got: predicted.len(),
            });
        }
        let index = |l: u32| classes.binary_search(&l).map_err(|_| Error::UnseenLabel(l));
        let mut confusion = vec![vec![0; classes.len()]; classes.len()];
        let mut correct = 0;
        for (&t, &p) in truth.iter().zip(predicted) {
            confusion[index(t)?][index(p)?] += 1;
            correct += usize::from(t == p);
        }
        Ok(Evaluation {
            classes: classes.to_vec(),
            n: truth.len(),
            accuracy: correct as f64 / truth.len() as f64,
            confusion,
        })
    }

    /// Accuracy restricted to rows whose true class is `class`.
    pub fn class_accuracy(&self, class: u32) -> Option<f64> {
        let i = self.classes.binary_search(&class).ok()?;
        let total: usize = self.confusion[i].iter().sum();
        (total > 0).then(|| self.confusion[i][i] as f64 / total as f64)
    }
}
