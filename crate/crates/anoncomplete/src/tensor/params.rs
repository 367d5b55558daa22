use crate::rng::Rng;
use crate::tensor::scalar::Scalar;
use crate::tensor::tape::{Tape, ValueId};

/// Dense row-major tensor; vectors have `cols == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<S> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![S::ZERO; rows * cols],
        }
    }

    pub fn uniform(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut Rng) -> Self {
        let data = (0..rows * cols)
            .map(|_| S::from_f64(rng.uniform(lo, hi)))
            .collect();
        Tensor { rows, cols, data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn to_f32(&self) -> Tensor<f32> {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x.to_f64() as f32).collect(),
        }
    }

    pub fn from_f32(t: &Tensor<f32>) -> Self {
        Tensor {
            rows: t.rows,
            cols: t.cols,
            data: t.data.iter().map(|&x| S::from_f64(x as f64)).collect(),
        }
    }
}

/// Ordered collection of named parameter tensors. Order is insertion order
/// and is part of the artifact contract (checkpoints, optimizer state).
#[derive(Debug, Clone)]
pub struct ParamSet<S> {
    entries: Vec<(String, Tensor<S>)>,
}

impl<S: Scalar> ParamSet<S> {
    pub fn new() -> Self {
        ParamSet {
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor<S>) -> usize {
        self.entries.push((name.into(), tensor));
        self.entries.len() - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.entries[idx].0
    }

    pub fn tensor(&self, idx: usize) -> &Tensor<S> {
        &self.entries[idx].1
    }

    pub fn tensor_mut(&mut self, idx: usize) -> &mut Tensor<S> {
        &mut self.entries[idx].1
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor<S>> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<S>)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn total_len(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    /// Registers every parameter as a gradient-tracked leaf on a fresh tape.
    pub fn bind<T: Scalar>(&self, tape: &mut Tape<T>) -> Vec<ValueId>
    where
        S: Scalar,
    {
        self.entries
            .iter()
            .map(|(_, t)| {
                let data = t.data.iter().map(|&x| T::from_f64(x.to_f64())).collect();
                tape.leaf_matrix(data, t.rows, t.cols, true)
            })
            .collect()
    }

    pub fn convert<T: Scalar>(&self) -> ParamSet<T> {
        ParamSet {
            entries: self
                .entries
                .iter()
                .map(|(n, t)| {
                    (
                        n.clone(),
                        Tensor {
                            rows: t.rows,
                            cols: t.cols,
                            data: t.data.iter().map(|&x| T::from_f64(x.to_f64())).collect(),
                        },
                    )
                })
                .collect(),
        }
    }

    /// Global L2 norm over all parameters, for diagnostics.
    pub fn global_norm(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|(_, t)| t.data.iter())
            .map(|x| x.to_f64() * x.to_f64())
            .sum::<f64>()
            .sqrt()
    }
}

impl<S: Scalar> Default for ParamSet<S> {
    fn default() -> Self {
        Self::new()
    }
}
