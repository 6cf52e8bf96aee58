use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Named parameter tensors in a fixed (lexicographic) key order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    tensors: BTreeMap<String, Tensor>,
}

/// Gradients share the parameter layout.
pub type Gradients = ParamSet;

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, tensor: Tensor) {
        self.tensors.insert(key.into(), tensor);
    }

    pub fn get(&self, key: &str) -> Result<&Tensor> {
        self.tensors
            .get(key)
            .ok_or_else(|| Error::Structural(format!("missing parameter `{key}`")))
    }

    pub fn get_mut(&mut self, key: &str) -> Result<&mut Tensor> {
        self.tensors
            .get_mut(key)
            .ok_or_else(|| Error::Structural(format!("missing parameter `{key}`")))
    }

    pub fn contains(&self, key: &str) -> bool {
        self.tensors.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor)> {
        self.tensors.iter_mut()
    }

    pub fn keys(&self) -> impl Iterator<Item = &String> {
        self.tensors.keys()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    /// Same keys and shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        Self {
            tensors: self
                .tensors
                .iter()
                .map(|(k, t)| (k.clone(), Tensor::zeros(t.shape())))
                .collect(),
        }
    }

    /// Errors unless `other` has exactly the same keys with the same shapes.
    pub fn check_layout(&self, other: &ParamSet) -> Result<()> {
        if self.tensors.len() != other.tensors.len() {
            return Err(Error::Structural(format!(
                "parameter count mismatch: {} vs {}",
                self.tensors.len(),
                other.tensors.len()
            )));
        }
        for (k, t) in &self.tensors {
            let o = other.get(k)?;
            if o.shape() != t.shape() {
                return Err(Error::Dimension {
                    op: "parameter layout",
                    left: t.shape().to_vec(),
                    right: o.shape().to_vec(),
                });
            }
        }
        Ok(())
    }

    /// Accumulates `other` into `self` key by key.
    pub fn add_assign(&mut self, other: &ParamSet) -> Result<()> {
        for (k, t) in other.iter() {
            self.get_mut(k)?.axpy(1.0, t)?;
        }
        Ok(())
    }

    pub fn bit_eq(&self, other: &ParamSet) -> bool {
        self.tensors.len() == other.tensors.len()
            && self
                .tensors
                .iter()
                .all(|(k, t)| other.tensors.get(k).is_some_and(|o| o.bit_eq(t)))
    }
}

impl FromIterator<(String, Tensor)> for ParamSet {
    fn from_iter<I: IntoIterator<Item = (String, Tensor)>>(iter: I) -> Self {
        Self {
            tensors: iter.into_iter().collect(),
        }
    }
}
