//! Persistent model parameters.
//!
//! Parameters live as plain arrays so model structs stay `Send + Sync`;
//! every training step binds them onto a fresh tape as gradient-carrying
//! leaves, and the optimizer copies updates back through [`ParamSet`].

use super::Tensor;
use crate::error::{Error, Result};

/// Index of a parameter within its [`ParamSet`]. Stable for the lifetime of
/// the set; declaration order defines checkpoint layout.
pub type ParamId = usize;

/// One named parameter array.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub value: Vec<f64>,
}

impl Param {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Ordered collection of all parameters of one model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    params: Vec<Param>,
}

impl ParamSet {
    pub fn new() -> ParamSet {
        ParamSet::default()
    }

    pub fn add(&mut self, name: impl Into<String>, rows: usize, cols: usize, value: Vec<f64>) -> ParamId {
        let name = name.into();
        assert_eq!(value.len(), rows * cols, "parameter {name} value length");
        let id = self.params.len();
        self.params.push(Param {
            name,
            rows,
            cols,
            value,
        });
        id
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.params[id]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Param {
        &mut self.params[id]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    /// Total scalar count across all parameters.
    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.len()).sum()
    }

    /// Creates one leaf tensor per parameter on the caller's side. With
    /// `trainable`, leaves carry gradients after a backward pass.
    pub fn bind(&self, trainable: bool) -> Binding {
        let leaves = self
            .params
            .iter()
            .map(|p| Tensor::new(p.rows, p.cols, p.value.clone(), trainable).unwrap())
            .collect();
        Binding { leaves }
    }
}

/// Leaf tensors for one forward/backward cycle, index-aligned with the
/// [`ParamSet`] they were bound from.
pub struct Binding {
    leaves: Vec<Tensor>,
}

impl Binding {
    pub fn leaf(&self, id: ParamId) -> &Tensor {
        &self.leaves[id]
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }
}

/// A named set of parameters sharing a learning rate and freeze flag.
/// Each parameter belongs to exactly one group.
#[derive(Debug, Clone)]
pub struct ParamGroup {
    pub name: String,
    pub learning_rate: f64,
    pub frozen: bool,
    pub members: Vec<ParamId>,
}

impl ParamGroup {
    pub fn new(name: impl Into<String>, learning_rate: f64, frozen: bool, members: Vec<ParamId>) -> ParamGroup {
        ParamGroup {
            name: name.into(),
            learning_rate,
            frozen,
            members,
        }
    }
}

/// Checks that `groups` partition `set`: every parameter in exactly one group.
pub fn check_partition(set: &ParamSet, groups: &[ParamGroup]) -> Result<()> {
    let mut seen = vec![false; set.len()];
    for g in groups {
        for &id in &g.members {
            if id >= set.len() {
                return Err(Error::contract(format!(
                    "group {} references unknown parameter {id}",
                    g.name
                )));
            }
            if seen[id] {
                return Err(Error::contract(format!(
                    "parameter {} appears in more than one group",
                    set.get(id).name
                )));
            }
            seen[id] = true;
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::contract(format!(
            "parameter {} belongs to no group",
            set.get(missing).name
        )));
    }
    Ok(())
}
