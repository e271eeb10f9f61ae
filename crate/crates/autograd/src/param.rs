//! Named, grouped parameter storage, held outside the tape.
//!
//! A forward pass binds parameters onto a fresh tape as leaves; gradients are
//! read back per [`ParamId`]. Registration order is the canonical parameter
//! order everywhere (optimizer state, serialization, hashing), which keeps
//! training bit-deterministic.

use crate::Scalar;
use ndarray::ArrayD;
use std::collections::HashMap;

/// Stable index of a parameter within a [`ParamStore`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ParamId(pub usize);

pub struct ParamEntry<F: Scalar> {
    pub name: String,
    pub group: String,
    pub value: ArrayD<F>,
    /// Trainable parameters receive gradient and optimizer updates;
    /// non-trainable entries are buffers (e.g. running statistics).
    pub trainable: bool,
}

pub struct ParamStore<F: Scalar> {
    entries: Vec<ParamEntry<F>>,
    by_name: HashMap<String, usize>,
}

impl<F: Scalar> Default for ParamStore<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> ParamStore<F> {
    pub fn new() -> Self {
        ParamStore {
            entries: Vec::new(),
            by_name: HashMap::new(),
        }
    }

    /// Registers a parameter or buffer. Names must be unique.
    pub fn register(
        &mut self,
        name: impl Into<String>,
        group: impl Into<String>,
        value: ArrayD<F>,
        trainable: bool,
    ) -> ParamId {
        let name = name.into();
        assert!(
            !self.by_name.contains_key(&name),
            "duplicate parameter name: {name}"
        );
        self.by_name.insert(name.clone(), self.entries.len());
        self.entries.push(ParamEntry {
            name,
            group: group.into(),
            value,
            trainable,
        });
        ParamId(self.entries.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, id: ParamId) -> &ParamEntry<F> {
        &self.entries[id.0]
    }

    pub fn value(&self, id: ParamId) -> &ArrayD<F> {
        &self.entries[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut ArrayD<F> {
        &mut self.entries[id.0].value
    }

    pub fn lookup(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied().map(ParamId)
    }

    /// All entries in registration order.
    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &ParamEntry<F>)> {
        self.entries.iter().enumerate().map(|(i, e)| (ParamId(i), e))
    }

    /// Ids of trainable parameters in registration order.
    pub fn trainable_ids(&self) -> Vec<ParamId> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.trainable)
            .map(|(i, _)| ParamId(i))
            .collect()
    }

    /// Ids belonging to a parameter group, in registration order.
    pub fn group_ids(&self, group: &str) -> Vec<ParamId> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.group == group)
            .map(|(i, _)| ParamId(i))
            .collect()
    }

    /// Total number of scalar elements across trainable parameters.
    pub fn trainable_len(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.trainable)
            .map(|e| e.value.len())
            .sum()
    }
}
