//! Learnable parameters and the visitor trait used to enumerate them.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::array::Array;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Process-unique identity of a [`Param`]; used to bind a parameter to a
/// single leaf per graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(u64);

impl ParamId {
    fn fresh() -> Self {
        ParamId(NEXT_ID.fetch_add(1, Ordering::Relaxed))
    }
}

#[derive(Debug)]
pub struct Param {
    id: ParamId,
    name: String,
    value: Arc<Array>,
}

impl Param {
    pub fn new(name: impl Into<String>, value: Array) -> Self {
        Self {
            id: ParamId::fresh(),
            name: name.into(),
            value: Arc::new(value),
        }
    }

    pub fn id(&self) -> ParamId {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self) -> &Array {
        &self.value
    }

    pub(crate) fn shared(&self) -> Arc<Array> {
        Arc::clone(&self.value)
    }

    /// Mutable access to the values. Clones only if a graph still holds them.
    pub fn value_mut(&mut self) -> &mut Array {
        Arc::make_mut(&mut self.value)
    }

    pub fn numel(&self) -> usize {
        self.value.len()
    }

    pub(crate) fn prefix_name(&mut self, prefix: &str) {
        self.name = format!("{prefix}.{}", self.name);
    }
}

/// Anything that owns learnable parameters.
///
/// Visit order is stable and defines checkpoint layout and optimizer state order.
pub trait Module {
    fn visit_params<'a>(&'a self, f: &mut dyn FnMut(&'a Param));

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut Param));

    fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit_params(&mut |p| n += p.numel());
        n
    }

    fn params(&self) -> Vec<&Param> {
        let mut out = Vec::new();
        self.visit_params(&mut |p| out.push(p));
        out
    }

    /// Copies every parameter value, in visit order.
    fn snapshot(&self) -> Vec<Array> {
        let mut out = Vec::new();
        self.visit_params(&mut |p| out.push(p.value().clone()));
        out
    }

    /// Restores values produced by [`Module::snapshot`]. Panics on a layout mismatch.
    fn restore(&mut self, values: &[Array]) {
        let mut it = values.iter();
        self.visit_params_mut(&mut |p| {
            let v = it.next().expect("snapshot has fewer tensors than module");
            assert_eq!(v.shape(), p.value().shape(), "snapshot shape mismatch for {}", p.name());
            *p.value_mut() = v.clone();
        });
        assert!(it.next().is_none(), "snapshot has more tensors than module");
    }
}
