//! The Wengert list: values, backward closures, and reverse accumulation.

use crate::Scalar;
use ndarray::ArrayD;

/// Handle to a node on a [`Tape`]. Cheap to copy; valid only for the tape
/// that produced it.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Var(pub(crate) usize);

/// Backward closure: receives the tape (read-only), the incoming gradient for
/// its node, and a sink that accumulates gradients into parent slots.
pub(crate) type BackFn<F> = Box<dyn Fn(&Tape<F>, &ArrayD<F>, &mut GradSink<F>)>;

pub(crate) struct Node<F: Scalar> {
    pub(crate) value: ArrayD<F>,
    /// Whether gradient flows to or through this node. Ops set it to the OR
    /// of their parents' flags; leaves declare it explicitly.
    pub(crate) grad: bool,
    pub(crate) back: Option<BackFn<F>>,
}

/// Gradient accumulator indexed by node id.
pub(crate) struct GradSink<F: Scalar> {
    slots: Vec<Option<ArrayD<F>>>,
}

impl<F: Scalar> GradSink<F> {
    /// Adds `g` into the slot for `var` (allocating on first touch).
    pub(crate) fn add(&mut self, var: Var, g: ArrayD<F>) {
        match &mut self.slots[var.0] {
            Some(acc) => *acc += &g,
            slot @ None => *slot = Some(g),
        }
    }
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
pub struct Gradients<F: Scalar> {
    slots: Vec<Option<ArrayD<F>>>,
}

impl<F: Scalar> Gradients<F> {
    /// Gradient for `var`; `None` means no gradient path reached it (an
    /// exact zero by construction).
    pub fn get(&self, var: Var) -> Option<&ArrayD<F>> {
        self.slots.get(var.0).and_then(|s| s.as_ref())
    }

    /// Removes and returns the gradient for `var`.
    pub fn take(&mut self, var: Var) -> Option<ArrayD<F>> {
        self.slots.get_mut(var.0).and_then(|s| s.take())
    }
}

/// Reverse-mode tape. Build a graph with the op methods (see [`crate::ops`]),
/// then call [`Tape::backward`] from any node, any number of times.
pub struct Tape<F: Scalar> {
    pub(crate) nodes: Vec<Node<F>>,
}

impl<F: Scalar> Default for Tape<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> Tape<F> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    /// Number of nodes recorded so far.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Value of a node.
    pub fn value(&self, v: Var) -> &ArrayD<F> {
        &self.nodes[v.0].value
    }

    /// Whether gradient flows to or through `v`.
    pub fn tracks_grad(&self, v: Var) -> bool {
        self.nodes[v.0].grad
    }

    /// Scalar value of a single-element node.
    pub fn scalar(&self, v: Var) -> F {
        let a = self.value(v);
        debug_assert_eq!(a.len(), 1, "node is not a scalar");
        *a.iter().next().expect("scalar node is non-empty")
    }

    /// New leaf that participates in differentiation.
    pub fn param(&mut self, value: ArrayD<F>) -> Var {
        self.push(value, true, None)
    }

    /// New leaf that never receives gradient.
    pub fn constant(&mut self, value: ArrayD<F>) -> Var {
        self.push(value, false, None)
    }

    /// Copies `v`'s value onto the tape as a gradient-dead leaf: the value is
    /// bit-identical, and no gradient edge exists (stop-gradient).
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.value(v).clone();
        self.push(value, false, None)
    }

    pub(crate) fn push(&mut self, value: ArrayD<F>, grad: bool, back: Option<BackFn<F>>) -> Var {
        debug_assert!(
            value.is_standard_layout() || value.len() <= 1,
            "tape values must be standard layout"
        );
        self.nodes.push(Node { value, grad, back });
        Var(self.nodes.len() - 1)
    }

    /// Records an op node. `grad` should be the OR of the parents' flags; the
    /// backward closure is dropped when no parent tracks gradient.
    pub(crate) fn push_op(&mut self, value: ArrayD<F>, grad: bool, back: BackFn<F>) -> Var {
        self.push(value, grad, if grad { Some(back) } else { None })
    }

    /// Reverse accumulation from `root`, seeded with ones (for a scalar root
    /// this is d root / d node for every node). May be called repeatedly on
    /// one tape; each call starts from fresh gradient slots.
    pub fn backward(&self, root: Var) -> Gradients<F> {
        let mut sink = GradSink {
            slots: vec![None; self.nodes.len()],
        };
        sink.slots[root.0] = Some(ArrayD::ones(self.nodes[root.0].value.raw_dim()));
        for id in (0..=root.0).rev() {
            if !self.nodes[id].grad {
                sink.slots[id] = None;
                continue;
            }
            let Some(back) = &self.nodes[id].back else {
                continue; // leaf: keep its accumulated gradient
            };
            let Some(g) = sink.slots[id].take() else {
                continue; // no gradient reached this node
            };
            back(self, &g, &mut sink);
        }
        Gradients { slots: sink.slots }
    }
}
