//! Reverse-mode automatic differentiation over dense 2-D `f64` arrays.
//!
//! A [`Tape`] records one backward closure per differentiable operation.
//! [`Tape::backward`] replays the closures in reverse construction order,
//! propagating vector-Jacobian products through a per-call gradient map and
//! accumulating into the `grad` storage of every tensor that requires
//! gradients. Flow-through gradients never live in tensor storage, so calling
//! `backward` twice adds the same contributions twice (until grads are
//! zeroed).
//!
//! Tapes and their tensors are confined to one thread; persistent model
//! parameters live as plain arrays (see [`params`]) and are bound onto a
//! fresh tape per step.

mod adam;
mod gradcheck;
mod ops;
mod params;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use gradcheck::{grad_check, grad_check_params, GradCheckReport};
pub use ops::ElementwiseKind;
pub use params::{check_partition, Binding, Param, ParamGroup, ParamId, ParamSet};

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use crate::error::{Error, Result};

struct TensorInner {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    grad: Option<Vec<f64>>,
    requires_grad: bool,
}

/// Dense row-major 2-D tensor of 64-bit floats. Cloning is shallow; clones
/// share values and gradient storage.
#[derive(Clone)]
pub struct Tensor {
    inner: Rc<RefCell<TensorInner>>,
}

impl Tensor {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>, requires_grad: bool) -> Result<Tensor> {
        if values.len() != rows * cols {
            return Err(Error::dim(format!(
                "tensor {rows}x{cols} needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Ok(Tensor {
            inner: Rc::new(RefCell::new(TensorInner {
                rows,
                cols,
                values,
                grad: None,
                requires_grad,
            })),
        })
    }

    /// 1x1 constant.
    pub fn scalar(v: f64) -> Tensor {
        Tensor::new(1, 1, vec![v], false).unwrap()
    }

    /// 1xN constant row vector.
    pub fn row(values: Vec<f64>) -> Tensor {
        let n = values.len();
        Tensor::new(1, n, values, false).unwrap()
    }

    pub fn zeros(rows: usize, cols: usize, requires_grad: bool) -> Tensor {
        Tensor::new(rows, cols, vec![0.0; rows * cols], requires_grad).unwrap()
    }

    pub fn rows(&self) -> usize {
        self.inner.borrow().rows
    }

    pub fn cols(&self) -> usize {
        self.inner.borrow().cols
    }

    pub fn shape(&self) -> (usize, usize) {
        let b = self.inner.borrow();
        (b.rows, b.cols)
    }

    pub fn len(&self) -> usize {
        let b = self.inner.borrow();
        b.rows * b.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Copy of the forward values.
    pub fn values(&self) -> Vec<f64> {
        self.inner.borrow().values.clone()
    }

    /// Copy of the accumulated gradient, if any has been accumulated.
    pub fn grad(&self) -> Option<Vec<f64>> {
        self.inner.borrow().grad.clone()
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.borrow().requires_grad
    }

    /// Value of a 1x1 tensor.
    pub fn item(&self) -> f64 {
        let b = self.inner.borrow();
        assert!(
            b.rows == 1 && b.cols == 1,
            "item() on {}x{} tensor",
            b.rows,
            b.cols
        );
        b.values[0]
    }

    pub fn zero_grad(&self) {
        self.inner.borrow_mut().grad = None;
    }

    /// True when every value (and gradient entry, if present) is finite.
    pub fn all_finite(&self) -> bool {
        let b = self.inner.borrow();
        b.values.iter().all(|v| v.is_finite())
            && b.grad
                .as_ref()
                .map_or(true, |g| g.iter().all(|v| v.is_finite()))
    }

    fn key(&self) -> usize {
        Rc::as_ptr(&self.inner) as usize
    }

    fn accumulate(&self, contribution: &[f64]) {
        let mut b = self.inner.borrow_mut();
        debug_assert_eq!(contribution.len(), b.rows * b.cols);
        match &mut b.grad {
            Some(g) => {
                for (gi, ci) in g.iter_mut().zip(contribution) {
                    *gi += ci;
                }
            }
            None => b.grad = Some(contribution.to_vec()),
        }
    }
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let b = self.inner.borrow();
        f.debug_struct("Tensor")
            .field("rows", &b.rows)
            .field("cols", &b.cols)
            .field("values", &b.values)
            .field("requires_grad", &b.requires_grad)
            .finish()
    }
}

/// Per-backward-call map of flow-through gradients, keyed by tensor identity.
pub(crate) struct GradMap {
    map: HashMap<usize, Vec<f64>>,
}

impl GradMap {
    fn take(&mut self, t: &Tensor) -> Option<Vec<f64>> {
        self.map.remove(&t.key())
    }

    pub(crate) fn add(&mut self, t: &Tensor, contribution: Vec<f64>) {
        // Leafward flow: persist into grad storage for every tensor that
        // requires gradients, and keep the transient copy for ops upstream.
        if t.requires_grad() {
            t.accumulate(&contribution);
        }
        match self.map.entry(t.key()) {
            std::collections::hash_map::Entry::Occupied(mut e) => {
                for (gi, ci) in e.get_mut().iter_mut().zip(&contribution) {
                    *gi += ci;
                }
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(contribution);
            }
        }
    }
}

type BackwardStep = Box<dyn Fn(&mut GradMap)>;

/// Records differentiable operations for one forward/backward cycle.
pub struct Tape {
    steps: RefCell<Vec<(usize, BackwardStep)>>,
    enabled: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Tape::new()
    }
}

impl Tape {
    /// A recording tape.
    pub fn new() -> Tape {
        Tape {
            steps: RefCell::new(Vec::new()),
            enabled: true,
        }
    }

    /// A non-recording tape: operations compute values only and their
    /// outputs never require gradients. Used for inference and for
    /// finite-difference probes.
    pub fn disabled() -> Tape {
        Tape {
            steps: RefCell::new(Vec::new()),
            enabled: false,
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn num_steps(&self) -> usize {
        self.steps.borrow().len()
    }

    pub(crate) fn output_like(
        &self,
        rows: usize,
        cols: usize,
        values: Vec<f64>,
        parents: &[&Tensor],
    ) -> Tensor {
        let rg = self.enabled && parents.iter().any(|p| p.requires_grad());
        let out = Tensor::new(rows, cols, values, false).expect("op produced wrong value count");
        out.inner.borrow_mut().requires_grad = rg;
        out
    }

    pub(crate) fn record(&self, out: &Tensor, step: BackwardStep) {
        if self.enabled && out.requires_grad() {
            self.steps.borrow_mut().push((out.key(), step));
        }
    }

    /// Backpropagates from a scalar loss produced on this tape.
    ///
    /// Every tensor with `requires_grad` that the loss depends on gets its
    /// `grad` storage accumulated; repeated calls accumulate again.
    pub fn backward(&self, loss: &Tensor) -> Result<()> {
        if loss.shape() != (1, 1) {
            let (r, c) = loss.shape();
            return Err(Error::contract(format!(
                "backward requires a scalar loss, got {r}x{c}"
            )));
        }
        let mut grads = GradMap {
            map: HashMap::new(),
        };
        grads.add(loss, vec![1.0]);
        let steps = self.steps.borrow();
        for (out_key, step) in steps.iter().rev() {
            // Cheap skip for branches the loss does not depend on.
            if !grads.map.contains_key(out_key) {
                continue;
            }
            step(&mut grads);
        }
        Ok(())
    }
}
