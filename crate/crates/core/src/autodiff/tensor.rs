//! Shared-ownership dense tensors.
//!
//! A tensor is a (rows x cols) buffer of f64 plus an optional gradient
//! buffer of identical shape, allocated iff `requires_grad`. Tensors are
//! cheaply cloneable handles; a clone shares storage with the original, so
//! parameters held by a model and referenced from a tape are the same
//! buffers. A tensor belongs to one training context and is not Send.

use std::cell::RefCell;
use std::rc::Rc;

thread_local! {
    static NEXT_ID: std::cell::Cell<u64> = const { std::cell::Cell::new(0) };
}

fn next_id() -> u64 {
    NEXT_ID.with(|c| {
        let id = c.get();
        c.set(id + 1);
        id
    })
}

#[derive(Debug)]
struct TensorData {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    grad: Option<Vec<f64>>,
}

/// Handle to a dense 2-d value buffer with an optional gradient buffer.
#[derive(Debug, Clone)]
pub struct Tensor {
    id: u64,
    inner: Rc<RefCell<TensorData>>,
}

impl Tensor {
    fn new(rows: usize, cols: usize, values: Vec<f64>, requires_grad: bool) -> Self {
        assert_eq!(values.len(), rows * cols, "buffer length must match shape");
        let grad = requires_grad.then(|| vec![0.0; rows * cols]);
        Self {
            id: next_id(),
            inner: Rc::new(RefCell::new(TensorData {
                rows,
                cols,
                values,
                grad,
            })),
        }
    }

    /// A constant (no gradient tracking).
    pub fn constant(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        Self::new(rows, cols, values, false)
    }

    /// A learnable parameter with a zero-initialized gradient buffer.
    pub fn param(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        Self::new(rows, cols, values, true)
    }

    pub fn scalar(value: f64) -> Self {
        Self::constant(1, 1, vec![value])
    }

    pub fn row_vector(values: Vec<f64>) -> Self {
        Self::constant(1, values.len(), values)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::constant(rows, cols, vec![0.0; rows * cols])
    }

    pub(crate) fn output(rows: usize, cols: usize, values: Vec<f64>, requires_grad: bool) -> Self {
        Self::new(rows, cols, values, requires_grad)
    }

    /// Stable identity for gradient routing during backward.
    pub(crate) fn id(&self) -> u64 {
        self.id
    }

    pub fn shape(&self) -> (usize, usize) {
        let d = self.inner.borrow();
        (d.rows, d.cols)
    }

    pub fn len(&self) -> usize {
        let d = self.inner.borrow();
        d.rows * d.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.borrow().grad.is_some()
    }

    pub fn is_scalar(&self) -> bool {
        self.shape() == (1, 1)
    }

    /// True when the tensor is a single row or single column.
    pub fn is_vector(&self) -> bool {
        let (r, c) = self.shape();
        r == 1 || c == 1
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.inner.borrow().values.clone()
    }

    pub fn grad_to_vec(&self) -> Vec<f64> {
        self.inner
            .borrow()
            .grad
            .clone()
            .expect("tensor does not track gradients")
    }

    pub fn value_at(&self, idx: usize) -> f64 {
        self.inner.borrow().values[idx]
    }

    pub fn set_value_at(&self, idx: usize, value: f64) {
        self.inner.borrow_mut().values[idx] = value;
    }

    pub fn grad_at(&self, idx: usize) -> f64 {
        self.inner.borrow().grad.as_ref().expect("no gradient")[idx]
    }

    pub fn scalar_value(&self) -> f64 {
        debug_assert!(self.is_scalar());
        self.inner.borrow().values[0]
    }

    /// Runs `f` over the value buffer.
    pub fn with_values<R>(&self, f: impl FnOnce(&[f64]) -> R) -> R {
        f(&self.inner.borrow().values)
    }

    /// Overwrites the value buffer; shape must be unchanged.
    pub fn set_values(&self, values: &[f64]) {
        let mut d = self.inner.borrow_mut();
        assert_eq!(d.values.len(), values.len());
        d.values.copy_from_slice(values);
    }

    pub fn zero_grad(&self) {
        if let Some(g) = self.inner.borrow_mut().grad.as_mut() {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    /// Adds `delta` into the gradient buffer (no-op for constants).
    pub(crate) fn accumulate_grad(&self, delta: &[f64]) {
        let mut d = self.inner.borrow_mut();
        if let Some(g) = d.grad.as_mut() {
            debug_assert_eq!(g.len(), delta.len());
            for (gi, di) in g.iter_mut().zip(delta) {
                *gi += di;
            }
        }
    }

    /// values -= step_size * grad. Panics if the tensor has no gradient.
    pub fn apply_gradient_step(&self, step_size: f64) {
        let mut d = self.inner.borrow_mut();
        let (values, grad) = {
            let TensorData { values, grad, .. } = &mut *d;
            (values, grad.as_ref().expect("no gradient"))
        };
        for (v, g) in values.iter_mut().zip(grad) {
            *v -= step_size * g;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.inner.borrow().values.iter().all(|v| v.is_finite())
    }
}
