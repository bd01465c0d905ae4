//! Dense tensors with tape-free reverse-mode automatic differentiation.
//!
//! A [`Tensor`] is an immutable-shape n-dimensional array. Operations in
//! [`ops`] build a dynamic graph: each result remembers its parents and a
//! closure that turns the result's gradient into parent gradients.
//! [`Tensor::backward`] walks the graph in reverse topological order and
//! accumulates gradients into the leaf tensors that requested them.
//!
//! Graphs are per-batch and dropped after use; parameters are leaves that
//! survive across batches and are updated in place by [`optim::Adam`].

pub mod ops;
pub mod optim;

use crate::error::{Error, Result};
use num_traits::Float;
use std::cell::{Ref, RefCell};
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

/// Element type of the numerical core. `f32` is the training default;
/// `f64` exists so finite-difference gradient checks have tight tolerances.
pub trait Scalar: Float + fmt::Debug + fmt::Display + Send + Sync + 'static {
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// Given the gradient of the output, produces the gradient for each parent
/// (empty vec for parents that do not need one).
type BackwardOp<S> = Box<dyn Fn(&[S]) -> Vec<Vec<S>>>;

pub(crate) struct Node<S: Scalar> {
    shape: Vec<usize>,
    data: RefCell<Vec<S>>,
    /// Persistent gradient accumulator; populated only for leaves with
    /// `requires_grad`.
    grad: RefCell<Option<Vec<S>>>,
    requires_grad: bool,
    /// True when a gradient must flow through this node to reach some leaf.
    needs_grad: bool,
    parents: Vec<Tensor<S>>,
    backward_op: Option<BackwardOp<S>>,
}

#[derive(Clone)]
pub struct Tensor<S: Scalar>(Rc<Node<S>>);

impl<S: Scalar> fmt::Debug for Tensor<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.0.shape)
            .field("requires_grad", &self.0.requires_grad)
            .finish()
    }
}

impl<S: Scalar> Tensor<S> {
    fn leaf(shape: Vec<usize>, data: Vec<S>, requires_grad: bool) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::invalid("tensor dimensions must be positive"));
        }
        if data.len() != numel {
            return Err(Error::shape(
                format!("{numel} elements for shape {shape:?}"),
                format!("{}", data.len()),
            ));
        }
        Ok(Tensor(Rc::new(Node {
            shape,
            data: RefCell::new(data),
            grad: RefCell::new(None),
            requires_grad,
            needs_grad: requires_grad,
            parents: Vec::new(),
            backward_op: None,
        })))
    }

    /// Constant tensor (no gradient will be tracked through it).
    pub fn from_vec(shape: &[usize], data: Vec<S>) -> Result<Self> {
        Self::leaf(shape.to_vec(), data, false)
    }

    /// Leaf tensor that accumulates gradients; the building block of parameters.
    pub fn param_from_vec(shape: &[usize], data: Vec<S>) -> Result<Self> {
        Self::leaf(shape.to_vec(), data, true)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Self::leaf(shape.to_vec(), vec![S::zero(); numel], false).unwrap()
    }

    pub fn scalar(v: S) -> Self {
        Self::leaf(vec![1], vec![v], false).unwrap()
    }

    pub(crate) fn from_op(
        shape: Vec<usize>,
        data: Vec<S>,
        parents: Vec<Tensor<S>>,
        op: BackwardOp<S>,
    ) -> Self {
        let needs = parents.iter().any(|p| p.0.needs_grad);
        if !needs {
            return Self::leaf(shape, data, false).unwrap();
        }
        Tensor(Rc::new(Node {
            shape,
            data: RefCell::new(data),
            grad: RefCell::new(None),
            requires_grad: false,
            needs_grad: true,
            parents,
            backward_op: Some(op),
        }))
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn numel(&self) -> usize {
        self.0.shape.iter().product()
    }

    pub fn data(&self) -> Ref<'_, Vec<S>> {
        self.0.data.borrow()
    }

    pub fn to_vec(&self) -> Vec<S> {
        self.0.data.borrow().clone()
    }

    /// Replaces the stored values. Shape is fixed; length must match.
    pub fn set_data(&self, data: Vec<S>) -> Result<()> {
        if data.len() != self.numel() {
            return Err(Error::shape(
                format!("{} elements", self.numel()),
                format!("{}", data.len()),
            ));
        }
        *self.0.data.borrow_mut() = data;
        Ok(())
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad
    }

    pub fn grad(&self) -> Option<Vec<S>> {
        self.0.grad.borrow().clone()
    }

    pub fn zero_grad(&self) {
        *self.0.grad.borrow_mut() = None;
    }

    /// Value of a one-element tensor.
    pub fn item(&self) -> S {
        assert_eq!(self.numel(), 1, "item() requires a scalar tensor");
        self.0.data.borrow()[0]
    }

    /// A constant copy that is cut off from the graph.
    pub fn detach(&self) -> Tensor<S> {
        Self::leaf(self.0.shape.clone(), self.to_vec(), false).unwrap()
    }

    pub fn is_all_finite(&self) -> bool {
        let data_ok = self.0.data.borrow().iter().all(|v| v.is_finite());
        let grad_ok = match &*self.0.grad.borrow() {
            Some(g) => g.iter().all(|v| v.is_finite()),
            None => true,
        };
        data_ok && grad_ok
    }

    fn key(&self) -> usize {
        Rc::as_ptr(&self.0) as usize
    }

    /// Reverse-mode sweep from a scalar output. Gradients accumulate into
    /// every reachable leaf with `requires_grad`; repeated calls without
    /// `zero_grad` keep accumulating.
    pub fn backward(&self) -> Result<()> {
        if self.numel() != 1 {
            return Err(Error::invalid(format!(
                "backward requires a scalar, got shape {:?}",
                self.0.shape
            )));
        }
        // Iterative post-order DFS; recursion would overflow on deep graphs.
        let mut topo: Vec<Tensor<S>> = Vec::new();
        let mut visited: HashMap<usize, ()> = HashMap::new();
        let mut stack: Vec<(Tensor<S>, usize)> = vec![(self.clone(), 0)];
        while let Some((node, child_idx)) = stack.pop() {
            if child_idx == 0 {
                if visited.contains_key(&node.key()) {
                    continue;
                }
                visited.insert(node.key(), ());
            }
            if child_idx < node.0.parents.len() {
                let parent = node.0.parents[child_idx].clone();
                stack.push((node, child_idx + 1));
                if !visited.contains_key(&parent.key()) && parent.0.needs_grad {
                    stack.push((parent, 0));
                }
            } else {
                topo.push(node);
            }
        }

        let mut grads: HashMap<usize, Vec<S>> = HashMap::new();
        grads.insert(self.key(), vec![S::one()]);
        for node in topo.iter().rev() {
            let g = match grads.remove(&node.key()) {
                Some(g) => g,
                None => continue,
            };
            if node.0.requires_grad {
                let mut slot = node.0.grad.borrow_mut();
                match slot.as_mut() {
                    Some(acc) => {
                        for (a, b) in acc.iter_mut().zip(&g) {
                            *a = *a + *b;
                        }
                    }
                    None => *slot = Some(g.clone()),
                }
            }
            if let Some(op) = &node.0.backward_op {
                let parent_grads = op(&g);
                debug_assert_eq!(parent_grads.len(), node.0.parents.len());
                for (parent, pg) in node.0.parents.iter().zip(parent_grads) {
                    if pg.is_empty() {
                        continue;
                    }
                    let entry = grads
                        .entry(parent.key())
                        .or_insert_with(|| vec![S::zero(); parent.numel()]);
                    for (a, b) in entry.iter_mut().zip(&pg) {
                        *a = *a + *b;
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::ops;
    use super::*;

    #[test]
    fn scalar_mse_backward_matches_analytic() {
        // loss = (x - 0)^2, x = 3 -> dloss/dx = 6
        let x = Tensor::param_from_vec(&[1], vec![3.0f64]).unwrap();
        let loss = ops::mse_loss(&x, &Tensor::scalar(0.0)).unwrap();
        assert_eq!(loss.item(), 9.0);
        loss.backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![6.0]);
    }

    #[test]
    fn repeated_backward_accumulates() {
        let x = Tensor::param_from_vec(&[1], vec![3.0f64]).unwrap();
        let loss = ops::mse_loss(&x, &Tensor::scalar(0.0)).unwrap();
        loss.backward().unwrap();
        loss.backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![12.0]);
        x.zero_grad();
        assert!(x.grad().is_none());
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let x = Tensor::param_from_vec(&[2], vec![1.0f64, 2.0]).unwrap();
        let y = ops::relu(&x).unwrap();
        assert!(y.backward().is_err());
    }

    #[test]
    fn diamond_graph_sums_paths() {
        // y = x + x -> dy/dx = 2
        let x = Tensor::param_from_vec(&[1], vec![5.0f64]).unwrap();
        let y = ops::add(&x, &x).unwrap();
        let loss = ops::mean_all(&y).unwrap();
        loss.backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![2.0]);
    }

    #[test]
    fn detach_blocks_gradient() {
        let x = Tensor::param_from_vec(&[1], vec![2.0f64]).unwrap();
        let d = x.detach();
        let loss = ops::mse_loss(&d, &Tensor::scalar(0.0)).unwrap();
        loss.backward().unwrap();
        assert!(x.grad().is_none());
    }
}
