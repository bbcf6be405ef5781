use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use num_complex::Complex;

use super::error::{CxError, Result};
use super::real::Real;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Accumulated gradient, split into component planes matching the tensor data.
#[derive(Clone, Debug)]
pub struct GradBuf<T> {
    pub re: Vec<T>,
    pub im: Vec<T>,
}

impl<T: Real> GradBuf<T> {
    pub fn zeros(len: usize) -> Self {
        GradBuf { re: vec![T::zero(); len], im: vec![T::zero(); len] }
    }
    pub fn at(&self, i: usize) -> Complex<T> {
        Complex::new(self.re[i], self.im[i])
    }
}

type BackwardFn<T> = Box<dyn Fn(&GradBuf<T>) + Send + Sync>;

/// One reverse-mode record: the op tag, the parent tensors (for traversal
/// order), and a closure that scatters the output gradient into the parents.
/// Values needed by the rule are captured by the closure.
pub(crate) struct GradRecord<T: Real> {
    pub op: &'static str,
    pub parents: Vec<CTensor<T>>,
    pub backward: BackwardFn<T>,
}

pub(crate) struct Inner<T: Real> {
    pub id: u64,
    pub shape: Vec<usize>,
    pub re: Vec<T>,
    pub im: Vec<T>,
    pub requires_grad: bool,
    pub grad: Mutex<Option<GradBuf<T>>>,
    pub node: Option<GradRecord<T>>,
}

/// Dense row-major complex tensor. Cloning is cheap (shared storage); data is
/// immutable once built, so tensors are safe to move across threads while a
/// graph referencing them is alive.
pub struct CTensor<T: Real> {
    pub(crate) inner: Arc<Inner<T>>,
}

impl<T: Real> Clone for CTensor<T> {
    fn clone(&self) -> Self {
        CTensor { inner: Arc::clone(&self.inner) }
    }
}

impl<T: Real> std::fmt::Debug for CTensor<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CTensor")
            .field("id", &self.inner.id)
            .field("shape", &self.inner.shape)
            .field("requires_grad", &self.inner.requires_grad)
            .finish()
    }
}

pub(crate) fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl<T: Real> CTensor<T> {
    // ---- construction -------------------------------------------------

    pub fn from_parts(shape: &[usize], re: Vec<T>, im: Vec<T>) -> Result<Self> {
        let n = numel(shape);
        if re.len() != n || im.len() != n {
            return Err(CxError::shape(
                "from_parts",
                format!("shape {:?} wants {} elements, got re={} im={}", shape, n, re.len(), im.len()),
            ));
        }
        Ok(Self::build(shape.to_vec(), re, im, false, None))
    }

    pub fn from_complex(shape: &[usize], data: &[Complex<T>]) -> Result<Self> {
        let re = data.iter().map(|z| z.re).collect();
        let im = data.iter().map(|z| z.im).collect();
        Self::from_parts(shape, re, im)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = numel(shape);
        Self::build(shape.to_vec(), vec![T::zero(); n], vec![T::zero(); n], false, None)
    }

    pub fn scalar(v: Complex<T>) -> Self {
        Self::build(vec![], vec![v.re], vec![v.im], false, None)
    }

    /// Real-valued tensor (zero imaginary plane).
    pub fn from_real(shape: &[usize], re: Vec<T>) -> Result<Self> {
        let n = numel(shape);
        if re.len() != n {
            return Err(CxError::shape("from_real", format!("shape {:?} wants {n}, got {}", shape, re.len())));
        }
        let im = vec![T::zero(); n];
        Ok(Self::build(shape.to_vec(), re, im, false, None))
    }

    pub(crate) fn build(
        shape: Vec<usize>,
        re: Vec<T>,
        im: Vec<T>,
        requires_grad: bool,
        node: Option<GradRecord<T>>,
    ) -> Self {
        CTensor {
            inner: Arc::new(Inner {
                id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
                shape,
                re,
                im,
                requires_grad,
                grad: Mutex::new(None),
                node,
            }),
        }
    }

    /// Marks a leaf as trainable. Must be called before the tensor enters a
    /// graph (returns a fresh leaf sharing nothing).
    pub fn requires_grad(self) -> Self {
        let inner = &self.inner;
        Self::build(inner.shape.clone(), inner.re.clone(), inner.im.clone(), true, None)
    }

    // ---- accessors -----------------------------------------------------

    pub fn id(&self) -> u64 {
        self.inner.id
    }
    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }
    pub fn len(&self) -> usize {
        self.inner.re.len()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn re(&self) -> &[T] {
        &self.inner.re
    }
    pub fn im(&self) -> &[T] {
        &self.inner.im
    }
    pub fn needs_grad(&self) -> bool {
        self.inner.requires_grad
    }
    pub fn at(&self, i: usize) -> Complex<T> {
        Complex::new(self.inner.re[i], self.inner.im[i])
    }
    pub fn to_complex(&self) -> Vec<Complex<T>> {
        self.inner.re.iter().zip(&self.inner.im).map(|(&r, &i)| Complex::new(r, i)).collect()
    }

    /// Scalar value of a rank-0 or single-element tensor.
    pub fn item(&self) -> Result<Complex<T>> {
        if self.len() != 1 {
            return Err(CxError::contract("item", format!("tensor has {} elements", self.len())));
        }
        Ok(self.at(0))
    }

    /// Copy of the accumulated gradient, if backward has reached this tensor.
    pub fn grad(&self) -> Option<GradBuf<T>> {
        self.inner.grad.lock().unwrap().clone()
    }

    pub fn clear_grad(&self) {
        *self.inner.grad.lock().unwrap() = None;
    }

    pub(crate) fn accumulate_grad(&self, re: &[T], im: &[T]) {
        let mut slot = self.inner.grad.lock().unwrap();
        let buf = slot.get_or_insert_with(|| GradBuf::zeros(self.len()));
        for (dst, src) in buf.re.iter_mut().zip(re) {
            *dst = *dst + *src;
        }
        for (dst, src) in buf.im.iter_mut().zip(im) {
            *dst = *dst + *src;
        }
    }

    // ---- backward ------------------------------------------------------

    /// Reverse-mode sweep from a real scalar loss. Populates `grad` on every
    /// reachable tensor with `requires_grad`, visiting each record once.
    pub fn backward(&self) -> Result<()> {
        if numel(&self.inner.shape) != 1 {
            return Err(CxError::contract(
                "backward",
                format!("loss must be scalar, got shape {:?}", self.inner.shape),
            ));
        }
        let v = self.at(0);
        if v.im.abs() > T::IMAG_TOL * (T::one() + v.re.abs()) {
            return Err(CxError::contract(
                "backward",
                format!("loss must be real-valued, got imaginary part {}", v.im),
            ));
        }

        let order = self.topo_order()?;
        self.accumulate_grad(&[T::one()], &[T::zero()]);
        // `order` lists consumers before producers, so each record fires with
        // its output gradient fully accumulated.
        for t in &order {
            if let Some(node) = &t.inner.node {
                // Take (not clone) the gradient: once a record has fired, the
                // intermediate buffer is dead weight and can be freed early.
                let g = t.inner.grad.lock().unwrap().take();
                if let Some(g) = g {
                    (node.backward)(&g);
                }
            }
        }
        Ok(())
    }

    /// Iterative DFS post-order, reversed: every tensor appears before the
    /// tensors it was computed from. Cycles are impossible for graphs built
    /// through the public API but are still reported rather than looping.
    fn topo_order(&self) -> Result<Vec<CTensor<T>>> {
        let mut order: Vec<CTensor<T>> = Vec::new();
        let mut visited: HashSet<u64> = HashSet::new();
        let mut on_stack: HashSet<u64> = HashSet::new();
        // (tensor, next-parent-index)
        let mut stack: Vec<(CTensor<T>, usize)> = vec![(self.clone(), 0)];
        visited.insert(self.id());
        on_stack.insert(self.id());
        while let Some((t, idx)) = stack.pop() {
            let parents: &[CTensor<T>] = t.inner.node.as_ref().map(|n| n.parents.as_slice()).unwrap_or(&[]);
            if idx < parents.len() {
                let p = parents[idx].clone();
                stack.push((t, idx + 1));
                if on_stack.contains(&p.id()) {
                    return Err(CxError::Internal("cycle detected in autodiff graph".into()));
                }
                if visited.insert(p.id()) {
                    on_stack.insert(p.id());
                    stack.push((p, 0));
                }
            } else {
                on_stack.remove(&t.id());
                order.push(t);
            }
        }
        order.reverse();
        Ok(order)
    }
}

/// Output-tensor builder for ops: wires the record only when some parent
/// participates in differentiation, so inference-mode graphs cost nothing.
pub(crate) fn make_op_output<T: Real>(
    shape: Vec<usize>,
    re: Vec<T>,
    im: Vec<T>,
    op: &'static str,
    parents: Vec<CTensor<T>>,
    backward: impl FnOnce() -> BackwardFn<T>,
) -> CTensor<T> {
    let requires = parents.iter().any(|p| p.needs_grad());
    if requires {
        let record = GradRecord { op, parents, backward: backward() };
        CTensor::build(shape, re, im, true, Some(record))
    } else {
        CTensor::build(shape, re, im, false, None)
    }
}

#[allow(dead_code)]
pub(crate) fn op_name<T: Real>(t: &CTensor<T>) -> Option<&'static str> {
    t.inner.node.as_ref().map(|n| n.op)
}
