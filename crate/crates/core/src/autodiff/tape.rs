//! Append-only operation tape with reverse-mode backward.

use std::collections::HashMap;

use super::tensor::Tensor;
use super::{KernelError, COSINE_NORM_EPS};

enum OpKind {
    MatMul,
    MatVec,
    Add,
    Scale(f64),
    Concat,
    Relu,
    Tanh,
    Log,
    Cosine,
    Softmax,
    StackScalars,
    VStack,
    Row(usize),
    SumAll,
    Nll(usize),
}

struct TapeEntry {
    op: OpKind,
    inputs: Vec<Tensor>,
    output: Tensor,
}

/// Record of forward operations in topological order; `backward` traverses
/// in exact reverse. A tape belongs to one training step and is dropped (or
/// a fresh one built) between steps.
#[derive(Default)]
pub struct Tape {
    entries: Vec<TapeEntry>,
}

type Result<T> = std::result::Result<T, KernelError>;

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn push(
        &mut self,
        op: OpKind,
        inputs: Vec<Tensor>,
        rows: usize,
        cols: usize,
        values: Vec<f64>,
        name: &'static str,
    ) -> Result<Tensor> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(KernelError::NonFiniteValue { op: name });
        }
        let track = inputs.iter().any(Tensor::requires_grad);
        let out = Tensor::output(rows, cols, values, track);
        if track {
            self.entries.push(TapeEntry {
                op,
                inputs,
                output: out.clone(),
            });
        }
        Ok(out)
    }

    /// C = A · B for (m x k) · (k x n).
    pub fn matmul(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        let (m, ka) = a.shape();
        let (kb, n) = b.shape();
        if ka != kb {
            return Err(KernelError::ShapeMismatch {
                op: "matmul",
                lhs: (m, ka),
                rhs: (kb, n),
            });
        }
        let out = a.with_values(|av| {
            b.with_values(|bv| {
                let mut c = vec![0.0; m * n];
                for i in 0..m {
                    for k in 0..ka {
                        let aik = av[i * ka + k];
                        if aik == 0.0 {
                            continue;
                        }
                        for j in 0..n {
                            c[i * n + j] += aik * bv[k * n + j];
                        }
                    }
                }
                c
            })
        });
        self.push(
            OpKind::MatMul,
            vec![a.clone(), b.clone()],
            m,
            n,
            out,
            "matmul",
        )
    }

    /// y = A · x for (m x k) · (k x 1).
    pub fn matvec(&mut self, a: &Tensor, x: &Tensor) -> Result<Tensor> {
        let (m, k) = a.shape();
        let (xr, xc) = x.shape();
        if xc != 1 || xr != k {
            return Err(KernelError::ShapeMismatch {
                op: "matvec",
                lhs: (m, k),
                rhs: (xr, xc),
            });
        }
        let out = a.with_values(|av| {
            x.with_values(|xv| {
                (0..m)
                    .map(|i| (0..k).map(|j| av[i * k + j] * xv[j]).sum())
                    .collect()
            })
        });
        self.push(
            OpKind::MatVec,
            vec![a.clone(), x.clone()],
            m,
            1,
            out,
            "matvec",
        )
    }

    /// Elementwise sum of two same-shape tensors.
    pub fn add(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        if a.shape() != b.shape() {
            return Err(KernelError::ShapeMismatch {
                op: "add",
                lhs: a.shape(),
                rhs: b.shape(),
            });
        }
        let (r, c) = a.shape();
        let out =
            a.with_values(|av| b.with_values(|bv| av.iter().zip(bv).map(|(x, y)| x + y).collect()));
        self.push(OpKind::Add, vec![a.clone(), b.clone()], r, c, out, "add")
    }

    /// Multiplication by a compile-time constant.
    pub fn scale(&mut self, a: &Tensor, factor: f64) -> Result<Tensor> {
        let (r, c) = a.shape();
        let out = a.with_values(|av| av.iter().map(|x| x * factor).collect());
        self.push(OpKind::Scale(factor), vec![a.clone()], r, c, out, "scale")
    }

    /// Vector splicing: two row vectors side by side.
    pub fn concat(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        for t in [a, b] {
            if t.shape().0 != 1 {
                return Err(KernelError::NotAVector {
                    op: "concat",
                    shape: t.shape(),
                });
            }
        }
        let (_, ca) = a.shape();
        let (_, cb) = b.shape();
        let mut out = a.to_vec();
        out.extend(b.to_vec());
        self.push(
            OpKind::Concat,
            vec![a.clone(), b.clone()],
            1,
            ca + cb,
            out,
            "concat",
        )
    }

    pub fn relu(&mut self, a: &Tensor) -> Result<Tensor> {
        let (r, c) = a.shape();
        let out = a.with_values(|av| av.iter().map(|x| x.max(0.0)).collect());
        self.push(OpKind::Relu, vec![a.clone()], r, c, out, "relu")
    }

    pub fn tanh(&mut self, a: &Tensor) -> Result<Tensor> {
        let (r, c) = a.shape();
        let out = a.with_values(|av| av.iter().map(|x| x.tanh()).collect());
        self.push(OpKind::Tanh, vec![a.clone()], r, c, out, "tanh")
    }

    /// Elementwise natural log. Non-positive entries surface as
    /// `NonFiniteValue`.
    pub fn log(&mut self, a: &Tensor) -> Result<Tensor> {
        let (r, c) = a.shape();
        let out = a.with_values(|av| av.iter().map(|x| x.ln()).collect());
        self.push(OpKind::Log, vec![a.clone()], r, c, out, "log")
    }

    /// Cosine similarity of two equal-length vectors, as a 1x1 scalar.
    /// Defined as 0 (with zero gradient) when either norm is below
    /// [`COSINE_NORM_EPS`].
    pub fn cosine_similarity(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        if !a.is_vector() || !b.is_vector() {
            return Err(KernelError::NotAVector {
                op: "cosine_similarity",
                shape: if a.is_vector() { b.shape() } else { a.shape() },
            });
        }
        if a.len() != b.len() {
            return Err(KernelError::ShapeMismatch {
                op: "cosine_similarity",
                lhs: a.shape(),
                rhs: b.shape(),
            });
        }
        let value = a.with_values(|u| b.with_values(|v| cosine_value(u, v)));
        self.push(
            OpKind::Cosine,
            vec![a.clone(), b.clone()],
            1,
            1,
            vec![value],
            "cosine_similarity",
        )
    }

    /// Numerically stable softmax over a vector (max-subtraction).
    pub fn softmax(&mut self, a: &Tensor) -> Result<Tensor> {
        if a.is_empty() {
            return Err(KernelError::EmptyInput { op: "softmax" });
        }
        if !a.is_vector() {
            return Err(KernelError::NotAVector {
                op: "softmax",
                shape: a.shape(),
            });
        }
        let (r, c) = a.shape();
        let out = a.with_values(|av| softmax_value(av));
        self.push(OpKind::Softmax, vec![a.clone()], r, c, out, "softmax")
    }

    /// Gathers 1x1 scalars into one row vector.
    pub fn stack_scalars(&mut self, scalars: &[Tensor]) -> Result<Tensor> {
        if scalars.is_empty() {
            return Err(KernelError::EmptyInput { op: "stack_scalars" });
        }
        for s in scalars {
            if !s.is_scalar() {
                return Err(KernelError::ShapeMismatch {
                    op: "stack_scalars",
                    lhs: (1, 1),
                    rhs: s.shape(),
                });
            }
        }
        let out: Vec<f64> = scalars.iter().map(Tensor::scalar_value).collect();
        self.push(
            OpKind::StackScalars,
            scalars.to_vec(),
            1,
            scalars.len(),
            out,
            "stack_scalars",
        )
    }

    /// Stacks equal-width row vectors into a matrix, one per row.
    pub fn vstack(&mut self, rows: &[Tensor]) -> Result<Tensor> {
        if rows.is_empty() {
            return Err(KernelError::EmptyInput { op: "vstack" });
        }
        let width = rows[0].shape().1;
        for r in rows {
            if r.shape() != (1, width) {
                return Err(KernelError::ShapeMismatch {
                    op: "vstack",
                    lhs: (1, width),
                    rhs: r.shape(),
                });
            }
        }
        let mut out = Vec::with_capacity(rows.len() * width);
        for r in rows {
            out.extend(r.to_vec());
        }
        self.push(
            OpKind::VStack,
            rows.to_vec(),
            rows.len(),
            width,
            out,
            "vstack",
        )
    }

    /// Extracts row `index` of a matrix as a 1 x cols vector.
    pub fn row(&mut self, a: &Tensor, index: usize) -> Result<Tensor> {
        let (r, c) = a.shape();
        if index >= r {
            return Err(KernelError::RowOutOfRange { index, rows: r });
        }
        let out = a.with_values(|av| av[index * c..(index + 1) * c].to_vec());
        self.push(OpKind::Row(index), vec![a.clone()], 1, c, out, "row")
    }

    /// Sum of all entries, as a 1x1 scalar.
    pub fn sum_all(&mut self, a: &Tensor) -> Result<Tensor> {
        let out = a.with_values(|av| av.iter().sum::<f64>());
        self.push(OpKind::SumAll, vec![a.clone()], 1, 1, vec![out], "sum_all")
    }

    /// Negative log-likelihood of `class` under probability vector `probs`:
    /// -ln(probs[class]).
    pub fn nll(&mut self, probs: &Tensor, class: usize) -> Result<Tensor> {
        if !probs.is_vector() {
            return Err(KernelError::NotAVector {
                op: "nll",
                shape: probs.shape(),
            });
        }
        if class >= probs.len() {
            return Err(KernelError::ClassOutOfRange {
                class,
                len: probs.len(),
            });
        }
        let out = probs.with_values(|p| -p[class].ln());
        self.push(
            OpKind::Nll(class),
            vec![probs.clone()],
            1,
            1,
            vec![out],
            "nll",
        )
    }

    /// Reverse-mode sweep from a scalar loss. Every `requires_grad` tensor
    /// reachable from the loss receives its accumulated d(loss)/d(tensor);
    /// gradients add onto whatever the buffers already hold, so calling
    /// twice without zeroing doubles them.
    pub fn backward(&self, loss: &Tensor) -> Result<()> {
        if !loss.is_scalar() {
            return Err(KernelError::NonScalarLoss(loss.shape()));
        }
        // Per-sweep gradient flows through a scratch map so repeated sweeps
        // stay independent; persistent buffers only receive the final sums.
        let mut scratch: HashMap<u64, Vec<f64>> = HashMap::new();
        scratch.insert(loss.id(), vec![1.0]);

        for entry in self.entries.iter().rev() {
            let Some(out_grad) = scratch.get(&entry.output.id()).cloned() else {
                continue;
            };
            backprop_entry(entry, &out_grad, &mut scratch);
        }

        for entry in &self.entries {
            for t in entry.inputs.iter().chain(std::iter::once(&entry.output)) {
                if t.requires_grad() {
                    if let Some(g) = scratch.remove(&t.id()) {
                        t.accumulate_grad(&g);
                    }
                }
            }
        }
        // The loss itself may be a bare leaf (empty tape): nothing to do.
        Ok(())
    }
}

fn cosine_value(u: &[f64], v: &[f64]) -> f64 {
    let nu = norm(u);
    let nv = norm(v);
    if nu < COSINE_NORM_EPS || nv < COSINE_NORM_EPS {
        return 0.0;
    }
    dot(u, v) / (nu * nv)
}

fn softmax_value(x: &[f64]) -> Vec<f64> {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn add_into(scratch: &mut HashMap<u64, Vec<f64>>, t: &Tensor, delta: Vec<f64>) {
    // Constants absorb no gradient and feed nothing upstream.
    if !t.requires_grad() {
        return;
    }
    scratch
        .entry(t.id())
        .and_modify(|g| {
            for (gi, di) in g.iter_mut().zip(&delta) {
                *gi += di;
            }
        })
        .or_insert(delta);
}

fn backprop_entry(entry: &TapeEntry, out_grad: &[f64], scratch: &mut HashMap<u64, Vec<f64>>) {
    match entry.op {
        OpKind::MatMul => {
            let a = &entry.inputs[0];
            let b = &entry.inputs[1];
            let (m, k) = a.shape();
            let (_, n) = b.shape();
            let da = b.with_values(|bv| {
                let mut da = vec![0.0; m * k];
                for i in 0..m {
                    for j in 0..n {
                        let g = out_grad[i * n + j];
                        if g == 0.0 {
                            continue;
                        }
                        for kk in 0..k {
                            da[i * k + kk] += g * bv[kk * n + j];
                        }
                    }
                }
                da
            });
            let db = a.with_values(|av| {
                let mut db = vec![0.0; k * n];
                for i in 0..m {
                    for kk in 0..k {
                        let aik = av[i * k + kk];
                        if aik == 0.0 {
                            continue;
                        }
                        for j in 0..n {
                            db[kk * n + j] += aik * out_grad[i * n + j];
                        }
                    }
                }
                db
            });
            add_into(scratch, a, da);
            add_into(scratch, b, db);
        }
        OpKind::MatVec => {
            let a = &entry.inputs[0];
            let x = &entry.inputs[1];
            let (m, k) = a.shape();
            let da = x.with_values(|xv| {
                let mut da = vec![0.0; m * k];
                for i in 0..m {
                    for j in 0..k {
                        da[i * k + j] = out_grad[i] * xv[j];
                    }
                }
                da
            });
            let dx = a.with_values(|av| {
                (0..k)
                    .map(|j| (0..m).map(|i| av[i * k + j] * out_grad[i]).sum())
                    .collect()
            });
            add_into(scratch, a, da);
            add_into(scratch, x, dx);
        }
        OpKind::Add => {
            add_into(scratch, &entry.inputs[0], out_grad.to_vec());
            add_into(scratch, &entry.inputs[1], out_grad.to_vec());
        }
        OpKind::Scale(factor) => {
            add_into(
                scratch,
                &entry.inputs[0],
                out_grad.iter().map(|g| g * factor).collect(),
            );
        }
        OpKind::Concat => {
            let a = &entry.inputs[0];
            let b = &entry.inputs[1];
            let ca = a.shape().1;
            add_into(scratch, a, out_grad[..ca].to_vec());
            add_into(scratch, b, out_grad[ca..].to_vec());
        }
        OpKind::Relu => {
            let a = &entry.inputs[0];
            let da = a.with_values(|av| {
                av.iter()
                    .zip(out_grad)
                    .map(|(x, g)| if *x > 0.0 { *g } else { 0.0 })
                    .collect()
            });
            add_into(scratch, a, da);
        }
        OpKind::Tanh => {
            let da = entry.output.with_values(|yv| {
                yv.iter()
                    .zip(out_grad)
                    .map(|(y, g)| g * (1.0 - y * y))
                    .collect()
            });
            add_into(scratch, &entry.inputs[0], da);
        }
        OpKind::Log => {
            let a = &entry.inputs[0];
            let da = a.with_values(|av| av.iter().zip(out_grad).map(|(x, g)| g / x).collect());
            add_into(scratch, a, da);
        }
        OpKind::Cosine => {
            let u = &entry.inputs[0];
            let v = &entry.inputs[1];
            let g = out_grad[0];
            let s = entry.output.scalar_value();
            let (du, dv) = u.with_values(|uv| {
                v.with_values(|vv| {
                    let nu = norm(uv);
                    let nv = norm(vv);
                    if nu < COSINE_NORM_EPS || nv < COSINE_NORM_EPS {
                        return (vec![0.0; uv.len()], vec![0.0; vv.len()]);
                    }
                    let du = uv
                        .iter()
                        .zip(vv)
                        .map(|(ui, vi)| g * (vi / (nu * nv) - s * ui / (nu * nu)))
                        .collect();
                    let dv = uv
                        .iter()
                        .zip(vv)
                        .map(|(ui, vi)| g * (ui / (nu * nv) - s * vi / (nv * nv)))
                        .collect();
                    (du, dv)
                })
            });
            add_into(scratch, u, du);
            add_into(scratch, v, dv);
        }
        OpKind::Softmax => {
            let da = entry.output.with_values(|p| {
                let weighted: f64 = p.iter().zip(out_grad).map(|(pi, gi)| pi * gi).sum();
                p.iter()
                    .zip(out_grad)
                    .map(|(pi, gi)| pi * (gi - weighted))
                    .collect()
            });
            add_into(scratch, &entry.inputs[0], da);
        }
        OpKind::StackScalars => {
            for (i, s) in entry.inputs.iter().enumerate() {
                add_into(scratch, s, vec![out_grad[i]]);
            }
        }
        OpKind::VStack => {
            let width = entry.inputs[0].shape().1;
            for (i, r) in entry.inputs.iter().enumerate() {
                add_into(scratch, r, out_grad[i * width..(i + 1) * width].to_vec());
            }
        }
        OpKind::Row(index) => {
            let a = &entry.inputs[0];
            let (rows, cols) = a.shape();
            let mut da = vec![0.0; rows * cols];
            da[index * cols..(index + 1) * cols].copy_from_slice(out_grad);
            add_into(scratch, a, da);
        }
        OpKind::SumAll => {
            let a = &entry.inputs[0];
            add_into(scratch, a, vec![out_grad[0]; a.len()]);
        }
        OpKind::Nll(class) => {
            let p = &entry.inputs[0];
            let mut dp = vec![0.0; p.len()];
            dp[class] = -out_grad[0] / p.value_at(class);
            add_into(scratch, p, dp);
        }
    }
}
