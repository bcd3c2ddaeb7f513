//! Tape-based reverse-mode autodiff over row-major f64 matrices.
//!
//! The tape records operations eagerly: building a node computes its value
//! immediately. Values are plain `(rows, cols)` matrices; batched per-object
//! tensors are stored with the leading dimensions flattened into rows, e.g. a
//! `(batch, objects, features)` tensor is a `(batch * objects, features)`
//! matrix. Two graph ops, [`Tape::pair_concat`] and
//! [`Tape::masked_pair_sum`], encode the object structure explicitly.
//!
//! Shape mismatches are programmer errors and panic with both shapes in the
//! message. `backward` walks the tape in reverse creation order (a valid
//! topological order, since inputs always precede their consumers) and
//! returns one gradient per parameter in the flat [`ParamStore`] layout.
//! Parameters that do not participate in the loss get exactly 0.

use super::params::ParamStore;

/// Row-major matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "tensor data length {} does not match shape ({rows}, {cols})",
            data.len()
        );
        Tensor { rows, cols, data }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor::from_vec(1, 1, vec![v])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Input,
    /// Snapshot of a parameter block at record time, viewed as a matrix.
    Param { block: usize },
    Affine { x: NodeId, w: NodeId, b: NodeId },
    Relu(NodeId),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Exp(NodeId),
    Softplus(NodeId),
    Ln(NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    /// Elementwise product; if `b` has one column it broadcasts across the
    /// columns of `a`.
    Mul(NodeId, NodeId),
    Scale { x: NodeId, c: f64 },
    AddConst { x: NodeId, c: f64 },
    /// Clamp to [lo, hi]; gradient is zero outside the open interval.
    Clamp { x: NodeId, lo: f64, hi: f64 },
    ConcatCols(NodeId, NodeId),
    SliceCols { x: NodeId, lo: usize, hi: usize },
    /// Same element order, different (rows, cols) factorization.
    Reshape { x: NodeId, rows: usize, cols: usize },
    /// (batch*o, f) -> (batch*o*o, 2f); row (b,i,j) is [x[b,i], x[b,j]].
    PairConcat { x: NodeId, objects: usize },
    /// (batch*o*o, c) -> (batch*o, c); out[b,i] = sum over j != i of x[b,i,j].
    MaskedPairSum { x: NodeId, objects: usize },
    /// (batch*g, c) -> (batch, c); out[b] = sum over g.
    GroupSumRows { x: NodeId, group: usize },
    SumAll(NodeId),
    MeanAll(NodeId),
}

pub struct Tape<'s> {
    store: &'s ParamStore,
    ops: Vec<Op>,
    vals: Vec<Tensor>,
}

impl<'s> Tape<'s> {
    pub fn new(store: &'s ParamStore) -> Self {
        Tape {
            store,
            ops: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.vals[id.0]
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    fn push(&mut self, op: Op) -> NodeId {
        let val = self.eval(&op);
        self.ops.push(op);
        self.vals.push(val);
        NodeId(self.ops.len() - 1)
    }

    pub fn input(&mut self, t: Tensor) -> NodeId {
        self.ops.push(Op::Input);
        self.vals.push(t);
        NodeId(self.ops.len() - 1)
    }

    /// Records a parameter block as a leaf. Blocks of rank 1 become row
    /// vectors, rank 2 keep their shape; higher ranks are rejected because no
    /// op consumes them.
    pub fn param(&mut self, name: &str) -> NodeId {
        let block = self.store.block(name);
        assert!(
            block.shape.len() <= 2,
            "parameter {name:?} has rank {} but the tape only handles vectors and matrices",
            block.shape.len()
        );
        let idx = self
            .store
            .blocks()
            .iter()
            .position(|b| b.name == block.name)
            .expect("block resolved above");
        self.push(Op::Param { block: idx })
    }

    pub fn affine(&mut self, x: NodeId, w: NodeId, b: NodeId) -> NodeId {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        assert_eq!(
            xv.cols, wv.rows,
            "affine: input ({}, {}) does not match weights ({}, {})",
            xv.rows, xv.cols, wv.rows, wv.cols
        );
        assert!(
            bv.rows == 1 && bv.cols == wv.cols,
            "affine: bias ({}, {}) does not match weights ({}, {})",
            bv.rows, bv.cols, wv.rows, wv.cols
        );
        self.push(Op::Affine { x, w, b })
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        self.push(Op::Relu(x))
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        self.push(Op::Tanh(x))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        self.push(Op::Sigmoid(x))
    }

    pub fn exp(&mut self, x: NodeId) -> NodeId {
        self.push(Op::Exp(x))
    }

    pub fn softplus(&mut self, x: NodeId) -> NodeId {
        self.push(Op::Softplus(x))
    }

    pub fn ln(&mut self, x: NodeId) -> NodeId {
        self.push(Op::Ln(x))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.assert_same_shape("add", a, b);
        self.push(Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.assert_same_shape("sub", a, b);
        self.push(Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (av, bv) = (self.value(a), self.value(b));
        let broadcast = bv.cols == 1 && av.rows == bv.rows;
        assert!(
            broadcast || (av.rows == bv.rows && av.cols == bv.cols),
            "mul: ({}, {}) against ({}, {})",
            av.rows, av.cols, bv.rows, bv.cols
        );
        self.push(Op::Mul(a, b))
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> NodeId {
        self.push(Op::Scale { x, c })
    }

    pub fn add_const(&mut self, x: NodeId, c: f64) -> NodeId {
        self.push(Op::AddConst { x, c })
    }

    pub fn clamp(&mut self, x: NodeId, lo: f64, hi: f64) -> NodeId {
        assert!(lo < hi, "clamp: empty interval [{lo}, {hi}]");
        self.push(Op::Clamp { x, lo, hi })
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(
            av.rows, bv.rows,
            "concat_cols: ({}, {}) against ({}, {})",
            av.rows, av.cols, bv.rows, bv.cols
        );
        self.push(Op::ConcatCols(a, b))
    }

    pub fn slice_cols(&mut self, x: NodeId, lo: usize, hi: usize) -> NodeId {
        let xv = self.value(x);
        assert!(
            lo < hi && hi <= xv.cols,
            "slice_cols: [{lo}, {hi}) out of range for {} columns",
            xv.cols
        );
        self.push(Op::SliceCols { x, lo, hi })
    }

    pub fn reshape(&mut self, x: NodeId, rows: usize, cols: usize) -> NodeId {
        let xv = self.value(x);
        assert_eq!(
            xv.rows * xv.cols,
            rows * cols,
            "reshape: ({}, {}) cannot become ({rows}, {cols})",
            xv.rows, xv.cols
        );
        self.push(Op::Reshape { x, rows, cols })
    }

    pub fn pair_concat(&mut self, x: NodeId, objects: usize) -> NodeId {
        let xv = self.value(x);
        assert!(objects >= 1 && xv.rows % objects == 0,
            "pair_concat: {} rows do not factor into batches of {objects} objects",
            xv.rows
        );
        self.push(Op::PairConcat { x, objects })
    }

    pub fn masked_pair_sum(&mut self, x: NodeId, objects: usize) -> NodeId {
        let xv = self.value(x);
        assert!(
            objects >= 1 && xv.rows % (objects * objects) == 0,
            "masked_pair_sum: {} rows do not factor into batches of {objects}^2 pairs",
            xv.rows
        );
        self.push(Op::MaskedPairSum { x, objects })
    }

    pub fn group_sum_rows(&mut self, x: NodeId, group: usize) -> NodeId {
        let xv = self.value(x);
        assert!(
            group >= 1 && xv.rows % group == 0,
            "group_sum_rows: {} rows do not factor into groups of {group}",
            xv.rows
        );
        self.push(Op::GroupSumRows { x, group })
    }

    pub fn sum_all(&mut self, x: NodeId) -> NodeId {
        self.push(Op::SumAll(x))
    }

    pub fn mean_all(&mut self, x: NodeId) -> NodeId {
        self.push(Op::MeanAll(x))
    }

    fn assert_same_shape(&self, what: &str, a: NodeId, b: NodeId) {
        let (av, bv) = (self.value(a), self.value(b));
        assert!(
            av.rows == bv.rows && av.cols == bv.cols,
            "{what}: ({}, {}) against ({}, {})",
            av.rows, av.cols, bv.rows, bv.cols
        );
    }

    /// Computes the value of one op from already-recorded inputs. `push` and
    /// `replay` share this, so replaying is bit-identical by construction.
    fn eval(&self, op: &Op) -> Tensor {
        match *op {
            Op::Input => unreachable!("inputs carry their own value"),
            Op::Param { block } => {
                let b = &self.store.blocks()[block];
                let (rows, cols) = match b.shape.len() {
                    1 => (1, b.shape[0]),
                    2 => (b.shape[0], b.shape[1]),
                    _ => unreachable!("checked at record time"),
                };
                Tensor::from_vec(rows, cols, self.store.data()[b.offset..b.offset + b.len].to_vec())
            }
            Op::Affine { x, w, b } => {
                let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
                let mut out = Tensor::zeros(xv.rows, wv.cols);
                for r in 0..xv.rows {
                    let orow = &mut out.data[r * wv.cols..(r + 1) * wv.cols];
                    orow.copy_from_slice(&bv.data);
                    let xrow = xv.row(r);
                    for (i, &a) in xrow.iter().enumerate() {
                        axpy(orow, a, wv.row(i));
                    }
                }
                out
            }
            Op::Relu(x) => self.map(x, |v| if v > 0.0 { v } else { 0.0 }),
            Op::Tanh(x) => self.map(x, f64::tanh),
            Op::Sigmoid(x) => self.map(x, sigmoid),
            Op::Exp(x) => self.map(x, f64::exp),
            Op::Softplus(x) => self.map(x, softplus),
            Op::Ln(x) => self.map(x, f64::ln),
            Op::Add(a, b) => self.zip(a, b, |x, y| x + y),
            Op::Sub(a, b) => self.zip(a, b, |x, y| x - y),
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(a), self.value(b));
                let mut out = av.clone();
                if bv.cols == 1 && av.cols != 1 {
                    for r in 0..av.rows {
                        let s = bv.data[r];
                        for v in &mut out.data[r * av.cols..(r + 1) * av.cols] {
                            *v *= s;
                        }
                    }
                } else {
                    for (o, y) in out.data.iter_mut().zip(&bv.data) {
                        *o *= y;
                    }
                }
                out
            }
            Op::Scale { x, c } => self.map(x, |v| v * c),
            Op::AddConst { x, c } => self.map(x, |v| v + c),
            Op::Clamp { x, lo, hi } => self.map(x, |v| v.clamp(lo, hi)),
            Op::ConcatCols(a, b) => {
                let (av, bv) = (self.value(a), self.value(b));
                let cols = av.cols + bv.cols;
                let mut out = Tensor::zeros(av.rows, cols);
                for r in 0..av.rows {
                    out.data[r * cols..r * cols + av.cols].copy_from_slice(av.row(r));
                    out.data[r * cols + av.cols..(r + 1) * cols].copy_from_slice(bv.row(r));
                }
                out
            }
            Op::SliceCols { x, lo, hi } => {
                let xv = self.value(x);
                let cols = hi - lo;
                let mut out = Tensor::zeros(xv.rows, cols);
                for r in 0..xv.rows {
                    out.data[r * cols..(r + 1) * cols]
                        .copy_from_slice(&xv.row(r)[lo..hi]);
                }
                out
            }
            Op::Reshape { x, rows, cols } => {
                let xv = self.value(x);
                Tensor::from_vec(rows, cols, xv.data.clone())
            }
            Op::PairConcat { x, objects } => {
                let xv = self.value(x);
                let (o, f) = (objects, xv.cols);
                let batches = xv.rows / o;
                let mut out = Tensor::zeros(batches * o * o, 2 * f);
                for b in 0..batches {
                    for i in 0..o {
                        for j in 0..o {
                            let n = ((b * o + i) * o + j) * 2 * f;
                            out.data[n..n + f].copy_from_slice(xv.row(b * o + i));
                            out.data[n + f..n + 2 * f].copy_from_slice(xv.row(b * o + j));
                        }
                    }
                }
                out
            }
            Op::MaskedPairSum { x, objects } => {
                let xv = self.value(x);
                let (o, c) = (objects, xv.cols);
                let batches = xv.rows / (o * o);
                let mut out = Tensor::zeros(batches * o, c);
                let mut acc = ExactSum::default();
                for b in 0..batches {
                    for i in 0..o {
                        let orow = &mut out.data[(b * o + i) * c..(b * o + i + 1) * c];
                        for (k, slot) in orow.iter_mut().enumerate() {
                            acc.clear();
                            for j in 0..o {
                                if i == j {
                                    continue;
                                }
                                acc.add(xv.row((b * o + i) * o + j)[k]);
                            }
                            *slot = acc.total();
                        }
                    }
                }
                out
            }
            Op::GroupSumRows { x, group } => {
                let xv = self.value(x);
                let c = xv.cols;
                let batches = xv.rows / group;
                let mut out = Tensor::zeros(batches, c);
                let mut acc = ExactSum::default();
                for b in 0..batches {
                    let orow = &mut out.data[b * c..(b + 1) * c];
                    for (k, slot) in orow.iter_mut().enumerate() {
                        acc.clear();
                        for g in 0..group {
                            acc.add(xv.row(b * group + g)[k]);
                        }
                        *slot = acc.total();
                    }
                }
                out
            }
            Op::SumAll(x) => Tensor::scalar(self.value(x).data.iter().sum()),
            Op::MeanAll(x) => {
                let xv = self.value(x);
                Tensor::scalar(xv.data.iter().sum::<f64>() / xv.data.len() as f64)
            }
        }
    }

    fn map(&self, x: NodeId, f: impl Fn(f64) -> f64) -> Tensor {
        let xv = self.value(x);
        Tensor {
            rows: xv.rows,
            cols: xv.cols,
            data: xv.data.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip(&self, a: NodeId, b: NodeId, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (av, bv) = (self.value(a), self.value(b));
        Tensor {
            rows: av.rows,
            cols: av.cols,
            data: av.data.iter().zip(&bv.data).map(|(&x, &y)| f(x, y)).collect(),
        }
    }

    /// Recomputes every non-leaf value from the recorded ops. Used by tests
    /// to check that the tape is a faithful, replayable program.
    pub fn replay(&self) -> Vec<Tensor> {
        let mut out = Vec::with_capacity(self.ops.len());
        for (i, op) in self.ops.iter().enumerate() {
            let v = match op {
                Op::Input => self.vals[i].clone(),
                _ => self.eval(op),
            };
            out.push(v);
        }
        out
    }

    /// Reverse-mode sweep from a scalar loss. Returns gradients for every
    /// parameter in the store's flat layout; parameters the loss does not
    /// depend on get exactly 0.
    pub fn backward(&self, loss: NodeId) -> crate::Result<Vec<f64>> {
        let lv = self.value(loss);
        if lv.rows != 1 || lv.cols != 1 {
            return Err(crate::Error::Config(format!(
                "backward needs a scalar loss, got shape ({}, {})",
                lv.rows, lv.cols
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.ops.len()];
        grads[loss.0] = Some(Tensor::scalar(1.0));
        let mut out = vec![0.0; self.store.len()];

        for i in (0..self.ops.len()).rev() {
            let Some(g) = grads[i].take() else { continue };
            match self.ops[i] {
                Op::Input => {}
                Op::Param { block } => {
                    let b = &self.store.blocks()[block];
                    axpy(&mut out[b.offset..b.offset + b.len], 1.0, &g.data);
                }
                Op::Affine { x, w, b } => {
                    let (xv, wv) = (self.value(x), self.value(w));
                    let (rows, i_dim, j_dim) = (xv.rows, wv.rows, wv.cols);
                    // dx = dy . w^T, via an explicit transpose so the inner
                    // loop is an axpy rather than a dot.
                    let mut wt = vec![0.0; i_dim * j_dim];
                    for r in 0..i_dim {
                        for c in 0..j_dim {
                            wt[c * i_dim + r] = wv.data[r * j_dim + c];
                        }
                    }
                    {
                        let dx = self.grad_slot(&mut grads, x);
                        for r in 0..rows {
                            let drow = &mut dx.data[r * i_dim..(r + 1) * i_dim];
                            let grow = &g.data[r * j_dim..(r + 1) * j_dim];
                            for (j, &gj) in grow.iter().enumerate() {
                                axpy(drow, gj, &wt[j * i_dim..(j + 1) * i_dim]);
                            }
                        }
                    }
                    {
                        let dw = self.grad_slot(&mut grads, w);
                        for r in 0..rows {
                            let xrow = xv.row(r);
                            let grow = &g.data[r * j_dim..(r + 1) * j_dim];
                            for (ii, &xi) in xrow.iter().enumerate() {
                                axpy(&mut dw.data[ii * j_dim..(ii + 1) * j_dim], xi, grow);
                            }
                        }
                    }
                    {
                        let db = self.grad_slot(&mut grads, b);
                        for r in 0..rows {
                            axpy(&mut db.data, 1.0, &g.data[r * j_dim..(r + 1) * j_dim]);
                        }
                    }
                }
                Op::Relu(x) => {
                    let xv = self.value(x);
                    let dx = self.grad_slot(&mut grads, x);
                    for (d, (&gv, &xvv)) in dx.data.iter_mut().zip(g.data.iter().zip(&xv.data)) {
                        if xvv > 0.0 {
                            *d += gv;
                        }
                    }
                }
                Op::Tanh(x) => {
                    let yv = &self.vals[i];
                    let dx = self.grad_slot(&mut grads, x);
                    for (d, (&gv, &y)) in dx.data.iter_mut().zip(g.data.iter().zip(&yv.data)) {
                        *d += gv * (1.0 - y * y);
                    }
                }
                Op::Sigmoid(x) => {
                    let yv = &self.vals[i];
                    let dx = self.grad_slot(&mut grads, x);
                    for (d, (&gv, &y)) in dx.data.iter_mut().zip(g.data.iter().zip(&yv.data)) {
                        *d += gv * y * (1.0 - y);
                    }
                }
                Op::Exp(x) => {
                    let yv = &self.vals[i];
                    let dx = self.grad_slot(&mut grads, x);
                    for (d, (&gv, &y)) in dx.data.iter_mut().zip(g.data.iter().zip(&yv.data)) {
                        *d += gv * y;
                    }
                }
                Op::Softplus(x) => {
                    let xv = self.value(x);
                    let dx = self.grad_slot(&mut grads, x);
                    for (d, (&gv, &xvv)) in dx.data.iter_mut().zip(g.data.iter().zip(&xv.data)) {
                        *d += gv * sigmoid(xvv);
                    }
                }
                Op::Ln(x) => {
                    let xv = self.value(x);
                    let dx = self.grad_slot(&mut grads, x);
                    for (d, (&gv, &xvv)) in dx.data.iter_mut().zip(g.data.iter().zip(&xv.data)) {
                        *d += gv / xvv;
                    }
                }
                Op::Add(a, b) => {
                    axpy(&mut self.grad_slot(&mut grads, a).data, 1.0, &g.data);
                    axpy(&mut self.grad_slot(&mut grads, b).data, 1.0, &g.data);
                }
                Op::Sub(a, b) => {
                    axpy(&mut self.grad_slot(&mut grads, a).data, 1.0, &g.data);
                    axpy(&mut self.grad_slot(&mut grads, b).data, -1.0, &g.data);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(a), self.value(b));
                    if bv.cols == 1 && av.cols != 1 {
                        {
                            let da = self.grad_slot(&mut grads, a);
                            for r in 0..av.rows {
                                let s = bv.data[r];
                                let drow = &mut da.data[r * av.cols..(r + 1) * av.cols];
                                axpy(drow, s, &g.data[r * av.cols..(r + 1) * av.cols]);
                            }
                        }
                        let db = self.grad_slot(&mut grads, b);
                        for r in 0..av.rows {
                            let grow = &g.data[r * av.cols..(r + 1) * av.cols];
                            let mut acc = 0.0;
                            for (gv, x) in grow.iter().zip(av.row(r)) {
                                acc += gv * x;
                            }
                            db.data[r] += acc;
                        }
                    } else {
                        {
                            let da = self.grad_slot(&mut grads, a);
                            for (d, (&gv, &y)) in
                                da.data.iter_mut().zip(g.data.iter().zip(&bv.data))
                            {
                                *d += gv * y;
                            }
                        }
                        let db = self.grad_slot(&mut grads, b);
                        for (d, (&gv, &x)) in db.data.iter_mut().zip(g.data.iter().zip(&av.data)) {
                            *d += gv * x;
                        }
                    }
                }
                Op::Scale { x, c } => {
                    axpy(&mut self.grad_slot(&mut grads, x).data, c, &g.data);
                }
                Op::AddConst { x, .. } => {
                    axpy(&mut self.grad_slot(&mut grads, x).data, 1.0, &g.data);
                }
                Op::Clamp { x, lo, hi } => {
                    let xv = self.value(x);
                    let dx = self.grad_slot(&mut grads, x);
                    for (d, (&gv, &xvv)) in dx.data.iter_mut().zip(g.data.iter().zip(&xv.data)) {
                        if xvv > lo && xvv < hi {
                            *d += gv;
                        }
                    }
                }
                Op::ConcatCols(a, b) => {
                    let (ac, bc) = (self.value(a).cols, self.value(b).cols);
                    let rows = self.value(a).rows;
                    {
                        let da = self.grad_slot(&mut grads, a);
                        for r in 0..rows {
                            let grow = &g.data[r * (ac + bc)..r * (ac + bc) + ac];
                            axpy(&mut da.data[r * ac..(r + 1) * ac], 1.0, grow);
                        }
                    }
                    let db = self.grad_slot(&mut grads, b);
                    for r in 0..rows {
                        let grow = &g.data[r * (ac + bc) + ac..(r + 1) * (ac + bc)];
                        axpy(&mut db.data[r * bc..(r + 1) * bc], 1.0, grow);
                    }
                }
                Op::SliceCols { x, lo, hi } => {
                    let xc = self.value(x).cols;
                    let rows = self.value(x).rows;
                    let dx = self.grad_slot(&mut grads, x);
                    for r in 0..rows {
                        let drow = &mut dx.data[r * xc + lo..r * xc + hi];
                        axpy(drow, 1.0, &g.data[r * (hi - lo)..(r + 1) * (hi - lo)]);
                    }
                }
                Op::Reshape { x, .. } => {
                    axpy(&mut self.grad_slot(&mut grads, x).data, 1.0, &g.data);
                }
                Op::PairConcat { x, objects } => {
                    let f = self.value(x).cols;
                    let o = objects;
                    let batches = self.value(x).rows / o;
                    let dx = self.grad_slot(&mut grads, x);
                    for b in 0..batches {
                        for ii in 0..o {
                            for j in 0..o {
                                let n = ((b * o + ii) * o + j) * 2 * f;
                                axpy(
                                    &mut dx.data[(b * o + ii) * f..(b * o + ii + 1) * f],
                                    1.0,
                                    &g.data[n..n + f],
                                );
                                axpy(
                                    &mut dx.data[(b * o + j) * f..(b * o + j + 1) * f],
                                    1.0,
                                    &g.data[n + f..n + 2 * f],
                                );
                            }
                        }
                    }
                }
                Op::MaskedPairSum { x, objects } => {
                    let c = self.value(x).cols;
                    let o = objects;
                    let batches = self.value(x).rows / (o * o);
                    let dx = self.grad_slot(&mut grads, x);
                    for b in 0..batches {
                        for ii in 0..o {
                            let grow = &g.data[(b * o + ii) * c..(b * o + ii + 1) * c];
                            for j in 0..o {
                                if ii == j {
                                    continue;
                                }
                                let n = (b * o + ii) * o + j;
                                axpy(&mut dx.data[n * c..(n + 1) * c], 1.0, grow);
                            }
                        }
                    }
                }
                Op::GroupSumRows { x, group } => {
                    let c = self.value(x).cols;
                    let batches = self.value(x).rows / group;
                    let dx = self.grad_slot(&mut grads, x);
                    for b in 0..batches {
                        let grow = &g.data[b * c..(b + 1) * c];
                        for gidx in 0..group {
                            let n = b * group + gidx;
                            axpy(&mut dx.data[n * c..(n + 1) * c], 1.0, grow);
                        }
                    }
                }
                Op::SumAll(x) => {
                    let gv = g.data[0];
                    for d in &mut self.grad_slot(&mut grads, x).data {
                        *d += gv;
                    }
                }
                Op::MeanAll(x) => {
                    let n = self.value(x).data.len() as f64;
                    let gv = g.data[0] / n;
                    for d in &mut self.grad_slot(&mut grads, x).data {
                        *d += gv;
                    }
                }
            }
        }
        Ok(out)
    }

    #[allow(clippy::mut_from_ref)]
    fn grad_slot<'a>(&self, grads: &'a mut [Option<Tensor>], id: NodeId) -> &'a mut Tensor {
        let v = self.value(id);
        grads[id.0].get_or_insert_with(|| Tensor::zeros(v.rows, v.cols))
    }
}

/// y += a * x, the only inner loop the engine needs.
#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Correctly rounded running sum over non-overlapping partials.
///
/// Ordinary left-to-right addition rounds after every addend, so the result
/// depends on the order the addends arrive in. This accumulator instead keeps
/// the running sum as a list of non-overlapping doubles whose exact sum is the
/// exact sum of everything added so far, and rounds once at the end. The total
/// is therefore a function of the multiset of addends alone, which is what
/// makes the pair and group reductions bit-identical under any reordering of
/// the rows they sum over.
///
/// Non-finite addends (or intermediate overflow past f64 range) poison the
/// total to NaN or infinity; callers only feed finite values.
#[derive(Default)]
struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    fn clear(&mut self) {
        self.partials.clear();
    }

    fn add(&mut self, v: f64) {
        let mut x = v;
        let mut keep = 0;
        for k in 0..self.partials.len() {
            let mut y = self.partials[k];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[keep] = lo;
                keep += 1;
            }
            x = hi;
        }
        self.partials.truncate(keep);
        self.partials.push(x);
    }

    fn total(&self) -> f64 {
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            n -= 1;
            let x = hi;
            let y = p[n];
            hi = x + y;
            lo = y - (hi - x);
            if lo != 0.0 {
                break;
            }
        }
        // The partials below the first inexact addition can only matter when
        // the discarded half-ulp sits exactly on a rounding tie; nudge the
        // total by a whole ulp when they push the tie in the same direction.
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable ln(1 + e^x).
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}
