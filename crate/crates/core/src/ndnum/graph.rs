use std::collections::BTreeMap;

use super::tensor::{softmax_rows, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Input,
    MatMul,
    AddBias,
    Relu,
    SoftmaxCrossEntropy,
    GradReverse,
    Scale,
    Sum,
    Mean,
    Add,
}

#[derive(Debug, Clone)]
enum Op {
    Input,
    MatMul(NodeId, NodeId),
    AddBias(NodeId, NodeId),
    Relu(NodeId),
    SoftmaxCrossEntropy {
        logits: NodeId,
        labels: Vec<usize>,
        weights: Vec<f64>,
    },
    GradReverse {
        input: NodeId,
        lambda: f64,
    },
    Scale {
        input: NodeId,
        factor: f64,
    },
    Sum(NodeId),
    Mean(NodeId),
    Add(NodeId, NodeId),
}

impl Op {
    fn kind(&self) -> OpKind {
        match self {
            Op::Input => OpKind::Input,
            Op::MatMul(..) => OpKind::MatMul,
            Op::AddBias(..) => OpKind::AddBias,
            Op::Relu(_) => OpKind::Relu,
            Op::SoftmaxCrossEntropy { .. } => OpKind::SoftmaxCrossEntropy,
            Op::GradReverse { .. } => OpKind::GradReverse,
            Op::Scale { .. } => OpKind::Scale,
            Op::Sum(_) => OpKind::Sum,
            Op::Mean(_) => OpKind::Mean,
            Op::Add(..) => OpKind::Add,
        }
    }

    fn parents(&self) -> Vec<NodeId> {
        match *self {
            Op::Input => vec![],
            Op::MatMul(a, b) | Op::AddBias(a, b) | Op::Add(a, b) => vec![a, b],
            Op::Relu(x) | Op::Sum(x) | Op::Mean(x) => vec![x],
            Op::SoftmaxCrossEntropy { logits, .. } => vec![logits],
            Op::GradReverse { input, .. } | Op::Scale { input, .. } => vec![input],
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Option<Tensor>,
    // Softmax probabilities kept by the fused cross-entropy node.
    aux: Option<Tensor>,
}

/// Reverse-mode autodiff tape.
///
/// Nodes are appended in construction order, which is also the evaluation
/// order; `backward` walks the same list in reverse. Input nodes carry their
/// values from construction, every other node is evaluated by [`Graph::forward`].
#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    names: BTreeMap<String, NodeId>,
}

/// Gradients of a scalar root with respect to every input node.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    by_node: BTreeMap<NodeId, Tensor>,
    by_name: BTreeMap<String, Tensor>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.by_node.get(&id)
    }

    pub fn named(&self, name: &str) -> Option<&Tensor> {
        self.by_name.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.by_name.keys().map(String::as_str)
    }

    /// Gradients of the named (parameter) inputs only.
    pub fn into_named(self) -> BTreeMap<String, Tensor> {
        self.by_name
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            op,
            value: None,
            aux: None,
        });
        id
    }

    fn check(&self, id: NodeId) {
        assert!(id.0 < self.nodes.len(), "node {id:?} belongs to another graph");
    }

    /// An unnamed input (data, labels-free constants).
    pub fn input(&mut self, value: Tensor) -> NodeId {
        let id = self.push(Op::Input);
        self.nodes[id.0].value = Some(value);
        id
    }

    /// A named input whose gradient is reported under `name`.
    pub fn param(&mut self, name: &str, value: Tensor) -> Result<NodeId> {
        if self.names.contains_key(name) {
            return Err(Error::Key(format!("duplicate parameter `{name}`")));
        }
        let id = self.input(value);
        self.names.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn param_id(&self, name: &str) -> Option<NodeId> {
        self.names.get(name).copied()
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.check(a);
        self.check(b);
        self.push(Op::MatMul(a, b))
    }

    /// Adds a length-`n` bias to every row of a `B x n` matrix.
    pub fn add_bias(&mut self, x: NodeId, bias: NodeId) -> NodeId {
        self.check(x);
        self.check(bias);
        self.push(Op::AddBias(x, bias))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        self.check(x);
        self.push(Op::Relu(x))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.check(a);
        self.check(b);
        self.push(Op::Add(a, b))
    }

    pub fn scale(&mut self, x: NodeId, factor: f64) -> Result<NodeId> {
        self.check(x);
        if !factor.is_finite() {
            return Err(Error::Contract(format!("scale factor {factor} is not finite")));
        }
        Ok(self.push(Op::Scale { input: x, factor }))
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        self.check(x);
        self.push(Op::Sum(x))
    }

    pub fn mean(&mut self, x: NodeId) -> NodeId {
        self.check(x);
        self.push(Op::Mean(x))
    }

    /// Identity in the forward pass; multiplies the incoming gradient by
    /// `-lambda` in the backward pass.
    pub fn grad_reverse(&mut self, x: NodeId, lambda: f64) -> Result<NodeId> {
        self.check(x);
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::Contract(format!(
                "gradient reversal coefficient must be finite and >= 0, got {lambda}"
            )));
        }
        Ok(self.push(Op::GradReverse { input: x, lambda }))
    }

    /// Fused softmax + weighted cross-entropy over a `B x K` logit matrix:
    /// `(1/B) * sum_i weights[y_i] * -log softmax(logits_i)[y_i]`.
    pub fn softmax_cross_entropy(
        &mut self,
        logits: NodeId,
        labels: &[usize],
        weights: &[f64],
    ) -> Result<NodeId> {
        self.check(logits);
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Contract(format!(
                "class weights must be finite and non-negative, got {weights:?}"
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= weights.len()) {
            return Err(Error::Label {
                label: bad,
                classes: weights.len(),
            });
        }
        Ok(self.push(Op::SoftmaxCrossEntropy {
            logits,
            labels: labels.to_vec(),
            weights: weights.to_vec(),
        }))
    }

    pub fn kind(&self, id: NodeId) -> OpKind {
        self.nodes[id.0].op.kind()
    }

    pub fn parents(&self, id: NodeId) -> Vec<NodeId> {
        self.nodes[id.0].op.parents()
    }

    /// Cached value of a node, available once it has been evaluated.
    pub fn value(&self, id: NodeId) -> Option<&Tensor> {
        self.nodes.get(id.0).and_then(|n| n.value.as_ref())
    }

    /// Evaluates every node up to and including `root`, caching values for
    /// the backward pass.
    pub fn forward(&mut self, root: NodeId) -> Result<&Tensor> {
        self.check(root);
        for i in 0..=root.0 {
            if self.nodes[i].value.is_some() {
                continue;
            }
            let (value, aux) = self.eval(i)?;
            self.nodes[i].value = Some(value);
            self.nodes[i].aux = aux;
        }
        Ok(self.nodes[root.0].value.as_ref().expect("evaluated above"))
    }

    fn val(&self, id: NodeId) -> &Tensor {
        self.nodes[id.0]
            .value
            .as_ref()
            .expect("parents precede children in evaluation order")
    }

    fn eval(&self, i: usize) -> Result<(Tensor, Option<Tensor>)> {
        let out = match &self.nodes[i].op {
            Op::Input => unreachable!("inputs are valued at construction"),
            Op::MatMul(a, b) => self.val(*a).matmul(self.val(*b))?,
            Op::AddBias(x, b) => {
                let (x, b) = (self.val(*x), self.val(*b));
                if x.shape().len() != 2 || b.shape() != [x.cols()] {
                    return Err(Error::Shape {
                        op: "add_bias",
                        left: x.shape().to_vec(),
                        right: b.shape().to_vec(),
                    });
                }
                let mut out = x.clone();
                let c = x.cols();
                for (k, v) in out.data_mut().iter_mut().enumerate() {
                    *v += b.data()[k % c];
                }
                out
            }
            Op::Relu(x) => self.val(*x).map(|v| if v > 0.0 { v } else { 0.0 }),
            Op::Add(a, b) => {
                let (a, b) = (self.val(*a), self.val(*b));
                if a.shape() != b.shape() {
                    return Err(Error::Shape {
                        op: "add",
                        left: a.shape().to_vec(),
                        right: b.shape().to_vec(),
                    });
                }
                let mut out = a.clone();
                out.add_assign(b);
                out
            }
            Op::Scale { input, factor } => self.val(*input).map(|v| v * factor),
            Op::GradReverse { input, .. } => self.val(*input).clone(),
            Op::Sum(x) => Tensor::scalar(self.val(*x).data().iter().sum()),
            Op::Mean(x) => {
                let x = self.val(*x);
                Tensor::scalar(x.data().iter().sum::<f64>() / x.numel() as f64)
            }
            Op::SoftmaxCrossEntropy {
                logits,
                labels,
                weights,
            } => {
                let z = self.val(*logits);
                if z.shape() != [labels.len(), weights.len()] {
                    return Err(Error::Shape {
                        op: "softmax_cross_entropy",
                        left: z.shape().to_vec(),
                        right: vec![labels.len(), weights.len()],
                    });
                }
                let mut total = 0.0;
                for (i, &y) in labels.iter().enumerate() {
                    let row = z.row(i);
                    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                    total += weights[y] * (lse - row[y]);
                }
                let probs = softmax_rows(z);
                return Ok((
                    Tensor::scalar(total / labels.len() as f64),
                    Some(probs),
                ));
            }
        };
        Ok((out, None))
    }

    /// Gradients of the scalar `root` with respect to every input node.
    pub fn backward(&self, root: NodeId) -> Result<Gradients> {
        self.check(root);
        let root_value = self.nodes[root.0].value.as_ref().ok_or_else(|| {
            Error::State("backward called before forward evaluated the root".into())
        })?;
        if root_value.numel() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar root, got shape {:?}",
                root_value.shape()
            )));
        }

        let mut grads: Vec<Option<Tensor>> = vec![None; root.0 + 1];
        grads[root.0] = Some(Tensor::filled(root_value.shape(), 1.0));

        for i in (0..=root.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Input => {
                    grads[i] = Some(g);
                    continue;
                }
                Op::MatMul(a, b) => {
                    let da = g.matmul_nt(self.val(*b));
                    let db = self.val(*a).matmul_tn(&g);
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::AddBias(x, b) => {
                    let c = g.cols();
                    let mut db = vec![0.0; c];
                    for (k, v) in g.data().iter().enumerate() {
                        db[k % c] += v;
                    }
                    accumulate(&mut grads, *b, Tensor::vector(db));
                    accumulate(&mut grads, *x, g);
                }
                Op::Relu(x) => {
                    let xin = self.val(*x);
                    let mut dx = g;
                    for (d, &v) in dx.data_mut().iter_mut().zip(xin.data()) {
                        if v <= 0.0 {
                            *d = 0.0;
                        }
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g);
                }
                Op::Scale { input, factor } => {
                    accumulate(&mut grads, *input, g.map(|v| v * factor));
                }
                Op::GradReverse { input, lambda } => {
                    accumulate(&mut grads, *input, g.map(|v| -lambda * v));
                }
                Op::Sum(x) => {
                    let gv = g.data()[0];
                    accumulate(&mut grads, *x, Tensor::filled(self.val(*x).shape(), gv));
                }
                Op::Mean(x) => {
                    let xin = self.val(*x);
                    let gv = g.data()[0] / xin.numel() as f64;
                    accumulate(&mut grads, *x, Tensor::filled(xin.shape(), gv));
                }
                Op::SoftmaxCrossEntropy {
                    logits,
                    labels,
                    weights,
                } => {
                    let probs = node.aux.as_ref().expect("cached by forward");
                    let gv = g.data()[0];
                    let n = labels.len() as f64;
                    let mut dz = probs.clone();
                    let k = probs.cols();
                    for (r, &y) in labels.iter().enumerate() {
                        let s = gv * weights[y] / n;
                        let row = &mut dz.data_mut()[r * k..(r + 1) * k];
                        row[y] -= 1.0;
                        for v in row.iter_mut() {
                            *v *= s;
                        }
                    }
                    accumulate(&mut grads, *logits, dz);
                }
            }
        }

        let mut out = Gradients::default();
        for (i, node) in self.nodes.iter().enumerate().take(root.0 + 1) {
            if let Op::Input = node.op {
                let g = grads[i]
                    .take()
                    .unwrap_or_else(|| Tensor::zeros(self.val(NodeId(i)).shape()));
                out.by_node.insert(NodeId(i), g);
            }
        }
        for (name, id) in &self.names {
            let g = out
                .by_node
                .get(id)
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(self.val(*id).shape()));
            out.by_name.insert(name.clone(), g);
        }
        Ok(out)
    }
}

fn accumulate(grads: &mut [Option<Tensor>], id: NodeId, g: Tensor) {
    match &mut grads[id.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}
