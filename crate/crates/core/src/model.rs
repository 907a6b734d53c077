//! Encoder, mental-health classifier and gender discriminator.
//!
//! The encoder is a stack of `affine -> ReLU` blocks over fixed-size input
//! embeddings. Both heads share one shape, `affine -> ReLU -> affine`, and
//! produce two logits that are turned into probabilities with a softmax. The
//! discriminator reads the representation through a gradient-reversal node.
//!
//! Weights are stored `fan_in x fan_out`, so a layer computes `x W + b`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndnum::{softmax_rows, Graph, NodeId, Tensor};

pub const NUM_CLASSES: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub encoder_layers: usize,
    pub encoder_hidden: usize,
    pub head_hidden: usize,
    pub num_classes: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_dim: 768,
            encoder_layers: 2,
            encoder_hidden: 128,
            head_hidden: 256,
            num_classes: NUM_CLASSES,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("input_dim", self.input_dim),
            ("encoder_layers", self.encoder_layers),
            ("encoder_hidden", self.encoder_hidden),
            ("head_hidden", self.head_hidden),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("model.{name} must be positive")));
            }
        }
        if self.num_classes != NUM_CLASSES {
            return Err(Error::Config(format!(
                "model.num_classes is fixed at {NUM_CLASSES}, got {}",
                self.num_classes
            )));
        }
        Ok(())
    }

    /// Number of scalar parameters `init_params` creates.
    pub fn param_count(&self) -> usize {
        let (d, h, k, c) = (
            self.input_dim,
            self.encoder_hidden,
            self.head_hidden,
            self.num_classes,
        );
        let encoder = d * h + h + (self.encoder_layers - 1) * (h * h + h);
        let head = h * k + k + k * c + c;
        encoder + 2 * head
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Encoder,
    Classifier,
    Discriminator,
}

impl Component {
    pub const ALL: [Component; 3] = [
        Component::Encoder,
        Component::Classifier,
        Component::Discriminator,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            Component::Encoder => "encoder.",
            Component::Classifier => "classifier.",
            Component::Discriminator => "discriminator.",
        }
    }

    pub fn owns(self, name: &str) -> bool {
        name.starts_with(self.prefix())
    }
}

fn layer_name(component: Component, layer: usize, what: &str) -> String {
    format!("{}{layer}.{what}", component.prefix())
}

/// Named parameter tensors of the whole network.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    entries: BTreeMap<String, Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) -> Result<()> {
        let name = name.into();
        if self.entries.contains_key(&name) {
            return Err(Error::Key(format!("duplicate parameter `{name}`")));
        }
        self.entries.insert(name, value);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::Key(format!("missing parameter `{name}`")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        self.entries
            .get_mut(name)
            .ok_or_else(|| Error::Key(format!("missing parameter `{name}`")))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.entries.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar values.
    pub fn numel(&self) -> usize {
        self.entries.values().map(Tensor::numel).sum()
    }

    /// Names belonging to any of `components`, in sorted order.
    pub fn names_in(&self, components: &[Component]) -> Vec<String> {
        self.entries
            .keys()
            .filter(|n| components.iter().any(|c| c.owns(n)))
            .cloned()
            .collect()
    }

    /// Errors unless both sets hold the same names with the same shapes.
    pub fn check_same_layout(&self, other: &ParamSet) -> Result<()> {
        if self.entries.len() != other.entries.len() {
            return Err(Error::Key(format!(
                "parameter sets differ in size: {} vs {}",
                self.entries.len(),
                other.entries.len()
            )));
        }
        for (name, t) in &self.entries {
            let o = other.get(name)?;
            if o.shape() != t.shape() {
                return Err(Error::Key(format!(
                    "parameter `{name}` has shape {:?} vs {:?}",
                    t.shape(),
                    o.shape()
                )));
            }
        }
        Ok(())
    }
}

/// A `fan_in x fan_out` matrix drawn from U(-b, b), b = sqrt(6 / (fan_in + fan_out)).
pub fn glorot_uniform(rng: &mut impl Rng, fan_in: usize, fan_out: usize) -> Tensor {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let w: Vec<f64> = (0..fan_in * fan_out)
        .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * bound)
        .collect();
    Tensor::new(vec![fan_in, fan_out], w).expect("glorot extents are positive")
}

/// Glorot-uniform weights and zero biases, deterministic in `config.seed`.
pub fn init_params(config: &ModelConfig) -> Result<ParamSet> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = ParamSet::new();
    let mut layer = |params: &mut ParamSet, c: Component, i: usize, fan_in: usize, fan_out: usize| {
        params.insert(layer_name(c, i, "weight"), glorot_uniform(&mut rng, fan_in, fan_out))?;
        params.insert(layer_name(c, i, "bias"), Tensor::zeros(&[fan_out]))
    };

    let h = config.encoder_hidden;
    for i in 0..config.encoder_layers {
        let fan_in = if i == 0 { config.input_dim } else { h };
        layer(&mut params, Component::Encoder, i, fan_in, h)?;
    }
    for c in [Component::Classifier, Component::Discriminator] {
        layer(&mut params, c, 0, h, config.head_hidden)?;
        layer(&mut params, c, 1, config.head_hidden, config.num_classes)?;
    }
    Ok(params)
}

/// Parameter nodes of a [`ParamSet`] registered in one graph.
#[derive(Debug, Clone, Default)]
pub struct Bound {
    ids: BTreeMap<String, NodeId>,
}

impl Bound {
    pub fn id(&self, name: &str) -> Result<NodeId> {
        self.ids
            .get(name)
            .copied()
            .ok_or_else(|| Error::Key(format!("parameter `{name}` is not bound")))
    }
}

/// Registers the parameters of `components` as named graph inputs.
pub fn bind(graph: &mut Graph, params: &ParamSet, components: &[Component]) -> Result<Bound> {
    let mut ids = BTreeMap::new();
    for name in params.names_in(components) {
        let id = graph.param(&name, params.get(&name)?.clone())?;
        ids.insert(name, id);
    }
    Ok(Bound { ids })
}

fn affine(graph: &mut Graph, bound: &Bound, c: Component, i: usize, x: NodeId) -> Result<NodeId> {
    let w = bound.id(&layer_name(c, i, "weight"))?;
    let b = bound.id(&layer_name(c, i, "bias"))?;
    let xw = graph.matmul(x, w);
    Ok(graph.add_bias(xw, b))
}

pub fn encoder_graph(
    graph: &mut Graph,
    bound: &Bound,
    config: &ModelConfig,
    x: NodeId,
) -> Result<NodeId> {
    let mut h = x;
    for i in 0..config.encoder_layers {
        let z = affine(graph, bound, Component::Encoder, i, h)?;
        h = graph.relu(z);
    }
    Ok(h)
}

/// Logits of the classifier or discriminator head.
pub fn head_graph(graph: &mut Graph, bound: &Bound, head: Component, h: NodeId) -> Result<NodeId> {
    if head == Component::Encoder {
        return Err(Error::Contract("the encoder is not a head".into()));
    }
    let z = affine(graph, bound, head, 0, h)?;
    let a = graph.relu(z);
    affine(graph, bound, head, 1, a)
}

/// Discriminator logits, read through a gradient-reversal node.
pub fn discriminator_graph(
    graph: &mut Graph,
    bound: &Bound,
    h: NodeId,
    lambda: f64,
) -> Result<NodeId> {
    let r = graph.grad_reverse(h, lambda)?;
    head_graph(graph, bound, Component::Discriminator, r)
}

fn check_width(x: &Tensor, width: usize, op: &'static str) -> Result<()> {
    if x.shape().len() != 2 || x.cols() != width {
        return Err(Error::Shape {
            op,
            left: x.shape().to_vec(),
            right: vec![x.shape()[0], width],
        });
    }
    Ok(())
}

/// Encoder representations for a `B x input_dim` batch.
pub fn encode(params: &ParamSet, config: &ModelConfig, x: &Tensor) -> Result<Tensor> {
    check_width(x, config.input_dim, "encode")?;
    let mut g = Graph::new();
    let bound = bind(&mut g, params, &[Component::Encoder])?;
    let xi = g.input(x.clone());
    let h = encoder_graph(&mut g, &bound, config, xi)?;
    Ok(g.forward(h)?.clone())
}

fn head_probs(
    params: &ParamSet,
    config: &ModelConfig,
    h: &Tensor,
    head: Component,
    lambda: Option<f64>,
) -> Result<Tensor> {
    check_width(h, config.encoder_hidden, "head")?;
    let mut g = Graph::new();
    let bound = bind(&mut g, params, &[head])?;
    let hi = g.input(h.clone());
    let logits = match lambda {
        Some(l) => discriminator_graph(&mut g, &bound, hi, l)?,
        None => head_graph(&mut g, &bound, head, hi)?,
    };
    Ok(softmax_rows(g.forward(logits)?))
}

/// Mental-health class probabilities, `B x 2`.
pub fn classify(params: &ParamSet, config: &ModelConfig, h: &Tensor) -> Result<Tensor> {
    head_probs(params, config, h, Component::Classifier, None)
}

/// Gender probabilities, `B x 2`. `lambda` only affects gradients.
pub fn discriminate(
    params: &ParamSet,
    config: &ModelConfig,
    h: &Tensor,
    lambda: f64,
) -> Result<Tensor> {
    head_probs(params, config, h, Component::Discriminator, Some(lambda))
}
