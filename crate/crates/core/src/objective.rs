//! Class-weighted cross-entropy and the combined adversarial objective
//! `L_final = L_mental + lambda * L_dis`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::NUM_CLASSES;
use crate::ndnum::{Graph, NodeId, Tensor};

/// Per-class loss weights, both finite and positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights([f64; NUM_CLASSES]);

impl ClassWeights {
    pub fn new(w: [f64; NUM_CLASSES]) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Contract(format!(
                "class weights must be finite and positive, got {w:?}"
            )));
        }
        Ok(ClassWeights(w))
    }

    pub fn uniform() -> Self {
        ClassWeights([1.0; NUM_CLASSES])
    }

    /// `w_c = N / (2 * n_c)`: inversely proportional to the class count and
    /// averaging to one under the empirical class distribution.
    pub fn from_counts(counts: [usize; NUM_CLASSES]) -> Result<Self> {
        if let Some(class) = counts.iter().position(|&c| c == 0) {
            return Err(Error::DegenerateClass { class });
        }
        let total: usize = counts.iter().sum();
        let w = counts.map(|c| total as f64 / (NUM_CLASSES as f64 * c as f64));
        Ok(ClassWeights(w))
    }

    pub fn from_labels(labels: impl IntoIterator<Item = usize>) -> Result<Self> {
        Self::from_counts(class_counts(labels)?)
    }

    pub fn get(&self) -> [f64; NUM_CLASSES] {
        self.0
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.0.map(|w| w * c))
    }
}

pub fn class_counts(labels: impl IntoIterator<Item = usize>) -> Result<[usize; NUM_CLASSES]> {
    let mut counts = [0usize; NUM_CLASSES];
    for l in labels {
        *counts.get_mut(l).ok_or(Error::Label {
            label: l,
            classes: NUM_CLASSES,
        })? += 1;
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_mental: f64,
    pub l_dis: f64,
    pub lambda: f64,
    pub l_final: f64,
}

impl LossBreakdown {
    pub fn combine(l_mental: f64, l_dis: f64, lambda: f64) -> Self {
        LossBreakdown {
            l_mental,
            l_dis,
            lambda,
            l_final: l_mental + lambda * l_dis,
        }
    }
}

/// Weighted cross-entropy node over a `B x 2` logit node:
/// `(1/B) * sum_i w[y_i] * -log softmax(z_i)[y_i]`.
pub fn weighted_ce(
    graph: &mut Graph,
    logits: NodeId,
    labels: &[usize],
    weights: &ClassWeights,
) -> Result<NodeId> {
    if labels.is_empty() {
        return Err(Error::Contract("cross-entropy over an empty batch".into()));
    }
    graph.softmax_cross_entropy(logits, labels, &weights.0)
}

/// Weighted cross-entropy of already-normalised probability rows.
pub fn weighted_ce_probs(probs: &Tensor, labels: &[usize], weights: &ClassWeights) -> Result<f64> {
    if probs.shape() != [labels.len(), NUM_CLASSES] {
        return Err(Error::Shape {
            op: "weighted_ce",
            left: probs.shape().to_vec(),
            right: vec![labels.len(), NUM_CLASSES],
        });
    }
    for i in 0..probs.rows() {
        let s: f64 = probs.row(i).iter().sum();
        if (s - 1.0).abs() > 1e-9 || probs.row(i).iter().any(|p| *p < 0.0) {
            return Err(Error::Contract(format!("row {i} is not a distribution")));
        }
    }
    // softmax(ln p) == p, so the fused node evaluates -log p directly.
    let mut g = Graph::new();
    let z = g.input(probs.map(f64::ln));
    let l = weighted_ce(&mut g, z, labels, weights)?;
    let v = g.forward(l)?.data()[0];
    if !v.is_finite() {
        return Err(Error::Numeric("zero probability on a true class".into()));
    }
    Ok(v)
}

/// Loss nodes of the adversarial objective.
#[derive(Debug, Clone, Copy)]
pub struct DatLoss {
    pub l_mental: NodeId,
    pub l_dis: NodeId,
    pub l_final: NodeId,
    pub lambda: f64,
}

impl DatLoss {
    /// Loss values after `graph.forward(self.l_final)`.
    pub fn breakdown(&self, graph: &Graph) -> Result<LossBreakdown> {
        let get = |id| {
            graph
                .value(id)
                .and_then(|t: &Tensor| t.item())
                .ok_or_else(|| Error::State("loss read before forward".into()))
        };
        Ok(LossBreakdown {
            l_mental: get(self.l_mental)?,
            l_dis: get(self.l_dis)?,
            lambda: self.lambda,
            l_final: get(self.l_final)?,
        })
    }
}

/// Builds `l_final = l_mental + lambda * l_dis`.
///
/// `gender_logits` must come from a discriminator whose input passes through
/// a unit reversal node: the encoder then receives `-lambda * dL_dis` while
/// the discriminator head receives `+lambda * dL_dis`.
#[allow(clippy::too_many_arguments)]
pub fn dat_loss(
    graph: &mut Graph,
    mental_logits: NodeId,
    labels_mental: &[usize],
    gender_logits: NodeId,
    labels_gender: &[usize],
    weights_mental: &ClassWeights,
    weights_gender: &ClassWeights,
    lambda: f64,
) -> Result<DatLoss> {
    if labels_mental.len() != labels_gender.len() {
        return Err(Error::Contract(format!(
            "batch sizes differ: {} mental labels vs {} gender labels",
            labels_mental.len(),
            labels_gender.len()
        )));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::Contract(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let l_mental = weighted_ce(graph, mental_logits, labels_mental, weights_mental)?;
    let l_dis = weighted_ce(graph, gender_logits, labels_gender, weights_gender)?;
    let scaled = graph.scale(l_dis, lambda)?;
    let l_final = graph.add(l_mental, scaled);
    Ok(DatLoss {
        l_mental,
        l_dis,
        l_final,
        lambda,
    })
}
