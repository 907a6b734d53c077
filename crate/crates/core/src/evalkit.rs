//! Confusion matrices, F1 reports stratified by gender, the linear gender
//! probe and embedding export.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datapipe::{Example, Gender};
use crate::error::{Error, Result};
use crate::model::{classify, encode, glorot_uniform, ModelConfig, ParamSet};
use crate::ndnum::{Graph, Tensor};
use crate::objective::{weighted_ce, ClassWeights};
use crate::optim::{adam_step, AdamState};
use crate::trainer::stack_embeddings;
use crate::util::write_atomic;

/// Positive class is label 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: usize, predicted: usize) {
        match (truth, predicted) {
            (1, 1) => self.tp += 1,
            (0, 1) => self.fp += 1,
            (1, 0) => self.fn_ += 1,
            _ => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same matrix with class 0 treated as positive.
    pub fn flipped(&self) -> Self {
        ConfusionMatrix {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }

    pub fn merge(&self, other: &Self) -> Self {
        ConfusionMatrix {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
            tn: self.tn + other.tn,
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// F1 of the positive class; every 0/0 is taken as 0.
pub fn f1(c: &ConfusionMatrix) -> f64 {
    let p = ratio(c.tp, c.tp + c.fp);
    let r = ratio(c.tp, c.tp + c.fn_);
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Rounds half away from zero at `decimals` places, as reported tables do.
pub fn round_to(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (x * scale).round() / scale
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassF1 {
    pub f1_neg: f64,
    pub f1_pos: f64,
    pub f1_avg: f64,
}

impl ClassF1 {
    pub fn from_confusion(c: &ConfusionMatrix) -> Self {
        Self::from_pair(f1(&c.flipped()), f1(c))
    }

    pub fn from_pair(f1_neg: f64, f1_pos: f64) -> Self {
        ClassF1 {
            f1_neg,
            f1_pos,
            f1_avg: (f1_neg + f1_pos) / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StratumReport {
    #[serde(flatten)]
    pub f1: ClassF1,
    /// Set when the stratum had no examples; its scores are then 0.
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(flatten)]
    pub overall: ClassF1,
    pub per_gender: BTreeMap<String, StratumReport>,
    pub f1_gender_avg: f64,
    /// Confusion cells for `overall`, `male` and `female`.
    pub counts: BTreeMap<String, ConfusionMatrix>,
}

impl MetricsReport {
    pub fn from_confusions(male: ConfusionMatrix, female: ConfusionMatrix) -> Self {
        let overall = male.merge(&female);
        let mut per_gender = BTreeMap::new();
        let mut counts = BTreeMap::new();
        for (g, c) in [(Gender::Male, male), (Gender::Female, female)] {
            per_gender.insert(
                g.name().to_string(),
                StratumReport {
                    f1: ClassF1::from_confusion(&c),
                    empty: c.total() == 0,
                },
            );
            counts.insert(g.name().to_string(), c);
        }
        counts.insert("overall".to_string(), overall);
        let f1_gender_avg = (per_gender["male"].f1.f1_avg + per_gender["female"].f1.f1_avg) / 2.0;
        MetricsReport {
            overall: ClassF1::from_confusion(&overall),
            per_gender,
            f1_gender_avg,
            counts,
        }
    }

    pub fn stratum(&self, gender: Gender) -> &StratumReport {
        &self.per_gender[gender.name()]
    }

    /// |male F1 Avg - female F1 Avg|.
    pub fn gender_gap(&self) -> f64 {
        (self.stratum(Gender::Male).f1.f1_avg - self.stratum(Gender::Female).f1.f1_avg).abs()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    /// Score participants by majority vote over their segments.
    pub participant_vote: bool,
    pub threads: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            participant_vote: false,
            threads: 1,
        }
    }
}

/// Argmax over two classes; a tie goes to class 0.
fn argmax2(row: &[f64]) -> usize {
    usize::from(row[1] > row[0])
}

fn predict_chunk(params: &ParamSet, config: &ModelConfig, examples: &[Example]) -> Result<Vec<usize>> {
    if examples.is_empty() {
        return Ok(Vec::new());
    }
    let x = stack_embeddings(examples)?;
    let probs = classify(params, config, &encode(params, config, &x)?)?;
    Ok((0..probs.rows()).map(|i| argmax2(probs.row(i))).collect())
}

/// Predicted labels, computed on up to `threads` workers. Rows are
/// independent, so the result does not depend on the split.
pub fn predict(
    params: &ParamSet,
    config: &ModelConfig,
    examples: &[Example],
    threads: usize,
) -> Result<Vec<usize>> {
    let threads = threads.max(1);
    if threads == 1 || examples.len() < 2 {
        return predict_chunk(params, config, examples);
    }
    let chunk = examples.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = examples
            .chunks(chunk)
            .map(|part| s.spawn(move || predict_chunk(params, config, part)))
            .collect();
        let mut out = Vec::with_capacity(examples.len());
        for h in handles {
            out.extend(h.join().expect("evaluation worker panicked")?);
        }
        Ok(out)
    })
}

fn majority(votes: &[usize]) -> usize {
    let pos = votes.iter().filter(|&&v| v == 1).count();
    usize::from(2 * pos > votes.len())
}

pub fn evaluate(
    params: &ParamSet,
    config: &ModelConfig,
    examples: &[Example],
    options: &EvalOptions,
) -> Result<MetricsReport> {
    if examples.is_empty() {
        return Err(Error::Validation("nothing to evaluate: no examples".into()));
    }
    let predicted = predict(params, config, examples, options.threads)?;
    let mut cells = [ConfusionMatrix::default(); 2];
    if options.participant_vote {
        let mut by_participant: BTreeMap<&str, (Gender, Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for (ex, &p) in examples.iter().zip(&predicted) {
            let entry = by_participant
                .entry(ex.participant.as_str())
                .or_insert_with(|| (ex.gender, Vec::new(), Vec::new()));
            entry.1.push(ex.label_index());
            entry.2.push(p);
        }
        for (gender, truths, preds) in by_participant.values() {
            cells[gender.index()].record(majority(truths), majority(preds));
        }
    } else {
        for (ex, &p) in examples.iter().zip(&predicted) {
            cells[ex.gender.index()].record(ex.label_index(), p);
        }
    }
    Ok(MetricsReport::from_confusions(cells[0], cells[1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            steps: 200,
            lr: 1e-2,
            seed: 0,
        }
    }
}

/// Held-in accuracy of a linear classifier trained to predict gender from
/// fixed representations `h` (one row per entry of `genders`).
pub fn probe_representations(h: &Tensor, genders: &[Gender], probe: &ProbeConfig) -> Result<f64> {
    let mut per_gender = [0usize; 2];
    for g in genders {
        per_gender[g.index()] += 1;
    }
    if per_gender.iter().any(|&c| c < 2) {
        return Err(Error::Stratum(format!(
            "gender probe needs at least 2 examples of each gender, got {} male / {} female",
            per_gender[0], per_gender[1]
        )));
    }
    if h.rows() != genders.len() {
        return Err(Error::Shape {
            op: "gender_probe",
            left: h.shape().to_vec(),
            right: vec![genders.len()],
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(probe.seed);
    let mut params = ParamSet::new();
    params.insert("probe.weight", glorot_uniform(&mut rng, h.cols(), 2))?;
    params.insert("probe.bias", Tensor::zeros(&[2]))?;
    let names: Vec<String> = params.names().map(str::to_string).collect();
    let mut adam = AdamState::new(&params, &names)?;
    let labels: Vec<usize> = genders.iter().map(|g| g.index()).collect();
    let uniform = ClassWeights::uniform();

    for _ in 0..probe.steps {
        let mut g = Graph::new();
        let x = g.input(h.clone());
        let w = g.input(params.get("probe.weight")?.clone());
        let b = g.input(params.get("probe.bias")?.clone());
        let xw = g.matmul(x, w);
        let z = g.add_bias(xw, b);
        let loss = weighted_ce(&mut g, z, &labels, &uniform)?;
        g.forward(loss)?;
        let grads = g.backward(loss)?;
        let named = BTreeMap::from([
            ("probe.weight".to_string(), grads.get(w).expect("input gradient").clone()),
            ("probe.bias".to_string(), grads.get(b).expect("input gradient").clone()),
        ]);
        adam_step(&mut params, &named, &mut adam, probe.lr)?;
    }

    let logits = h.matmul(params.get("probe.weight")?)?;
    let bias = params.get("probe.bias")?.data();
    let correct = (0..logits.rows())
        .filter(|&i| {
            let row: Vec<f64> = logits.row(i).iter().zip(bias).map(|(a, b)| a + b).collect();
            argmax2(&row) == labels[i]
        })
        .count();
    Ok(correct as f64 / genders.len() as f64)
}

/// Freezes the encoder and probes its representations for gender.
pub fn gender_probe(
    params: &ParamSet,
    config: &ModelConfig,
    examples: &[Example],
    probe: &ProbeConfig,
) -> Result<f64> {
    let genders: Vec<Gender> = examples.iter().map(|e| e.gender).collect();
    if examples.is_empty() {
        return probe_representations(&Tensor::zeros(&[1, 1]), &genders, probe);
    }
    let h = encode(params, config, &stack_embeddings(examples)?)?;
    probe_representations(&h, &genders, probe)
}

/// Encoder representations as CSV: `id,gender,label,h0,h1,...`.
pub fn embeddings_csv(params: &ParamSet, config: &ModelConfig, examples: &[Example]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Format(format!("embedding export: {e}"));
    let mut header = vec!["id".to_string(), "gender".into(), "label".into()];
    header.extend((0..config.encoder_hidden).map(|i| format!("h{i}")));
    w.write_record(&header).map_err(csv_err)?;
    if !examples.is_empty() {
        let h = encode(params, config, &stack_embeddings(examples)?)?;
        for (i, ex) in examples.iter().enumerate() {
            let mut rec = vec![ex.id.clone(), ex.gender.index().to_string(), ex.label.to_string()];
            rec.extend(h.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.into_inner().map_err(|e| Error::Format(format!("embedding export: {e}")))
}

pub fn export_embeddings(
    params: &ParamSet,
    config: &ModelConfig,
    examples: &[Example],
    path: &Path,
) -> Result<()> {
    write_atomic(path, &embeddings_csv(params, config, examples)?)
}
