//! Fine-tuning and adversarial training loops, plus binary checkpoints.
//!
//! Every optimizer step runs one forward pass of the encoder and the
//! classifier (and, in adversarial mode, the discriminator), one backward
//! pass of the combined loss, an Adam update at the cosine learning rate and
//! an EMA update of the shadow weights.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datapipe::{batch_indices, Example, Task};
use crate::error::{Error, Result};
use crate::model::{self, init_params, Component, ModelConfig, ParamSet};
use crate::ndnum::{Graph, Tensor};
use crate::objective::{class_counts, dat_loss, weighted_ce, ClassWeights, LossBreakdown};
use crate::optim::{adam_step, cosine_lr, ema_update, lambda_at, AdamState, Schedules, DEFAULT_LR};
use crate::util::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Encoder + classifier only.
    #[default]
    Finetune,
    /// Adds the gender discriminator behind a gradient-reversal node.
    Dat,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "finetune" => Ok(Mode::Finetune),
            "dat" => Ok(Mode::Dat),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

impl Mode {
    pub fn components(self) -> &'static [Component] {
        match self {
            Mode::Finetune => &[Component::Encoder, Component::Classifier],
            Mode::Dat => &Component::ALL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub mode: Mode,
    pub epochs: usize,
    pub batch_size: usize,
    /// Peak learning rate of the cosine schedule.
    pub lr: f64,
    pub schedules: Schedules,
    pub model: ModelConfig,
    /// Inverse-frequency class weights for the mental-health loss.
    pub weighted_loss: bool,
    /// Inverse-frequency class weights for the gender loss as well.
    pub weight_gender_loss: bool,
    /// Seeds the per-epoch shuffles (`seed + epoch`).
    pub seed: u64,
    pub task: Task,
    /// Replaces the lambda ramp with a constant.
    pub lambda_override: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::Finetune,
            epochs: 50,
            batch_size: 8,
            lr: DEFAULT_LR,
            schedules: Schedules::default(),
            model: ModelConfig::default(),
            weighted_loss: true,
            weight_gender_loss: true,
            seed: 0,
            task: Task::Depression,
            lambda_override: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if let Some(l) = self.lambda_override {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("lambda_override must be >= 0, got {l}")));
            }
        }
        self.schedules.validate()?;
        self.model.validate()
    }

    pub fn steps_per_epoch(&self, n: usize) -> u64 {
        n.div_ceil(self.batch_size) as u64
    }
}

/// Mean losses over one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    pub epoch: usize,
    pub steps: u64,
    pub mean: LossBreakdown,
}

/// What a single optimizer step did.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub lr: f64,
    pub loss: LossBreakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub live: ParamSet,
    pub ema: ParamSet,
    pub adam: AdamState,
    pub step: u64,
    pub config: TrainConfig,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub epochs: Vec<EpochTrace>,
    pub steps: Vec<StepRecord>,
}

#[derive(Default)]
struct EpochAccumulator {
    sums: [f64; 4],
    steps: u64,
}

impl EpochAccumulator {
    fn add(&mut self, l: &LossBreakdown) {
        for (s, v) in self.sums.iter_mut().zip([l.l_mental, l.l_dis, l.lambda, l.l_final]) {
            *s += v;
        }
        self.steps += 1;
    }

    fn finish(&mut self, epoch: usize) -> EpochTrace {
        let n = self.steps.max(1) as f64;
        let trace = EpochTrace {
            epoch,
            steps: self.steps,
            mean: LossBreakdown {
                l_mental: self.sums[0] / n,
                l_dis: self.sums[1] / n,
                lambda: self.sums[2] / n,
                l_final: self.sums[3] / n,
            },
        };
        *self = Self::default();
        trace
    }
}

pub struct Trainer<'a> {
    config: TrainConfig,
    examples: &'a [Example],
    live: ParamSet,
    ema: ParamSet,
    adam: AdamState,
    step: u64,
    steps_per_epoch: u64,
    weights_mental: ClassWeights,
    weights_gender: ClassWeights,
    epoch_order: Option<(usize, Vec<Vec<usize>>)>,
    acc: EpochAccumulator,
    epochs: Vec<EpochTrace>,
    records: Vec<StepRecord>,
}

fn check_examples(config: &TrainConfig, examples: &[Example]) -> Result<()> {
    if examples.is_empty() {
        return Err(Error::Validation("training set is empty".into()));
    }
    for ex in examples {
        if ex.embedding.len() != config.model.input_dim {
            return Err(Error::Validation(format!(
                "example `{}` has dim {}, model expects {}",
                ex.id,
                ex.embedding.len(),
                config.model.input_dim
            )));
        }
    }
    Ok(())
}

fn weights_for(enabled: bool, labels: impl IntoIterator<Item = usize>, what: &str) -> Result<ClassWeights> {
    let counts = class_counts(labels)?;
    if !enabled {
        return Ok(ClassWeights::uniform());
    }
    ClassWeights::from_counts(counts).map_err(|e| match e {
        Error::DegenerateClass { class } => Error::Config(format!(
            "cannot weight the {what} loss: class {class} has no training examples"
        )),
        other => other,
    })
}

/// Stacks embeddings of the given examples into a `B x dim` tensor.
pub fn stack_embeddings<'e>(examples: impl IntoIterator<Item = &'e Example>) -> Result<Tensor> {
    let mut rows = 0;
    let mut dim = None;
    let mut data = Vec::new();
    for ex in examples {
        if *dim.get_or_insert(ex.embedding.len()) != ex.embedding.len() {
            return Err(Error::Validation(format!("example `{}` has a different dim", ex.id)));
        }
        data.extend(ex.embedding.iter().map(|&v| f64::from(v)));
        rows += 1;
    }
    Tensor::new(vec![rows, dim.unwrap_or(0)], data)
}

impl<'a> Trainer<'a> {
    pub fn new(config: TrainConfig, examples: &'a [Example]) -> Result<Self> {
        config.validate()?;
        check_examples(&config, examples)?;
        let live = init_params(&config.model)?;
        let names = live.names_in(config.mode.components());
        let adam = AdamState::new(&live, &names)?;
        let ema = live.clone();
        Self::assemble(config, examples, live, ema, adam, 0)
    }

    /// Continues from a checkpoint; the remaining steps replay exactly what
    /// an uninterrupted run would have done.
    pub fn resume(checkpoint: Checkpoint, examples: &'a [Example]) -> Result<Self> {
        let Checkpoint {
            live,
            ema,
            adam,
            step,
            config,
        } = checkpoint;
        config.validate()?;
        check_examples(&config, examples)?;
        live.check_same_layout(&ema)?;
        Self::assemble(config, examples, live, ema, adam, step)
    }

    fn assemble(
        config: TrainConfig,
        examples: &'a [Example],
        live: ParamSet,
        ema: ParamSet,
        adam: AdamState,
        step: u64,
    ) -> Result<Self> {
        let weights_mental = weights_for(
            config.weighted_loss,
            examples.iter().map(Example::label_index),
            "mental-health",
        )?;
        let weights_gender = match config.mode {
            Mode::Dat => weights_for(
                config.weight_gender_loss,
                examples.iter().map(|e| e.gender.index()),
                "gender",
            )?,
            Mode::Finetune => ClassWeights::uniform(),
        };
        Ok(Trainer {
            steps_per_epoch: config.steps_per_epoch(examples.len()),
            config,
            examples,
            live,
            ema,
            adam,
            step,
            weights_mental,
            weights_gender,
            epoch_order: None,
            acc: EpochAccumulator::default(),
            epochs: Vec::new(),
            records: Vec::new(),
        })
    }

    pub fn total_steps(&self) -> u64 {
        self.steps_per_epoch * self.config.epochs as u64
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn is_done(&self) -> bool {
        self.step >= self.total_steps()
    }

    pub fn lambda(&self) -> f64 {
        self.config
            .lambda_override
            .unwrap_or_else(|| lambda_at(self.step, &self.config.schedules))
    }

    fn batch(&mut self) -> Result<Vec<usize>> {
        let epoch = (self.step / self.steps_per_epoch) as usize;
        let offset = (self.step % self.steps_per_epoch) as usize;
        if self.epoch_order.as_ref().map(|(e, _)| *e) != Some(epoch) {
            let order = batch_indices(
                self.examples.len(),
                self.config.batch_size,
                self.config.seed.wrapping_add(epoch as u64),
                true,
            )?;
            self.epoch_order = Some((epoch, order));
        }
        Ok(self.epoch_order.as_ref().expect("set above").1[offset].clone())
    }

    /// Runs one optimizer step.
    pub fn step_once(&mut self) -> Result<StepRecord> {
        if self.is_done() {
            return Err(Error::State("training already finished".into()));
        }
        let batch = self.batch()?;
        let batch_examples: Vec<&Example> = batch.iter().map(|&i| &self.examples[i]).collect();
        let x = stack_embeddings(batch_examples.iter().copied())?;
        let labels: Vec<usize> = batch_examples.iter().map(|e| e.label_index()).collect();
        let genders: Vec<usize> = batch_examples.iter().map(|e| e.gender.index()).collect();
        let lambda = match self.config.mode {
            Mode::Dat => self.lambda(),
            Mode::Finetune => 0.0,
        };
        let (loss, grads) = loss_and_gradients(
            &self.live,
            &self.config.model,
            self.config.mode,
            &x,
            &labels,
            &genders,
            [&self.weights_mental, &self.weights_gender],
            lambda,
        )?;
        if !loss.l_final.is_finite() {
            return Err(Error::Numeric(format!("loss is {} at step {}", loss.l_final, self.step)));
        }

        let lr = cosine_lr(self.step, self.total_steps(), self.config.lr);
        adam_step(&mut self.live, &grads, &mut self.adam, lr)?;
        ema_update(&mut self.ema, &self.live, self.config.schedules.ema_coefficient)?;

        let record = StepRecord {
            step: self.step,
            lr,
            loss,
        };
        self.records.push(record);
        self.acc.add(&loss);
        self.step += 1;
        if self.step.is_multiple_of(self.steps_per_epoch) {
            let epoch = (self.step / self.steps_per_epoch - 1) as usize;
            let trace = self.acc.finish(epoch);
            self.epochs.push(trace);
        }
        Ok(record)
    }

    /// Runs up to `n` steps, stopping early at the end of training.
    pub fn run_steps(&mut self, n: u64) -> Result<()> {
        for _ in 0..n {
            if self.is_done() {
                break;
            }
            self.step_once()?;
        }
        Ok(())
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            live: self.live.clone(),
            ema: self.ema.clone(),
            adam: self.adam.clone(),
            step: self.step,
            config: self.config.clone(),
        }
    }

    pub fn run(mut self) -> Result<TrainOutcome> {
        while !self.is_done() {
            self.step_once()?;
        }
        Ok(TrainOutcome {
            checkpoint: self.checkpoint(),
            epochs: self.epochs,
            steps: self.records,
        })
    }
}

/// Loss and parameter gradients for one batch, exactly as a training step
/// computes them. In finetune mode `genders` and `lambda` are ignored and
/// only encoder and classifier gradients are returned.
///
/// The discriminator sits behind a unit reversal node and its loss is
/// weighted by `lambda`, so the encoder receives `-lambda * dL_dis` while
/// the discriminator itself descends `lambda * L_dis`.
#[allow(clippy::too_many_arguments)]
pub fn loss_and_gradients(
    params: &ParamSet,
    model: &ModelConfig,
    mode: Mode,
    x: &Tensor,
    labels: &[usize],
    genders: &[usize],
    [weights_mental, weights_gender]: [&ClassWeights; 2],
    lambda: f64,
) -> Result<(LossBreakdown, BTreeMap<String, Tensor>)> {
    let mut g = Graph::new();
    let bound = model::bind(&mut g, params, mode.components())?;
    let xi = g.input(x.clone());
    let h = model::encoder_graph(&mut g, &bound, model, xi)?;
    let zm = model::head_graph(&mut g, &bound, Component::Classifier, h)?;
    match mode {
        Mode::Finetune => {
            let l = weighted_ce(&mut g, zm, labels, weights_mental)?;
            let v = g.forward(l)?.data()[0];
            Ok((LossBreakdown::combine(v, 0.0, 0.0), g.backward(l)?.into_named()))
        }
        Mode::Dat => {
            let zg = model::discriminator_graph(&mut g, &bound, h, 1.0)?;
            let d = dat_loss(
                &mut g,
                zm,
                labels,
                zg,
                genders,
                weights_mental,
                weights_gender,
                lambda,
            )?;
            g.forward(d.l_final)?;
            Ok((d.breakdown(&g)?, g.backward(d.l_final)?.into_named()))
        }
    }
}

pub fn train(config: &TrainConfig, examples: &[Example]) -> Result<TrainOutcome> {
    Trainer::new(config.clone(), examples)?.run()
}

// ---------------------------------------------------------------------------
// Checkpoint file
// ---------------------------------------------------------------------------

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"DATSPCKP";
pub const CHECKPOINT_VERSION: u32 = 1;

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_params<'p>(out: &mut Vec<u8>, entries: impl ExactSizeIterator<Item = (&'p str, &'p Tensor)>) {
    put_u64(out, entries.len() as u64);
    for (name, t) in entries {
        put_u64(out, name.len() as u64);
        out.extend_from_slice(name.as_bytes());
        put_u64(out, t.shape().len() as u64);
        for &d in t.shape() {
            put_u64(out, d as u64);
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

struct Cursor<'b> {
    bytes: &'b [u8],
    at: usize,
}

impl<'b> Cursor<'b> {
    fn take(&mut self, n: usize) -> Result<&'b [u8]> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("checkpoint truncated at byte {}", self.at)))?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn len(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v)
            .ok()
            .filter(|&n| n <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("implausible length {v} in checkpoint")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn params(&mut self) -> Result<Vec<(String, Tensor)>> {
        let count = self.len()?;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let name_len = self.len()?;
            let name = String::from_utf8(self.take(name_len)?.to_vec())
                .map_err(|_| Error::Format("parameter name is not UTF-8".into()))?;
            let rank = self.len()?;
            let shape = (0..rank).map(|_| self.len()).collect::<Result<Vec<_>>>()?;
            let numel = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .filter(|&n| n.saturating_mul(8) <= self.bytes.len())
                .ok_or_else(|| Error::Format(format!("implausible shape {shape:?}")))?;
            let data = (0..numel).map(|_| self.f64()).collect::<Result<Vec<_>>>()?;
            let t = Tensor::new(shape, data).map_err(|e| Error::Format(e.to_string()))?;
            out.push((name, t));
        }
        Ok(out)
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let config = serde_json::to_string_pretty(&self.config).expect("config serializes");
        put_u64(&mut out, config.len() as u64);
        out.extend_from_slice(config.as_bytes());
        put_u64(&mut out, self.step);
        put_u64(&mut out, self.adam.t);
        for v in [self.adam.beta1, self.adam.beta2, self.adam.eps] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        put_params(&mut out, self.live.iter().collect::<Vec<_>>().into_iter());
        put_params(&mut out, self.ema.iter().collect::<Vec<_>>().into_iter());
        put_params(&mut out, self.adam.m.iter().map(|(k, v)| (k.as_str(), v)));
        put_params(&mut out, self.adam.v.iter().map(|(k, v)| (k.as_str(), v)));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut c = Cursor { bytes, at: 0 };
        if c.take(8).ok() != Some(&CHECKPOINT_MAGIC[..]) {
            return Err(Error::Format("not a checkpoint (bad magic bytes)".into()));
        }
        let version = u32::from_le_bytes(c.take(4)?.try_into().expect("4 bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "checkpoint version {version}, this build reads {CHECKPOINT_VERSION}"
            )));
        }
        let config_len = c.len()?;
        let config: TrainConfig = serde_json::from_slice(c.take(config_len)?)
            .map_err(|e| Error::Format(format!("config block: {e}")))?;
        let step = c.u64()?;
        let t = c.u64()?;
        let (beta1, beta2, eps) = (c.f64()?, c.f64()?, c.f64()?);
        let to_set = |entries: Vec<(String, Tensor)>| -> Result<ParamSet> {
            let mut p = ParamSet::new();
            for (n, t) in entries {
                p.insert(n, t).map_err(|e| Error::Format(e.to_string()))?;
            }
            Ok(p)
        };
        let live = to_set(c.params()?)?;
        let ema = to_set(c.params()?)?;
        let m = c.params()?.into_iter().collect();
        let v = c.params()?.into_iter().collect();
        if c.at != bytes.len() {
            return Err(Error::Format("trailing bytes after checkpoint".into()));
        }
        live.check_same_layout(&ema)
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok(Checkpoint {
            live,
            ema,
            adam: AdamState {
                m,
                v,
                t,
                beta1,
                beta2,
                eps,
            },
            step,
            config,
        })
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<()> {
    write_atomic(path, &checkpoint.to_bytes())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datapipe::{Gender, Split};

    fn tiny_examples(n: usize, dim: usize) -> Vec<Example> {
        (0..n)
            .map(|i| Example {
                id: format!("e{i}"),
                participant: format!("p{}", i / 3),
                gender: if i % 2 == 0 { Gender::Male } else { Gender::Female },
                label: u8::from(i % 3 == 0),
                split: Split::Train,
                embedding: (0..dim).map(|j| ((i * 7 + j * 3) % 11) as f32 / 11.0).collect(),
            })
            .collect()
    }

    fn tiny_config(mode: Mode) -> TrainConfig {
        TrainConfig {
            mode,
            epochs: 1,
            lr: 1e-3,
            model: ModelConfig {
                input_dim: 4,
                encoder_layers: 2,
                encoder_hidden: 6,
                head_hidden: 5,
                num_classes: 2,
                seed: 3,
            },
            seed: 11,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn one_epoch_of_seventeen_is_three_steps() {
        let ex = tiny_examples(17, 4);
        let out = train(&tiny_config(Mode::Dat), &ex).unwrap();
        assert_eq!(out.checkpoint.step, 3);
        assert_eq!(out.checkpoint.adam.t, 3);
        assert_eq!(out.steps.len(), 3);
        assert_eq!(out.epochs.len(), 1);
        assert_eq!(out.epochs[0].steps, 3);
    }

    #[test]
    fn empty_training_set_is_validation_error() {
        assert!(matches!(
            train(&tiny_config(Mode::Dat), &[]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn degenerate_class_is_config_error() {
        let mut ex = tiny_examples(6, 4);
        ex.iter_mut().for_each(|e| e.label = 0);
        assert!(matches!(train(&tiny_config(Mode::Finetune), &ex), Err(Error::Config(_))));
        let unweighted = TrainConfig {
            weighted_loss: false,
            ..tiny_config(Mode::Finetune)
        };
        assert!(train(&unweighted, &ex).is_ok());
    }

    #[test]
    fn finetune_leaves_discriminator_untouched() {
        let ex = tiny_examples(10, 4);
        let cfg = tiny_config(Mode::Finetune);
        let init = init_params(&cfg.model).unwrap();
        let out = train(&cfg, &ex).unwrap();
        for name in init.names_in(&[Component::Discriminator]) {
            assert_eq!(init.get(&name).unwrap(), out.checkpoint.live.get(&name).unwrap());
        }
        assert_ne!(
            init.get("encoder.0.weight").unwrap(),
            out.checkpoint.live.get("encoder.0.weight").unwrap()
        );
    }

    #[test]
    fn zero_ema_coefficient_tracks_live_weights() {
        let ex = tiny_examples(10, 4);
        let mut cfg = tiny_config(Mode::Dat);
        cfg.schedules.ema_coefficient = 0.0;
        let ck = train(&cfg, &ex).unwrap().checkpoint;
        assert_eq!(ck.ema, ck.live);
    }

    #[test]
    fn checkpoint_bytes_roundtrip() {
        let ex = tiny_examples(10, 4);
        let ck = train(&tiny_config(Mode::Dat), &ex).unwrap().checkpoint;
        let bytes = ck.to_bytes();
        assert_eq!(&bytes[..8], b"DATSPCKP");
        assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), ck);
    }

    #[test]
    fn corrupt_checkpoints_are_format_errors() {
        let ex = tiny_examples(10, 4);
        let ck = train(&tiny_config(Mode::Finetune), &ex).unwrap().checkpoint;
        let bytes = ck.to_bytes();
        let mut bad_magic = bytes.clone();
        bad_magic[0] ^= 0xff;
        assert!(matches!(Checkpoint::from_bytes(&bad_magic), Err(Error::Format(_))));
        let mut bad_version = bytes.clone();
        bad_version[8] = 9;
        assert!(matches!(Checkpoint::from_bytes(&bad_version), Err(Error::Format(_))));
        for cut in [0, 7, 12, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(Checkpoint::from_bytes(&bytes[..cut]), Err(Error::Format(_))));
        }
    }
}
