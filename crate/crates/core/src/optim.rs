//! Adam, the cosine learning-rate schedule, the lambda ramp and EMA shadow
//! weights.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ParamSet;
use crate::ndnum::Tensor;

pub const DEFAULT_LR: f64 = 5e-5;

/// Bias-corrected Adam moments for a fixed set of trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: BTreeMap<String, Tensor>,
    pub v: BTreeMap<String, Tensor>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    /// Zeroed moments for `names`, which must all exist in `params`.
    pub fn new<S: AsRef<str>>(params: &ParamSet, names: &[S]) -> Result<Self> {
        let mut m = BTreeMap::new();
        for n in names {
            let n = n.as_ref();
            m.insert(n.to_string(), Tensor::zeros(params.get(n)?.shape()));
        }
        Ok(AdamState {
            v: m.clone(),
            m,
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        })
    }

    pub fn trainable(&self) -> impl Iterator<Item = &str> {
        self.m.keys().map(String::as_str)
    }
}

/// One Adam update `theta -= lr * m_hat / (sqrt(v_hat) + eps)`.
///
/// `grads` must name exactly the parameters tracked by `state`.
pub fn adam_step(
    params: &mut ParamSet,
    grads: &BTreeMap<String, Tensor>,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::Contract(format!("learning rate must be positive, got {lr}")));
    }
    if let Some(extra) = grads.keys().find(|k| !state.m.contains_key(*k)) {
        return Err(Error::Key(format!("gradient for untracked parameter `{extra}`")));
    }
    for name in state.m.keys() {
        let g = grads
            .get(name)
            .ok_or_else(|| Error::Key(format!("missing gradient for `{name}`")))?;
        if g.shape() != params.get(name)?.shape() {
            return Err(Error::Key(format!(
                "gradient for `{name}` has shape {:?}",
                g.shape()
            )));
        }
        if !g.is_finite() {
            return Err(Error::Numeric(format!("non-finite gradient for `{name}`")));
        }
    }

    state.t += 1;
    let t = state.t as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (name, m) in state.m.iter_mut() {
        let v = state.v.get_mut(name).expect("m and v share keys");
        let g = &grads[name];
        let p = params.get_mut(name)?;
        for (((p, m), v), &g) in p
            .data_mut()
            .iter_mut()
            .zip(m.data_mut())
            .zip(v.data_mut())
            .zip(g.data())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

/// `0.5 * lr_base * (1 + cos(pi * step / total_steps))`, clamped to 0 once
/// `step >= total_steps`.
pub fn cosine_lr(step: u64, total_steps: u64, lr_base: f64) -> f64 {
    if total_steps == 0 || step >= total_steps {
        return 0.0;
    }
    if step == 0 {
        return lr_base;
    }
    let progress = step as f64 / total_steps as f64;
    (0.5 * lr_base * (1.0 + (PI * progress).cos())).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RampShape {
    #[default]
    Linear,
    /// `2 / (1 + exp(-10 p)) - 1`, rescaled to hit both endpoints.
    Sigmoid,
}

impl std::str::FromStr for RampShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(RampShape::Linear),
            "sigmoid" => Ok(RampShape::Sigmoid),
            other => Err(Error::Config(format!("unknown lambda ramp `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedules {
    pub lambda_start: f64,
    pub lambda_end: f64,
    pub lambda_ramp_steps: u64,
    pub lambda_ramp: RampShape,
    pub ema_coefficient: f64,
}

impl Default for Schedules {
    fn default() -> Self {
        Schedules {
            lambda_start: 0.0096,
            lambda_end: 1.0,
            lambda_ramp_steps: 200,
            lambda_ramp: RampShape::Linear,
            ema_coefficient: 0.5,
        }
    }
}

impl Schedules {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.lambda_start
            && self.lambda_start <= self.lambda_end
            && self.lambda_end.is_finite())
        {
            return Err(Error::Config(format!(
                "need 0 <= lambda_start <= lambda_end, got {} and {}",
                self.lambda_start, self.lambda_end
            )));
        }
        if self.lambda_ramp_steps == 0 {
            return Err(Error::Config("lambda_ramp_steps must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.ema_coefficient) {
            return Err(Error::Config(format!(
                "ema_coefficient must lie in [0, 1], got {}",
                self.ema_coefficient
            )));
        }
        Ok(())
    }
}

/// Adversarial weight at optimizer step `step`.
pub fn lambda_at(step: u64, sched: &Schedules) -> f64 {
    if step == 0 {
        return sched.lambda_start;
    }
    if step >= sched.lambda_ramp_steps {
        return sched.lambda_end;
    }
    let p = step as f64 / sched.lambda_ramp_steps as f64;
    let frac = match sched.lambda_ramp {
        RampShape::Linear => p,
        RampShape::Sigmoid => {
            let s = |p: f64| 2.0 / (1.0 + (-10.0 * p).exp()) - 1.0;
            s(p) / s(1.0)
        }
    };
    sched.lambda_start + (sched.lambda_end - sched.lambda_start) * frac
}

/// `shadow <- c * shadow + (1 - c) * live` for every parameter.
pub fn ema_update(shadow: &mut ParamSet, live: &ParamSet, coefficient: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&coefficient) {
        return Err(Error::Contract(format!(
            "EMA coefficient must lie in [0, 1], got {coefficient}"
        )));
    }
    shadow.check_same_layout(live)?;
    for (name, s) in shadow.iter_mut() {
        let l = live.get(name)?;
        for (s, &l) in s.data_mut().iter_mut().zip(l.data()) {
            *s = coefficient * *s + (1.0 - coefficient) * l;
        }
    }
    Ok(())
}
