use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tape::{Gradients, Tape, Var};
use crate::error::{Error, Result};

/// Index of a parameter inside a [`ParameterStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamId(pub usize);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub value: Vec<f64>,
    /// Adam first moment.
    pub m: Vec<f64>,
    /// Adam second moment.
    pub v: Vec<f64>,
}

/// Named trainable tensors with their optimizer state and gradient slots.
#[derive(Clone, Debug, Default)]
pub struct ParameterStore {
    params: Vec<Parameter>,
    grads: Vec<Vec<f64>>,
    has_grad: bool,
    index: HashMap<String, usize>,
    step: u64,
}

impl PartialEq for ParameterStore {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.step == other.step
    }
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a store from serialized parameters.
    pub fn from_parts(params: Vec<Parameter>, step: u64) -> Result<Self> {
        let mut store = ParameterStore {
            step,
            ..Default::default()
        };
        for p in params {
            let n = p.rows * p.cols;
            if p.value.len() != n || p.m.len() != n || p.v.len() != n {
                return Err(Error::shape(format!(
                    "parameter {} declares {}x{} but holds {}/{}/{} values",
                    p.name,
                    p.rows,
                    p.cols,
                    p.value.len(),
                    p.m.len(),
                    p.v.len()
                )));
            }
            if store.index.contains_key(&p.name) {
                return Err(Error::validation(format!("duplicate parameter {}", p.name)));
            }
            store.index.insert(p.name.clone(), store.params.len());
            store.grads.push(vec![0.0; n]);
            store.params.push(p);
        }
        Ok(store)
    }

    pub fn add(&mut self, name: &str, rows: usize, cols: usize, value: Vec<f64>) -> ParamId {
        assert_eq!(rows * cols, value.len(), "parameter {name} shape");
        assert!(!self.index.contains_key(name), "duplicate parameter {name}");
        let n = value.len();
        self.index.insert(name.to_string(), self.params.len());
        self.params.push(Parameter {
            name: name.to_string(),
            rows,
            cols,
            value,
            m: vec![0.0; n],
            v: vec![0.0; n],
        });
        self.grads.push(vec![0.0; n]);
        ParamId(self.params.len() - 1)
    }

    /// Dense weight, uniform in `±sqrt(6 / (fan_in + fan_out))`.
    pub fn add_glorot(&mut self, name: &str, rows: usize, cols: usize, rng: &mut impl Rng) -> ParamId {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        self.add_uniform(name, rows, cols, limit, rng)
    }

    pub fn add_uniform(&mut self, name: &str, rows: usize, cols: usize, limit: f64, rng: &mut impl Rng) -> ParamId {
        let value = (0..rows * cols).map(|_| rng.gen_range(-limit..=limit)).collect();
        self.add(name, rows, cols, value)
    }

    pub fn add_zeros(&mut self, name: &str, rows: usize, cols: usize) -> ParamId {
        self.add(name, rows, cols, vec![0.0; rows * cols])
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).map(|&i| ParamId(i))
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn params(&self) -> &[Parameter] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total scalar count.
    pub fn size(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn grad(&self, id: ParamId) -> &[f64] {
        &self.grads[id.0]
    }

    pub fn has_grad(&self) -> bool {
        self.has_grad
    }

    /// Flat coordinate `k` across all parameters as `(param, offset)`.
    pub fn coordinate(&self, mut k: usize) -> (ParamId, usize) {
        for (i, p) in self.params.iter().enumerate() {
            if k < p.value.len() {
                return (ParamId(i), k);
            }
            k -= p.value.len();
        }
        panic!("coordinate out of range");
    }

    /// Records every parameter as a leaf on `tape`.
    pub fn bind<'t>(&self, tape: &'t Tape) -> Bound<'t> {
        Bound {
            vars: self
                .params
                .iter()
                .map(|p| tape.leaf(p.rows, p.cols, p.value.clone()))
                .collect(),
        }
    }

    /// Adds `scale * buffer` to the gradient slots.
    pub fn accumulate(&mut self, buffer: &GradBuffer, scale: f64) {
        assert_eq!(buffer.0.len(), self.grads.len(), "gradient buffer layout");
        for (dst, src) in self.grads.iter_mut().zip(&buffer.0) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
        self.has_grad = true;
    }

    pub fn zero_grad(&mut self) {
        for g in &mut self.grads {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
        self.has_grad = false;
    }

    pub fn grad_norm(&self) -> f64 {
        self.grads.iter().flatten().map(|g| g * g).sum::<f64>().sqrt()
    }

    /// Rescales gradients so their global L2 norm is at most `max_norm`.
    /// Returns the norm before clipping.
    pub fn clip_grad_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.grad_norm();
        if norm > max_norm {
            let s = max_norm / norm;
            for g in self.grads.iter_mut().flatten() {
                *g *= s;
            }
        }
        norm
    }

    /// One bias-corrected Adam update; gradients are zeroed afterwards.
    pub fn adam_step(&mut self, lr: f64, cfg: &AdamConfig) -> Result<()> {
        if !self.has_grad {
            return Err(Error::Usage("adam step without gradients".into()));
        }
        if self.grads.iter().flatten().any(|g| !g.is_finite()) {
            return Err(Error::numerical("non-finite gradient before adam step"));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for (p, g) in self.params.iter_mut().zip(&self.grads) {
            for (((value, m), v), &g) in p.value.iter_mut().zip(&mut p.m).zip(&mut p.v).zip(g) {
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *value -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
        }
        self.zero_grad();
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Parameters of a store recorded on one tape.
pub struct Bound<'t> {
    vars: Vec<Var<'t>>,
}

impl<'t> Bound<'t> {
    pub fn var(&self, id: ParamId) -> Var<'t> {
        self.vars[id.0]
    }

    /// Pulls the parameter gradients out of a backward pass.
    pub fn collect(&self, grads: &Gradients) -> GradBuffer {
        GradBuffer(
            self.vars
                .iter()
                .map(|v| {
                    grads
                        .wrt(*v)
                        .map(<[f64]>::to_vec)
                        .unwrap_or_else(|| vec![0.0; v.rows() * v.cols()])
                })
                .collect(),
        )
    }
}

/// Per-parameter gradients detached from any tape.
#[derive(Clone, Debug, PartialEq)]
pub struct GradBuffer(pub Vec<Vec<f64>>);

impl GradBuffer {
    pub fn zeros_like(store: &ParameterStore) -> Self {
        GradBuffer(store.params.iter().map(|p| vec![0.0; p.value.len()]).collect())
    }

    pub fn add_scaled(&mut self, other: &GradBuffer, scale: f64) {
        for (dst, src) in self.0.iter_mut().zip(&other.0) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn flat(&self, k: usize) -> f64 {
        let mut k = k;
        for g in &self.0 {
            if k < g.len() {
                return g[k];
            }
            k -= g.len();
        }
        panic!("coordinate out of range");
    }
}
