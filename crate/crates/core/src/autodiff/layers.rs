use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{Bound, ParamId, ParameterStore};
use super::tape::Var;
use crate::error::{Error, Result};

/// `input · weights + bias` for `input: B x N`, `weights: N x M`, `bias: 1 x M`.
pub fn dense<'t>(input: Var<'t>, weights: Var<'t>, bias: Var<'t>) -> Result<Var<'t>> {
    let (_, n) = input.shape();
    let (wn, m) = weights.shape();
    if n != wn || bias.shape() != (1, m) {
        return Err(Error::shape(format!(
            "dense: input {:?}, weights {:?}, bias {:?}",
            input.shape(),
            weights.shape(),
            bias.shape()
        )));
    }
    Ok(input.matmul(weights).add_row(bias))
}

/// Elementwise ELU with unit alpha.
pub fn elu(input: Var<'_>) -> Var<'_> {
    input.elu()
}

/// One fully connected layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weights: ParamId,
    pub bias: ParamId,
    pub activate: bool,
}

impl Linear {
    pub fn new(
        store: &mut ParameterStore,
        name: &str,
        fan_in: usize,
        fan_out: usize,
        activate: bool,
        rng: &mut impl Rng,
    ) -> Self {
        Linear {
            weights: store.add_glorot(&format!("{name}.weight"), fan_in, fan_out, rng),
            bias: store.add_zeros(&format!("{name}.bias"), 1, fan_out),
            activate,
        }
    }

    pub fn forward<'t>(&self, params: &Bound<'t>, x: Var<'t>) -> Result<Var<'t>> {
        let y = dense(x, params.var(self.weights), params.var(self.bias))?;
        Ok(if self.activate { y.elu() } else { y })
    }
}

/// A stack of [`Linear`] layers applied in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

impl Mlp {
    /// Layers of widths `dims[0] -> dims[1] -> ...`; ELU after every layer
    /// unless `linear_output`, in which case the last layer is affine.
    pub fn new(
        store: &mut ParameterStore,
        name: &str,
        dims: &[usize],
        linear_output: bool,
        rng: &mut impl Rng,
    ) -> Self {
        let count = dims.len() - 1;
        let layers = (0..count)
            .map(|i| {
                let activate = !(linear_output && i + 1 == count);
                Linear::new(store, &format!("{name}.{i}"), dims[i], dims[i + 1], activate, rng)
            })
            .collect();
        Mlp { layers }
    }

    pub fn forward<'t>(&self, params: &Bound<'t>, mut x: Var<'t>) -> Result<Var<'t>> {
        for layer in &self.layers {
            x = layer.forward(params, x)?;
        }
        Ok(x)
    }
}

/// Gated recurrent unit weights. Gate blocks are stacked as `[z | r | n]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GruParams {
    pub input_size: usize,
    pub hidden_size: usize,
    /// `N x 3H`
    pub w_input: ParamId,
    /// `H x 2H`, update and reset gates.
    pub u_gates: ParamId,
    /// `H x H`, candidate state.
    pub u_candidate: ParamId,
    /// `1 x 3H`
    pub bias: ParamId,
}

impl GruParams {
    pub fn new(
        store: &mut ParameterStore,
        name: &str,
        input_size: usize,
        hidden_size: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let h = hidden_size;
        let recurrent = 1.0 / (h as f64).sqrt();
        GruParams {
            input_size,
            hidden_size,
            w_input: store.add_glorot(&format!("{name}.w_input"), input_size, 3 * h, rng),
            u_gates: store.add_uniform(&format!("{name}.u_gates"), h, 2 * h, recurrent, rng),
            u_candidate: store.add_uniform(&format!("{name}.u_candidate"), h, h, recurrent, rng),
            bias: store.add_zeros(&format!("{name}.bias"), 1, 3 * h),
        }
    }
}

/// Runs a GRU over `inputs` (each `B x N`) from `initial_state` (`B x H`),
/// returning every hidden state.
///
/// ```text
/// z = σ(x Wz + h Uz + bz)
/// r = σ(x Wr + h Ur + br)
/// n = tanh(x Wn + (r ⊙ h) Un + bn)
/// h' = (1 - z) ⊙ n + z ⊙ h
/// ```
pub fn gru_forward<'t>(
    inputs: &[Var<'t>],
    gru: &GruParams,
    params: &Bound<'t>,
    initial_state: Var<'t>,
) -> Result<Vec<Var<'t>>> {
    let h = gru.hidden_size;
    let (batch, hs) = initial_state.shape();
    if hs != h {
        return Err(Error::shape(format!(
            "gru: initial state {:?}, hidden size {h}",
            initial_state.shape()
        )));
    }
    let w = params.var(gru.w_input);
    let u_gates = params.var(gru.u_gates);
    let u_cand = params.var(gru.u_candidate);
    let b = params.var(gru.bias);
    let mut state = initial_state;
    let mut out = Vec::with_capacity(inputs.len());
    for (t, &x) in inputs.iter().enumerate() {
        if x.shape() != (batch, gru.input_size) {
            return Err(Error::shape(format!(
                "gru step {t}: input {:?}, expected ({batch}, {})",
                x.shape(),
                gru.input_size
            )));
        }
        let xw = dense(x, w, b)?;
        let hu = state.matmul(u_gates);
        let z = (xw.slice_cols(0, h) + hu.slice_cols(0, h)).sigmoid();
        let r = (xw.slice_cols(h, h) + hu.slice_cols(h, h)).sigmoid();
        let n = (xw.slice_cols(2 * h, h) + (r * state).matmul(u_cand)).tanh();
        state = n + z * (state - n);
        let values = state.value();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(format!("gru step {t}: non-finite state")));
        }
        out.push(state);
    }
    Ok(out)
}
