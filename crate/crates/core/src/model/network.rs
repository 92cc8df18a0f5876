//! Encoder and predictor.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::inputs::{EncoderInputs, FeatureStats, CONTROL_DIM, ROOT_DIM};
use crate::affect::AFFECTIVE_DIM;
use crate::autodiff::{gru_forward, Bound, GruParams, Linear, Mlp, ParameterStore, Tape, Var};
use crate::error::{Error, Result};

/// Parameter handles of the full network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmotiveNet {
    pub config: ModelConfig,
    pub enc1: Mlp,
    pub enc2: Mlp,
    pub gru: GruParams,
    pub fc_root: Linear,
    pub fc_versors: Mlp,
    pub fc_h: Linear,
    pub fc_s: Linear,
    pub fc_delta: Linear,
}

/// Latent codes of the last window frame.
#[derive(Clone, Copy, Debug)]
pub struct Latent<'t> {
    /// Per-frame `γ`, `rows x (H1 + H2)`.
    pub gamma: Var<'t>,
    /// Final GRU state, `1 x H3`.
    pub q_tilde: Var<'t>,
    /// Root code of the last frame, `1 x H4`.
    pub root_tilde: Var<'t>,
}

/// One predicted frame on the tape.
#[derive(Clone, Debug)]
pub struct Prediction<'t> {
    /// Raw quadruples before normalization, one per bone.
    pub q_raw: Vec<[Var<'t>; 4]>,
    pub h: Var<'t>,
    pub s: Var<'t>,
    pub delta: Var<'t>,
}

/// A prediction read back into plain numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionValues {
    pub q_raw: Vec<[f64; 4]>,
    /// Unit quadruples.
    pub q: Vec<[f64; 4]>,
    pub h: f64,
    pub s: f64,
    pub delta: f64,
}

/// Scales a raw quadruple to unit length.
pub fn normalize_quad(raw: [f64; 4]) -> Result<[f64; 4]> {
    let n = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !n.is_finite() || n <= 1e-12 {
        return Err(Error::numerical(format!("cannot normalize quadruple {raw:?}")));
    }
    Ok(raw.map(|v| v / n))
}

impl EmotiveNet {
    pub fn new(store: &mut ParameterStore, config: ModelConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let c = &config;
        let stack = |input: usize, width: usize, depth: usize| {
            let mut dims = vec![input];
            dims.extend(std::iter::repeat_n(width, depth));
            dims
        };
        let enc1 = Mlp::new(
            store,
            "enc1",
            &stack(AFFECTIVE_DIM + c.emotions, c.h1, c.enc1_depth),
            false,
            rng,
        );
        let enc2 = Mlp::new(
            store,
            "enc2",
            &stack(CONTROL_DIM + c.emotions, c.h2, c.enc2_depth),
            false,
            rng,
        );
        let gru = GruParams::new(store, "gru_versors", c.versor_dim() + c.h1 + c.h2, c.h3, rng);
        let fc_root = Linear::new(store, "fc_root", ROOT_DIM + c.h1 + c.h2, c.h4, true, rng);
        let mut vdims = stack(c.h3, c.h3, c.pred_versor_depth - 1);
        vdims.push(c.versor_dim());
        let fc_versors = Mlp::new(store, "fc_versors", &vdims, true, rng);
        let [a, b, d] = c.root_split();
        let fc_h = Linear::new(store, "fc_h", a, 1, false, rng);
        let fc_s = Linear::new(store, "fc_s", b, 1, false, rng);
        let fc_delta = Linear::new(store, "fc_delta", d, 1, false, rng);
        Ok(EmotiveNet {
            config,
            enc1,
            enc2,
            gru,
            fc_root,
            fc_versors,
            fc_h,
            fc_s,
            fc_delta,
        })
    }

    /// Rebuilds the handles for a store created by [`EmotiveNet::new`] with
    /// the same configuration, e.g. one loaded from a checkpoint.
    pub fn attach(store: &ParameterStore, config: ModelConfig) -> Result<Self> {
        let mut shadow = ParameterStore::new();
        let mut rng = rand::rngs::mock::StepRng::new(0, 0);
        let net = EmotiveNet::new(&mut shadow, config, &mut rng)?;
        if shadow.len() != store.len() {
            return Err(Error::shape(format!(
                "store holds {} parameters, configuration expects {}",
                store.len(),
                shadow.len()
            )));
        }
        for (a, b) in shadow.params().iter().zip(store.params()) {
            if a.name != b.name || a.rows != b.rows || a.cols != b.cols {
                return Err(Error::shape(format!(
                    "parameter {} ({}x{}) does not match expected {} ({}x{})",
                    b.name, b.rows, b.cols, a.name, a.rows, a.cols
                )));
            }
        }
        Ok(net)
    }

    fn check_inputs(&self, x: &EncoderInputs) -> Result<()> {
        let c = &self.config;
        let r = x.rows;
        let ok = r > 0
            && x.i1.len() == r * (AFFECTIVE_DIM + c.emotions)
            && x.i2.len() == r * (CONTROL_DIM + c.emotions)
            && x.q.len() == r * c.versor_dim()
            && x.root.len() == r * ROOT_DIM;
        if !ok {
            return Err(Error::shape(format!(
                "encoder inputs for {r} rows have widths i1 {}, i2 {}, q {}, root {}",
                x.i1.len(),
                x.i2.len(),
                x.q.len(),
                x.root.len()
            )));
        }
        Ok(())
    }

    pub fn encode<'t>(&self, tape: &'t Tape, p: &Bound<'t>, x: &EncoderInputs) -> Result<Latent<'t>> {
        self.check_inputs(x)?;
        let c = &self.config;
        let r = x.rows;
        let i1 = tape.constant(r, AFFECTIVE_DIM + c.emotions, x.i1.clone());
        let i2 = tape.constant(r, CONTROL_DIM + c.emotions, x.i2.clone());
        let q = tape.constant(r, c.versor_dim(), x.q.clone());
        let gamma = tape.concat_cols(&[self.enc1.forward(p, i1)?, self.enc2.forward(p, i2)?]);
        let steps: Vec<Var<'t>> = (0..r).map(|t| tape.concat_cols(&[q.row(t), gamma.row(t)])).collect();
        let h0 = tape.constant(1, c.h3, vec![0.0; c.h3]);
        let states = gru_forward(&steps, &self.gru, p, h0)?;
        let q_tilde = *states.last().expect("window has rows");
        let root_last = tape.constant(1, ROOT_DIM, x.root[(r - 1) * ROOT_DIM..].to_vec());
        let root_tilde = self
            .fc_root
            .forward(p, tape.concat_cols(&[root_last, gamma.row(r - 1)]))?;
        let finite = |v: Var<'_>| v.value().iter().all(|x| x.is_finite());
        if !finite(gamma) || !finite(root_tilde) {
            return Err(Error::numerical("non-finite encoder activation"));
        }
        Ok(Latent {
            gamma,
            q_tilde,
            root_tilde,
        })
    }

    /// Output heads. Raw versors are produced on the standardized scale of
    /// `stats` and mapped back to quaternion components.
    pub fn predict<'t>(
        &self,
        p: &Bound<'t>,
        latent: &Latent<'t>,
        x: &EncoderInputs,
        stats: &FeatureStats,
    ) -> Result<Prediction<'t>> {
        let c = &self.config;
        let out = self.fc_versors.forward(p, latent.q_tilde)?;
        let tape = out.tape();
        let dim = c.versor_dim();
        if stats.versor_std.len() != dim {
            return Err(Error::shape(format!(
                "versor statistics cover {} components, network emits {dim}",
                stats.versor_std.len()
            )));
        }
        let scale = tape.constant(1, dim, stats.versor_std.clone());
        let base = if c.versor_residual {
            x.last_q.clone()
        } else {
            stats.versor_mean.clone()
        };
        let raw = out * scale + tape.constant(1, dim, base);
        let values = raw.value();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("non-finite versor output"));
        }
        let scalars = raw.scalars();
        let q_raw = scalars.chunks_exact(4).map(|ch| [ch[0], ch[1], ch[2], ch[3]]).collect();
        let [a, b, _] = c.root_split();
        let rt = latent.root_tilde;
        let h = self.fc_h.forward(p, rt.slice_cols(0, a))?;
        let s = self.fc_s.forward(p, rt.slice_cols(a, b))?;
        let delta = self.fc_delta.forward(p, rt.slice_cols(a + b, c.h4 - a - b))?;
        Ok(Prediction { q_raw, h, s, delta })
    }

    /// Encode and predict in one go.
    pub fn forward<'t>(
        &self,
        tape: &'t Tape,
        p: &Bound<'t>,
        x: &EncoderInputs,
        stats: &FeatureStats,
    ) -> Result<Prediction<'t>> {
        let latent = self.encode(tape, p, x)?;
        self.predict(p, &latent, x, stats)
    }

    /// Value-only prediction on a scratch tape.
    pub fn infer(&self, store: &ParameterStore, x: &EncoderInputs, stats: &FeatureStats) -> Result<PredictionValues> {
        let tape = Tape::new();
        let bound = store.bind(&tape);
        let pred = self.forward(&tape, &bound, x, stats)?;
        PredictionValues::read(&pred)
    }
}

impl PredictionValues {
    pub fn read(pred: &Prediction<'_>) -> Result<Self> {
        let q_raw: Vec<[f64; 4]> = pred.q_raw.iter().map(|q| q.map(|v| v.scalar())).collect();
        let q = q_raw.iter().map(|r| normalize_quad(*r)).collect::<Result<Vec<_>>>()?;
        Ok(PredictionValues {
            q_raw,
            q,
            h: pred.h.scalar(),
            s: pred.s.scalar(),
            delta: pred.delta.scalar(),
        })
    }
}
