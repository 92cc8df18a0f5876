//! A straight-line reimplementation of the network forward pass on plain
//! arrays, checked against the tape implementation.

use emogait::affect::AFFECTIVE_DIM;
use emogait::autodiff::ParameterStore;
use emogait::model::inputs::{CONTROL_DIM, ROOT_DIM};
use emogait::model::{EmotiveNet, EncoderInputs, FeatureStats, LocalFrame, ModelConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Weights<'a>(&'a ParameterStore);

impl Weights<'_> {
    fn get(&self, name: &str) -> (&[f64], usize, usize) {
        let id = self.0.id(name).unwrap_or_else(|| panic!("missing parameter {name}"));
        let p = self.0.get(id);
        (&p.value, p.rows, p.cols)
    }

    /// `x · W + b` for the layer called `name`.
    fn affine(&self, name: &str, x: &[f64]) -> Vec<f64> {
        let (w, rows, cols) = self.get(&format!("{name}.weight"));
        let (b, _, _) = self.get(&format!("{name}.bias"));
        assert_eq!(rows, x.len(), "{name}");
        (0..cols)
            .map(|m| b[m] + (0..rows).map(|n| x[n] * w[n * cols + m]).sum::<f64>())
            .collect()
    }
}

fn elu(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| if x > 0.0 { x } else { x.exp() - 1.0 }).collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn row(data: &[f64], width: usize, t: usize) -> &[f64] {
    &data[t * width..(t + 1) * width]
}

struct Reference {
    q_raw: Vec<f64>,
    h: f64,
    s: f64,
    delta: f64,
}

fn reference_forward(cfg: &ModelConfig, store: &ParameterStore, x: &EncoderInputs, stats: &FeatureStats) -> Reference {
    let w = Weights(store);
    let (c, h3) = (cfg.emotions, cfg.h3);
    let mlp = |prefix: &str, layers: usize, input: &[f64], linear_last: bool| {
        let mut v = input.to_vec();
        for i in 0..layers {
            v = w.affine(&format!("{prefix}.{i}"), &v);
            if !(linear_last && i + 1 == layers) {
                v = elu(v);
            }
        }
        v
    };

    let mut gamma = Vec::new();
    for t in 0..x.rows {
        let mut g = mlp("enc1", cfg.enc1_depth, row(&x.i1, AFFECTIVE_DIM + c, t), false);
        g.extend(mlp("enc2", cfg.enc2_depth, row(&x.i2, CONTROL_DIM + c, t), false));
        gamma.push(g);
    }

    let (wi, n_in, _) = w.get("gru_versors.w_input");
    let (ug, _, _) = w.get("gru_versors.u_gates");
    let (uc, _, _) = w.get("gru_versors.u_candidate");
    let (bias, _, _) = w.get("gru_versors.bias");
    let mut h = vec![0.0; h3];
    for (t, g) in gamma.iter().enumerate() {
        let mut input = row(&x.q, cfg.versor_dim(), t).to_vec();
        input.extend(g);
        assert_eq!(input.len(), n_in);
        let xw = |col: usize| (0..n_in).map(|n| input[n] * wi[n * 3 * h3 + col]).sum::<f64>();
        let z: Vec<f64> = (0..h3)
            .map(|k| sigmoid(xw(k) + (0..h3).map(|j| h[j] * ug[j * 2 * h3 + k]).sum::<f64>() + bias[k]))
            .collect();
        let r: Vec<f64> = (0..h3)
            .map(|k| sigmoid(xw(h3 + k) + (0..h3).map(|j| h[j] * ug[j * 2 * h3 + h3 + k]).sum::<f64>() + bias[h3 + k]))
            .collect();
        let n: Vec<f64> = (0..h3)
            .map(|k| {
                let rec = (0..h3).map(|j| r[j] * h[j] * uc[j * h3 + k]).sum::<f64>();
                (xw(2 * h3 + k) + rec + bias[2 * h3 + k]).tanh()
            })
            .collect();
        h = (0..h3).map(|k| (1.0 - z[k]) * n[k] + z[k] * h[k]).collect();
    }

    let out = mlp("fc_versors", cfg.pred_versor_depth, &h, true);
    let q_raw = out
        .iter()
        .zip(&stats.versor_std)
        .zip(&stats.versor_mean)
        .map(|((o, s), m)| o * s + m)
        .collect();

    let mut root_in = row(&x.root, ROOT_DIM, x.rows - 1).to_vec();
    root_in.extend(gamma.last().unwrap());
    let root = elu(w.affine("fc_root", &root_in));
    let [a, b, _] = cfg.root_split();
    Reference {
        q_raw,
        h: w.affine("fc_h", &root[..a])[0],
        s: w.affine("fc_s", &root[a..a + b])[0],
        delta: w.affine("fc_delta", &root[a + b..])[0],
    }
}

fn random_inputs(cfg: &ModelConfig, rows: usize, rng: &mut impl Rng) -> EncoderInputs {
    let mut fill = |n: usize| (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect::<Vec<f64>>();
    EncoderInputs {
        rows,
        i1: fill(rows * (AFFECTIVE_DIM + cfg.emotions)),
        i2: fill(rows * (CONTROL_DIM + cfg.emotions)),
        q: fill(rows * cfg.versor_dim()),
        last_q: fill(cfg.versor_dim()),
        root: fill(rows * ROOT_DIM),
        frame: LocalFrame {
            origin: [0.0; 3],
            heading: 0.0,
        },
    }
}

fn randomize(store: &mut ParameterStore, rng: &mut impl Rng) {
    // biases start at zero; give every entry a value so each path is exercised
    for i in 0..store.len() {
        let id = emogait::autodiff::ParamId(i);
        for v in store.get_mut(id).value.iter_mut() {
            *v += rng.gen_range(-0.3..0.3);
        }
    }
}

fn check(cfg: ModelConfig, rows: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParameterStore::new();
    let net = EmotiveNet::new(&mut store, cfg.clone(), &mut rng).unwrap();
    randomize(&mut store, &mut rng);
    let mut stats = FeatureStats::identity(cfg.joints - 1);
    for (m, s) in stats.versor_mean.iter_mut().zip(stats.versor_std.iter_mut()) {
        *m = rng.gen_range(-0.5..0.5);
        *s = rng.gen_range(0.05..2.0);
    }
    let x = random_inputs(&cfg, rows, &mut rng);

    let got = net.infer(&store, &x, &stats).unwrap();
    let want = reference_forward(&cfg, &store, &x, &stats);
    let flat: Vec<f64> = got.q_raw.iter().flatten().copied().collect();
    assert_eq!(flat.len(), want.q_raw.len());
    for (k, (a, b)) in flat.iter().zip(&want.q_raw).enumerate() {
        assert!((a - b).abs() <= 1e-12, "versor component {k}: {a} vs {b}");
    }
    for (name, a, b) in [
        ("h", got.h, want.h),
        ("s", got.s, want.s),
        ("delta", got.delta, want.delta),
    ] {
        assert!((a - b).abs() <= 1e-12, "{name}: {a} vs {b}");
    }
}

#[test]
fn smallest_network_matches_reference() {
    let cfg = ModelConfig {
        h1: 2,
        h2: 2,
        h3: 4,
        h4: 3,
        window: 3,
        ..ModelConfig::default()
    };
    check(cfg, 3, 5);
}

#[test]
fn tiny_config_matches_reference_on_a_full_window() {
    let cfg = ModelConfig::tiny();
    let rows = cfg.window;
    check(cfg, rows, 6);
}

#[test]
fn uneven_root_split_matches_reference() {
    let cfg = ModelConfig {
        h1: 3,
        h2: 2,
        h3: 5,
        h4: 8,
        window: 4,
        pred_versor_depth: 3,
        ..ModelConfig::default()
    };
    check(cfg, 2, 7);
}
