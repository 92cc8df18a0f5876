use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::{Bound, ParameterStore};
use super::tape::{Tape, Var};
use crate::error::Result;

/// Outcome of [`finite_difference_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub coordinates: usize,
    /// Flat coordinate with the largest error.
    pub worst: usize,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
}

/// Compares analytic gradients against central differences.
///
/// Checks every coordinate when the store has at most `max_coords` of them,
/// otherwise a seeded random subset of `max_coords`. Relative error uses
/// `max(|analytic|, |numeric|, 1e-8)` as denominator.
pub fn finite_difference_check<F>(
    store: &ParameterStore,
    epsilon: f64,
    max_coords: usize,
    seed: u64,
    loss: F,
) -> Result<GradCheckReport>
where
    F: for<'t> Fn(&'t Tape, &Bound<'t>) -> Result<Var<'t>>,
{
    let tape = Tape::new();
    let bound = store.bind(&tape);
    let out = loss(&tape, &bound)?;
    let analytic = bound.collect(&tape.backward(out)?);

    let total = store.size();
    let coords: Vec<usize> = if total <= max_coords {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = sample(&mut rng, total, max_coords).into_vec();
        c.sort_unstable();
        c
    };

    let eval = |s: &ParameterStore| -> Result<f64> {
        let tape = Tape::new();
        let bound = s.bind(&tape);
        Ok(loss(&tape, &bound)?.scalar())
    };

    let mut probe = store.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        coordinates: coords.len(),
        worst: 0,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
    };
    for &k in &coords {
        let (id, off) = store.coordinate(k);
        let orig = store.get(id).value[off];
        probe.get_mut(id).value[off] = orig + epsilon;
        let plus = eval(&probe)?;
        probe.get_mut(id).value[off] = orig - epsilon;
        let minus = eval(&probe)?;
        probe.get_mut(id).value[off] = orig;
        let numeric = (plus - minus) / (2.0 * epsilon);
        let a = analytic.flat(k);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        if rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst = k;
            report.worst_analytic = a;
            report.worst_numeric = numeric;
        }
    }
    Ok(report)
}
