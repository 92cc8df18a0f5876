use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Component order of the default four-emotion model.
pub const EMOTION_NAMES: [&str; 4] = ["happy", "sad", "angry", "neutral"];

/// Nonnegative weights over categorical emotions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmotionVector(Vec<f64>);

impl EmotionVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::validation("emotion vector is empty"));
        }
        if let Some(c) = components.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::validation(format!(
                "emotion component {c} is negative or non-finite"
            )));
        }
        Ok(EmotionVector(components))
    }

    /// `new` followed by L1 normalization.
    pub fn normalized(components: Vec<f64>) -> Result<Self> {
        EmotionVector::new(components)?.normalize()
    }

    /// One-hot vector with component `k` set, out of `c`.
    pub fn one_hot(k: usize, c: usize) -> Self {
        let mut v = vec![0.0; c];
        v[k] = 1.0;
        EmotionVector(v)
    }

    pub fn normalize(&self) -> Result<Self> {
        let sum: f64 = self.0.iter().sum();
        if sum <= 0.0 {
            return Err(Error::validation("emotion vector sums to zero"));
        }
        Ok(EmotionVector(self.0.iter().map(|c| c / sum).collect()))
    }

    /// Parses `"h,s,a,n"`.
    pub fn parse(text: &str) -> Result<Self> {
        let comps = text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::validation(format!("bad emotion component '{t}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        EmotionVector::new(comps)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::fmt::Display for EmotionVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| format!("{c}")).collect();
        write!(f, "{}", parts.join(","))
    }
}
