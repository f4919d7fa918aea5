//! JSON forms accepted for fields, diffeomorphisms and matrices.
//!
//! A periodic field is one of
//!
//! * `{"n": 256, "samples": [...]}`: grid values,
//! * `{"n": 256, "mean": 0.0, "sin": [[1, 0.2]], "cos": [[2, 0.05]]}`: a
//!   trigonometric polynomial given as `[k, amplitude]` pairs,
//! * `{"n": 256, "random": {"modes": 8, "amplitude": 0.3}}`: drawn from the
//!   run seed.
//!
//! Diffeomorphisms use the same forms for the displacement `f(x) - x`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use virlab_core::random::{substream, trig_diffeo, trig_field, FieldSpec};
use virlab_core::{CircleDiffeo, GridConfig, PeriodicFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigSpec {
    pub n: usize,
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub sin: Vec<(u32, f64)>,
    #[serde(default)]
    pub cos: Vec<(u32, f64)>,
}

impl TrigSpec {
    pub fn sine(n: usize, amplitude: f64) -> Self {
        Self {
            n,
            mean: 0.0,
            sin: vec![(1, amplitude)],
            cos: vec![],
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let s: f64 = self.sin.iter().map(|&(k, a)| a * (k as f64 * x).sin()).sum();
        let c: f64 = self.cos.iter().map(|&(k, a)| a * (k as f64 * x).cos()).sum();
        self.mean + s + c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomSpec {
    pub modes: usize,
    pub amplitude: f64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self {
            modes: 8,
            amplitude: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomInput {
    pub n: usize,
    pub random: RandomSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum FieldInput {
    Samples(PeriodicFunction),
    Trig(TrigSpec),
    Random(RandomInput),
}

fn classify<'de, D: Deserializer<'de>>(d: D) -> Result<(Value, &'static str), D::Error> {
    let v = Value::deserialize(d)?;
    let Some(obj) = v.as_object() else {
        return Err(D::Error::custom("expected an object with \"n\" and one of \"samples\", \"random\" or trig terms"));
    };
    let kind = if obj.contains_key("samples") {
        "samples"
    } else if obj.contains_key("random") {
        "random"
    } else {
        "trig"
    };
    Ok((v, kind))
}

impl<'de> Deserialize<'de> for FieldInput {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (v, kind) = classify(d)?;
        let r = match kind {
            "samples" => serde_json::from_value(v).map(FieldInput::Samples),
            "random" => serde_json::from_value(v).map(FieldInput::Random),
            _ => serde_json::from_value(v).map(FieldInput::Trig),
        };
        r.map_err(|e| D::Error::custom(format!("{kind} field: {e}")))
    }
}

impl FieldInput {
    pub fn n(&self) -> usize {
        match self {
            FieldInput::Samples(p) => p.n(),
            FieldInput::Trig(t) => t.n,
            FieldInput::Random(r) => r.n,
        }
    }

    /// Random forms draw from stream `stream` of `seed`.
    pub fn build(&self, seed: u64, stream: u64) -> virlab_core::Result<PeriodicFunction> {
        let grid = GridConfig::new(self.n())?;
        Ok(match self {
            FieldInput::Samples(p) => p.clone(),
            FieldInput::Trig(t) => PeriodicFunction::from_fn(grid, |x| t.eval(x)),
            FieldInput::Random(r) => {
                let spec = FieldSpec {
                    modes: r.random.modes,
                    amplitude: r.random.amplitude,
                    zero_mean: true,
                };
                trig_field(&mut substream(seed, stream), grid, spec)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum DiffeoInput {
    Samples(CircleDiffeo),
    Trig(TrigSpec),
    Random(RandomInput),
}

impl<'de> Deserialize<'de> for DiffeoInput {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (v, kind) = classify(d)?;
        let r = match kind {
            "samples" => serde_json::from_value(v).map(DiffeoInput::Samples),
            "random" => serde_json::from_value(v).map(DiffeoInput::Random),
            _ => serde_json::from_value(v).map(DiffeoInput::Trig),
        };
        r.map_err(|e| D::Error::custom(format!("{kind} diffeomorphism: {e}")))
    }
}

impl DiffeoInput {
    pub fn n(&self) -> usize {
        match self {
            DiffeoInput::Samples(f) => f.n(),
            DiffeoInput::Trig(t) => t.n,
            DiffeoInput::Random(r) => r.n,
        }
    }

    pub fn build(&self, seed: u64, stream: u64) -> virlab_core::Result<CircleDiffeo> {
        let grid = GridConfig::new(self.n())?;
        match self {
            DiffeoInput::Samples(f) => Ok(f.clone()),
            DiffeoInput::Trig(t) => CircleDiffeo::from_fn(grid, |x| t.eval(x)),
            DiffeoInput::Random(r) => Ok(trig_diffeo(
                &mut substream(seed, stream),
                grid,
                r.random.modes,
                r.random.amplitude,
                0.5,
                false,
            )),
        }
    }
}

pub fn diagonal(values: &[f64]) -> Vec<Vec<f64>> {
    (0..values.len())
        .map(|i| (0..values.len()).map(|j| if i == j { values[i] } else { 0.0 }).collect())
        .collect()
}
