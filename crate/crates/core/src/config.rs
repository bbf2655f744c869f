//! Decoder configuration and its JSON file form.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Weight of the model log-probability term relative to the LMBR scores.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lambda {
    /// 0.5 divided by the number of ensemble members.
    Auto,
    Fixed(f64),
}

impl Lambda {
    pub fn resolve(self, members: usize) -> f64 {
        match self {
            Lambda::Auto => 0.5 / members.max(1) as f64,
            Lambda::Fixed(v) => v,
        }
    }
}

impl Default for Lambda {
    fn default() -> Self {
        Lambda::Auto
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LambdaRepr {
    Num(f64),
    Str(String),
}

impl Serialize for Lambda {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Lambda::Auto => LambdaRepr::Str("auto".into()).serialize(s),
            Lambda::Fixed(v) => LambdaRepr::Num(v).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Lambda {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match LambdaRepr::deserialize(d)? {
            LambdaRepr::Num(v) => Ok(Lambda::Fixed(v)),
            LambdaRepr::Str(s) if s == "auto" => Ok(Lambda::Auto),
            LambdaRepr::Str(s) => Err(serde::de::Error::custom(format!(
                "lambda must be a number or \"auto\", got {s:?}"
            ))),
        }
    }
}

/// Θ₀..Θ₄ placeholders. Real systems tune these.
pub const DEFAULT_THETA: [f64; 5] = [0.1, 0.3, 0.3, 0.2, 0.1];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderConfig {
    pub beam_size: usize,
    pub lambda: Lambda,
    /// Θ₀ is the constant term, Θ₁..Θ₄ weight n-gram posteriors of order 1..4.
    pub theta: [f64; 5],
    pub length_norm: bool,
    /// Relative probability ratio for early pruning; 0 disables it.
    pub prune_width: f64,
    pub max_steps_slope: f64,
    pub max_steps_offset: f64,
    pub sentence_batch: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            beam_size: 12,
            lambda: Lambda::Auto,
            theta: DEFAULT_THETA,
            length_norm: false,
            prune_width: 0.0,
            max_steps_slope: 2.0,
            max_steps_offset: 5.0,
            sentence_batch: 1,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.beam_size == 0 {
            return bad("beam_size must be >= 1".into());
        }
        if self.sentence_batch == 0 {
            return bad("sentence_batch must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.prune_width) {
            return bad(format!("prune_width {} not in [0, 1]", self.prune_width));
        }
        if let Lambda::Fixed(v) = self.lambda {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("lambda {v} must be positive"));
            }
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return bad("theta entries must be finite".into());
        }
        if !(self.max_steps_slope.is_finite() && self.max_steps_slope > 0.0) {
            return bad(format!(
                "max_steps_slope {} must be positive",
                self.max_steps_slope
            ));
        }
        if !(self.max_steps_offset.is_finite() && self.max_steps_offset >= 0.0) {
            return bad(format!(
                "max_steps_offset {} must be non-negative",
                self.max_steps_offset
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_lambda_divides_by_members() {
        assert_eq!(Lambda::Auto.resolve(1), 0.5);
        assert_eq!(Lambda::Auto.resolve(2), 0.25);
        assert_eq!(Lambda::Fixed(0.7).resolve(3), 0.7);
    }

    #[test]
    fn parses_full_object() {
        let cfg = DecoderConfig::from_json(
            r#"{"beam_size": 4, "lambda": "auto", "theta": [0, 0.1, 0.2, 0.3, 0.4],
                "length_norm": true, "prune_width": 0.01, "max_steps_slope": 1.5,
                "max_steps_offset": 3, "sentence_batch": 5}"#,
        )
        .unwrap();
        assert_eq!(cfg.beam_size, 4);
        assert_eq!(cfg.lambda, Lambda::Auto);
        assert_eq!(cfg.theta[4], 0.4);
        assert_eq!(cfg.sentence_batch, 5);

        let cfg = DecoderConfig::from_json(r#"{"lambda": 0.25}"#).unwrap();
        assert_eq!(cfg.lambda, Lambda::Fixed(0.25));
        assert_eq!(cfg.beam_size, 12);
    }

    #[test]
    fn rejects_invalid_values() {
        for bad in [
            r#"{"beam_size": 0}"#,
            r#"{"sentence_batch": 0}"#,
            r#"{"prune_width": 1.5}"#,
            r#"{"lambda": "sometimes"}"#,
            r#"{"lambda": -1}"#,
            r#"{"theta": [1, 2, 3]}"#,
            r#"{"beam": 3}"#,
        ] {
            assert!(DecoderConfig::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn json_round_trip() {
        let cfg = DecoderConfig {
            lambda: Lambda::Fixed(0.3),
            ..Default::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(DecoderConfig::from_json(&text).unwrap(), cfg);
        let text = serde_json::to_string(&DecoderConfig::default()).unwrap();
        assert!(text.contains(r#""lambda":"auto""#));
    }
}
