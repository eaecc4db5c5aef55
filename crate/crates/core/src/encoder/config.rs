use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Which tokens the encoder reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EncoderVariant {
    /// `α αᵀ α`
    F1,
    /// `α` itself
    F2,
}

impl fmt::Display for EncoderVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncoderVariant::F1 => "F1",
            EncoderVariant::F2 => "F2",
        })
    }
}

impl FromStr for EncoderVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "F1" => Ok(EncoderVariant::F1),
            "F2" => Ok(EncoderVariant::F2),
            _ => Err(Error::EncoderConfig(format!("unknown encoder variant {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EncoderOptimizer {
    #[default]
    GradientDescent,
    Adam,
}

impl FromStr for EncoderOptimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gd" | "sgd" | "gradient-descent" => Ok(EncoderOptimizer::GradientDescent),
            "adam" => Ok(EncoderOptimizer::Adam),
            _ => Err(Error::EncoderConfig(format!("unknown optimizer {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub d_encoder: usize,
    pub heads: usize,
    pub layers: usize,
    pub d_ff: usize,
    /// Step lag `m` of the self-distance loss.
    pub lag: usize,
    pub eta: f64,
    pub variant: EncoderVariant,
    /// Add sinusoidal position codes to the embedded tokens.
    pub positional: bool,
    pub optimizer: EncoderOptimizer,
    /// Start the output projection at zero so that `F ≡ 0` at init.
    ///
    /// Off by default: with a zero head the max-abs loss has zero gradient
    /// at step 0 and the encoder never leaves zero.
    pub zero_output_head: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            d_encoder: 16,
            heads: 2,
            layers: 2,
            d_ff: 32,
            lag: 1,
            eta: 1e-3,
            variant: EncoderVariant::F1,
            positional: true,
            optimizer: EncoderOptimizer::GradientDescent,
            zero_output_head: false,
        }
    }
}

impl EncoderConfig {
    pub fn d_k(&self) -> usize {
        self.d_encoder / self.heads
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::EncoderConfig(m.into()));
        if self.d_encoder == 0 || self.heads == 0 || self.d_ff == 0 {
            return bad("d_encoder, heads and d_ff must be positive");
        }
        if !self.d_encoder.is_multiple_of(self.heads) {
            return bad("d_encoder must be divisible by the head count");
        }
        if self.positional && !self.d_encoder.is_multiple_of(2) {
            return bad("positional encoding needs an even d_encoder");
        }
        if self.lag == 0 {
            return bad("lag must be at least 1");
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return bad("eta must be finite and non-negative");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = EncoderConfig::default();
        c.validate().unwrap();
        assert_eq!(c.d_k(), 8);
    }

    #[test]
    fn rejects_bad_shapes() {
        let c = EncoderConfig {
            heads: 3,
            ..EncoderConfig::default()
        };
        assert!(c.validate().is_err());
        let c = EncoderConfig {
            lag: 0,
            ..EncoderConfig::default()
        };
        assert!(c.validate().is_err());
        let c = EncoderConfig {
            d_encoder: 5,
            heads: 5,
            ..EncoderConfig::default()
        };
        assert!(c.validate().is_err());
        assert!(EncoderConfig { positional: false, ..c }.validate().is_ok());
    }

    #[test]
    fn parse_names() {
        assert_eq!("f2".parse::<EncoderVariant>().unwrap(), EncoderVariant::F2);
        assert_eq!("Adam".parse::<EncoderOptimizer>().unwrap(), EncoderOptimizer::Adam);
        assert!("F3".parse::<EncoderVariant>().is_err());
    }
}
