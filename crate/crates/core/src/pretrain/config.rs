//! Training configuration and its `key = value` file form.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::sampling::RelationKind;
use crate::encoder::{DEFAULT_HIDDEN, DEFAULT_NEIGHBOR_CAP, DEFAULT_WORD_DIM};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: RelationKind,
    pub margin: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Decoupled L2 decay applied with every Adam step.
    pub weight_decay: f64,
    pub seed: u64,
    pub neighbor_cap: usize,
    pub negatives_per_positive: usize,
    pub hidden: usize,
    /// Word vector width used when no pretrained table is supplied.
    pub word_dim: usize,
    /// Uniform init range for generated word vectors.
    pub word_init_scale: f64,
    pub freeze_words: bool,
    pub heldout_fraction: f64,
    /// Positive pairs per epoch; `None` = one per triple.
    pub pairs_per_epoch: Option<usize>,
    /// 1 = deterministic single-threaded mode.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            kind: RelationKind::Direct,
            margin: 0.1,
            epochs: 5,
            batch_size: 64,
            learning_rate: 1e-3,
            weight_decay: 0.0,
            seed: 0,
            neighbor_cap: DEFAULT_NEIGHBOR_CAP,
            negatives_per_positive: 1,
            hidden: DEFAULT_HIDDEN,
            word_dim: DEFAULT_WORD_DIM,
            word_init_scale: 0.5,
            freeze_words: false,
            heldout_fraction: 0.05,
            pairs_per_epoch: None,
            threads: 1,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return bad("margin must be positive");
        }
        if self.epochs == 0
            || self.batch_size == 0
            || self.neighbor_cap == 0
            || self.negatives_per_positive == 0
            || self.hidden == 0
            || self.word_dim == 0
            || self.threads == 0
        {
            return bad("epochs, batch_size, neighbor_cap, negatives_per_positive, hidden, word_dim and threads must be positive");
        }
        if self.pairs_per_epoch == Some(0) {
            return bad("pairs_per_epoch must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a non-negative number");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay must be a non-negative number");
        }
        if !(0.0..1.0).contains(&self.heldout_fraction) {
            return bad("heldout_fraction must be in [0, 1)");
        }
        if !(self.word_init_scale > 0.0) {
            return bad("word_init_scale must be positive");
        }
        Ok(())
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "kind" => self.kind = value.parse()?,
            "margin" => self.margin = parse_value(key, value)?,
            "epochs" => self.epochs = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "learning_rate" => self.learning_rate = parse_value(key, value)?,
            "weight_decay" => self.weight_decay = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "neighbor_cap" => self.neighbor_cap = parse_value(key, value)?,
            "negatives_per_positive" => self.negatives_per_positive = parse_value(key, value)?,
            "hidden" => self.hidden = parse_value(key, value)?,
            "word_dim" => self.word_dim = parse_value(key, value)?,
            "word_init_scale" => self.word_init_scale = parse_value(key, value)?,
            "freeze_words" => self.freeze_words = parse_value(key, value)?,
            "heldout_fraction" => self.heldout_fraction = parse_value(key, value)?,
            "pairs_per_epoch" => {
                self.pairs_per_epoch = match value {
                    "" | "none" | "all" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "threads" => self.threads = parse_value(key, value)?,
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Read `key = value` lines over the defaults. `#` starts a comment.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = TrainConfig::default();
        c.validate().unwrap();
        assert_eq!(c.margin, 0.1);
        assert_eq!(c.batch_size, 64);
        assert_eq!(c.learning_rate, 1e-3);
        assert_eq!(c.epochs, 5);
    }

    #[test]
    fn parses_key_values() {
        let text = "# run\nkind = indirect\nmargin=0.2  # wider\nepochs = 3\nfreeze_words = true\npairs_per_epoch = 500\n";
        let c = TrainConfig::from_reader(text.as_bytes()).unwrap();
        assert_eq!(c.kind, RelationKind::Indirect);
        assert_eq!(c.margin, 0.2);
        assert_eq!(c.epochs, 3);
        assert!(c.freeze_words);
        assert_eq!(c.pairs_per_epoch, Some(500));
    }

    #[test]
    fn rejects_bad_settings() {
        assert!(TrainConfig::from_reader("margin = 0\n".as_bytes()).is_err());
        assert!(TrainConfig::from_reader("colour = blue\n".as_bytes()).is_err());
        assert!(TrainConfig::from_reader("epochs = many\n".as_bytes()).is_err());
        assert!(TrainConfig::from_reader("just words\n".as_bytes()).is_err());
        assert!(TrainConfig::from_reader("batch_size = 0\n".as_bytes()).is_err());
    }
}
