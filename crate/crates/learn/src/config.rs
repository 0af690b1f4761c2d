//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys understood by
//! [`TrainConfig::set`]:
//!
//! | key               | value                          |
//! |-------------------|--------------------------------|
//! | `formula`         | formula text                   |
//! | `mode`            | `me` or `nme`                  |
//! | `epochs`          | integer >= 1                   |
//! | `batch_size`      | integer >= 1                   |
//! | `lr`              | learning rate                  |
//! | `seed`            | integer                        |
//! | `timeout_minutes` | positive number                |
//! | `train`, `test`   | dataset paths                  |
//! | `mnist_dir`       | directory with the IDX files   |
//! | `target`          | refinement target in `[0, 1]`  |
//! | `max_iters`       | refinement iterations          |
//! | `eps`             | refinement tolerance           |
//! | `implication`     | `residuum` or `material`       |
//! | `eval_each_epoch` | `true` or `false`              |

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::train::TrainConfig;

pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", k + 1)))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", k + 1)));
        }
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

pub fn read_kv_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kv(&text).map_err(|e| Error::format(path, e.to_string()))
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key} = {value}: {e}")))
}

impl TrainConfig {
    /// Apply one setting. Returns `false` for keys this type does not own.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "formula" => self.formula = value.to_string(),
            "mode" => self.mode = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "timeout_minutes" => self.timeout_minutes = parse(key, value)?,
            "train" => self.train_path = Some(value.into()),
            "test" => self.test_path = Some(value.into()),
            "mnist_dir" => self.mnist_dir = Some(value.into()),
            "target" => self.refinement.target = parse(key, value)?,
            "max_iters" => self.refinement.max_iterations = parse(key, value)?,
            "eps" => self.refinement.tolerance = parse(key, value)?,
            "implication" => self.implication = parse(key, value)?,
            "eval_each_epoch" => self.eval_each_epoch = parse(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tilr_core::{Implication, TraceMode};

    #[test]
    fn parse_and_apply() {
        let text = "# run\nepochs = 3\nmode=nme\n\nlr = 0.01\nimplication = material\nfoo = bar\n";
        let mut cfg = TrainConfig::default();
        let mut unknown = Vec::new();
        for (k, v) in parse_kv(text).unwrap() {
            if !cfg.set(&k, &v).unwrap() {
                unknown.push(k);
            }
        }
        assert_eq!(cfg.epochs, 3);
        assert_eq!(cfg.mode, TraceMode::Nme);
        assert_eq!(cfg.lr, 0.01);
        assert_eq!(cfg.implication, Implication::Material);
        assert_eq!(unknown, vec!["foo"]);
    }

    #[test]
    fn errors() {
        assert!(parse_kv("epochs 3").is_err());
        assert!(parse_kv(" = 3").is_err());
        let mut cfg = TrainConfig::default();
        assert!(cfg.set("epochs", "many").is_err());
        assert!(cfg.set("mode", "both").is_err());
    }
}
