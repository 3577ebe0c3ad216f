//! Layered run configuration: built-in defaults, then a flat `key = value`
//! file, then command-line flags.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "TFKAN_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "tfkan-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Train,
    Eval,
    Predict,
    Toy,
    Ablate,
    Sweep,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Train,
        Command::Eval,
        Command::Predict,
        Command::Toy,
        Command::Ablate,
        Command::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Predict => "predict",
            Command::Toy => "toy",
            Command::Ablate => "ablate",
            Command::Sweep => "sweep",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Command::Train => "Train a forecaster on a CSV or synthetic series and write a checkpoint",
            Command::Eval => "Score a checkpoint on the test split",
            Command::Predict => "Forecast the horizon after the last lookback window of a CSV",
            Command::Toy => "Fit KAN and a parameter-matched MLP to the four toy functions",
            Command::Ablate => "Train every architecture variant with shared settings",
            Command::Sweep => "Vary the lookback and the embedding width",
        }
    }

    fn desk_scale(self) -> bool {
        matches!(self, Command::Ablate | Command::Sweep)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Value,
    Switch,
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub key: &'static str,
    pub kind: Kind,
    pub help: &'static str,
}

const fn v(key: &'static str, help: &'static str) -> KeySpec {
    KeySpec { key, kind: Kind::Value, help }
}

const fn s(key: &'static str, help: &'static str) -> KeySpec {
    KeySpec { key, kind: Kind::Switch, help }
}

const COMMON: &[KeySpec] = &[
    v("out", "output directory (default: $TFKAN_OUT_DIR or ./tfkan-out)"),
    v("seed", "seed for initialisation and shuffling"),
];

const DATA: &[KeySpec] = &[
    v("data", "CSV with a header row and an optional leading timestamp column"),
    s("synthetic", "use the seeded multi-periodic synthetic series instead of --data"),
    v("channels", "synthetic channel count"),
    v("length", "synthetic series length"),
    v("periods", "comma-separated synthetic periods"),
    v("noise", "synthetic Gaussian noise level"),
    v("trend", "largest synthetic trend rise over the series"),
    v("synthetic_seed", "seed of the synthetic generator"),
    v("split", "train:val:test ratios"),
];

const MODEL: &[KeySpec] = &[
    v("lookback", "input window length L"),
    v("horizon", "forecast horizon"),
    v("embed_dim", "embedding width d"),
    v("hidden", "hidden width of every two-layer block"),
    v("grid_size", "B-spline grid intervals"),
    v("spline_order", "B-spline order"),
    v("depth", "layers in the time network and predictor (1 or 2)"),
    v("variant", "named architecture variant"),
    v("freq_module", "kan, mlp or off (default: from the variant)"),
    v("time_module", "kan, mlp or off (default: from the variant)"),
    v("predictor_module", "kan or mlp (default: from the variant)"),
    v("adjust", "freq-only, all, none or time-only (default: from the variant)"),
    v("sharing", "shared or two (default: from the variant)"),
];

const TRAIN: &[KeySpec] = &[
    v("lr", "Adam learning rate"),
    v("batch", "mini-batch size"),
    v("epochs", "epoch cap"),
    v("patience", "epochs without validation improvement before stopping"),
    v("eval_batch", "windows per forward pass when scoring"),
    s("denormalize", "also report metrics on the original scale"),
];

const GRID: &[KeySpec] = &[
    v("lr_grid", "comma-separated learning rates to search (picks the best validation loss)"),
    v("batch_grid", "comma-separated batch sizes to search"),
];

const CHECKPOINT: &[KeySpec] = &[v("checkpoint", "checkpoint manifest written by `train`")];

const PREDICT: &[KeySpec] = &[v("input", "CSV whose last rows form the lookback window")];

const TOY: &[KeySpec] = &[
    v("train_points", "equispaced training points on [0, 1]"),
    v("test_points", "held-out midpoints"),
    v("steps", "full-batch Adam steps"),
    v("lr", "Adam learning rate"),
    v("kan_hidden", "KAN hidden width (the MLP is sized to match its parameter count)"),
    v("grid_size", "B-spline grid intervals"),
    v("spline_order", "B-spline order"),
];

const ABLATE: &[KeySpec] = &[
    v("variants", "comma-separated variants, or `all`"),
    v("jobs", "concurrent trainings"),
];

const SWEEP: &[KeySpec] = &[
    v("lookbacks", "comma-separated lookback values"),
    v("embed_dims", "comma-separated embedding widths"),
    v("jobs", "concurrent trainings"),
];

pub fn keys(cmd: Command) -> Vec<KeySpec> {
    let groups: &[&[KeySpec]] = match cmd {
        Command::Train => &[COMMON, DATA, MODEL, TRAIN, GRID],
        Command::Eval => &[COMMON, CHECKPOINT, DATA, &MODEL[..2], &TRAIN[4..]],
        Command::Predict => &[COMMON, CHECKPOINT, PREDICT],
        Command::Toy => &[COMMON, TOY],
        Command::Ablate => &[COMMON, DATA, MODEL, TRAIN, ABLATE],
        Command::Sweep => &[COMMON, DATA, MODEL, TRAIN, SWEEP],
    };
    groups.iter().flat_map(|g| g.iter().copied()).collect()
}

fn default_value(cmd: Command, key: &str) -> String {
    let desk = cmd.desk_scale();
    let text = match key {
        "out" => return std::env::var(OUT_DIR_ENV).unwrap_or_else(|_| DEFAULT_OUT_DIR.to_string()),
        "seed" | "synthetic_seed" => "42",
        "data" | "checkpoint" | "input" | "lr_grid" | "batch_grid" => "",
        "synthetic" | "denormalize" => "false",
        "channels" => "3",
        "length" if cmd == Command::Sweep => "4000",
        "length" => "2000",
        "periods" => "24,12,8,48",
        "noise" => "0.05",
        "trend" => "0.5",
        "split" => "7:2:1",
        "lookback" if desk => "48",
        "lookback" => "96",
        "horizon" if desk => "12",
        "horizon" => "24",
        "embed_dim" if desk => "16",
        "embed_dim" => "128",
        "hidden" if desk => "32",
        "hidden" => "258",
        "grid_size" => "2",
        "spline_order" => "1",
        "depth" => "2",
        "variant" => "full",
        "freq_module" | "time_module" | "predictor_module" | "adjust" | "sharing" => "variant",
        "lr" => "0.001",
        "batch" => "32",
        "epochs" => "10",
        "patience" => "3",
        "eval_batch" => "64",
        "train_points" => "512",
        "test_points" => "256",
        "steps" => "2000",
        "kan_hidden" => "64",
        "variants" => "all",
        "jobs" => "1",
        "lookbacks" => "48,96,192,336",
        "embed_dims" => "32,64,128,256,512",
        other => unreachable!("no default for `{other}`"),
    };
    text.to_string()
}

/// Parses flat `key = value` text. Blank lines and `#` comments are skipped;
/// dashes in keys are read as underscores.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("config line {}: expected `key = value`", n + 1)))?;
        out.push((k.trim().replace('-', "_"), v.trim().to_string()));
    }
    Ok(out)
}

/// Fully resolved settings of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    command: Command,
    values: BTreeMap<String, String>,
    explicit: BTreeSet<String>,
}

impl RunConfig {
    /// Defaults, then `file` entries, then `flags`; later layers win.
    pub fn resolve(cmd: Command, file: &[(String, String)], flags: &[(String, String)]) -> Result<Self> {
        let specs = keys(cmd);
        let mut values: BTreeMap<String, String> =
            specs.iter().map(|k| (k.key.to_string(), default_value(cmd, k.key))).collect();
        let mut explicit = BTreeSet::new();
        for (origin, layer) in [("config file", file), ("flags", flags)] {
            for (k, v) in layer {
                let Some(slot) = values.get_mut(k) else {
                    return Err(Error::Config(format!(
                        "unknown key `{k}` in {origin} for `{}`",
                        cmd.name()
                    )));
                };
                *slot = v.clone();
                explicit.insert(k.clone());
            }
        }
        Ok(Self {
            command: cmd,
            values,
            explicit,
        })
    }

    pub fn command(&self) -> Command {
        self.command
    }

    /// Every key with its resolved value.
    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Whether the key came from the file or the flags.
    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.contains(key)
    }

    pub fn text(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("`{key}` is not a key of `{}`", self.command.name()))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.text(key);
        raw.parse()
            .map_err(|_| Error::Config(format!("invalid value for --{}: `{raw}`", key.replace('_', "-"))))
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        match self.text(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" | "" => Ok(false),
            other => Err(Error::Config(format!("invalid boolean for {key}: `{other}`"))),
        }
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let raw = self.text(key);
        if raw.trim().is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("invalid entry `{}` in --{}", p.trim(), key.replace('_', "-"))))
            })
            .collect()
    }

    pub fn path(&self, key: &str) -> Option<&Path> {
        let raw = self.text(key);
        (!raw.is_empty()).then(|| Path::new(raw))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn every_key_has_a_default() {
        for cmd in Command::ALL {
            let rc = RunConfig::resolve(cmd, &[], &[]).unwrap();
            assert_eq!(rc.resolved().len(), keys(cmd).iter().map(|k| k.key).collect::<BTreeSet<_>>().len());
        }
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let file = kv(&[("lr", "0.01"), ("batch", "8")]);
        let flags = kv(&[("lr", "0.002")]);
        let rc = RunConfig::resolve(Command::Train, &file, &flags).unwrap();
        assert_eq!(rc.get::<f64>("lr").unwrap(), 0.002);
        assert_eq!(rc.get::<usize>("batch").unwrap(), 8);
        assert_eq!(rc.get::<usize>("epochs").unwrap(), 10);
        assert!(rc.is_explicit("batch") && !rc.is_explicit("epochs"));
    }

    #[test]
    fn desk_scale_defaults_for_studies() {
        let a = RunConfig::resolve(Command::Ablate, &[], &[]).unwrap();
        assert_eq!(a.text("embed_dim"), "16");
        let t = RunConfig::resolve(Command::Train, &[], &[]).unwrap();
        assert_eq!(t.text("embed_dim"), "128");
        assert_eq!(t.text("hidden"), "258");
    }

    #[test]
    fn unknown_keys_and_bad_lines() {
        assert!(RunConfig::resolve(Command::Toy, &kv(&[("variant", "mlp")]), &[]).is_err());
        assert!(parse_config_text("lr 0.1").is_err());
        let parsed = parse_config_text("# c\n\nembed-dim = 8\n lr=0.1 \n").unwrap();
        assert_eq!(parsed, kv(&[("embed_dim", "8"), ("lr", "0.1")]));
    }

    #[test]
    fn typed_access() {
        let rc = RunConfig::resolve(Command::Sweep, &[], &kv(&[("lookbacks", "8, 16")])).unwrap();
        assert_eq!(rc.list::<usize>("lookbacks").unwrap(), [8, 16]);
        assert!(rc.get::<usize>("periods").is_err());
        assert!(!rc.flag("synthetic").unwrap());
    }
}
