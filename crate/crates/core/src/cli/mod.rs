//! The `tfkan` command line and the experiment drivers behind it.
//!
//! Every setting is a key with a built-in default. A `--config` file of
//! `key = value` lines overrides the defaults and flags override the file.
//! `eval` additionally starts from the data settings stored in the checkpoint.
//!
//! Exit status: 0 on success, 2 for usage errors (unknown flags, bad values,
//! missing dataset), 1 for everything else.

mod commands;
pub mod config;
pub mod studies;
pub mod table;

pub use commands::{forecast_last_window, load_dataset, model_config, synthetic_spec, train_config};
pub use config::{Command, RunConfig, OUT_DIR_ENV};

use std::ffi::OsString;
use std::fmt;

use clap::{Arg, ArgAction, ArgMatches};

use crate::error::Error;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Config(_)) { 2 } else { 1 };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

fn build_cli() -> clap::Command {
    let mut app = clap::Command::new("tfkan")
        .about("Time-frequency KAN forecaster: training, evaluation and studies")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for cmd in Command::ALL {
        let mut sub = clap::Command::new(cmd.name()).about(cmd.about()).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("flat `key = value` file; flags take precedence"),
        );
        for spec in config::keys(cmd) {
            // `Box::leak` gives clap the 'static ids it wants; the table is tiny.
            let long: &'static str = Box::leak(flag_name(spec.key).into_boxed_str());
            let arg = Arg::new(spec.key).long(long).help(spec.help);
            sub = sub.arg(match spec.kind {
                config::Kind::Value => arg.value_name("VALUE").action(ArgAction::Set),
                config::Kind::Switch => arg.action(ArgAction::SetTrue),
            });
        }
        app = app.subcommand(sub);
    }
    app
}

fn flag_layer(cmd: Command, m: &ArgMatches) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for spec in config::keys(cmd) {
        match spec.kind {
            config::Kind::Value => {
                if let Some(v) = m.get_one::<String>(spec.key) {
                    out.push((spec.key.to_string(), v.clone()));
                }
            }
            config::Kind::Switch => {
                if m.get_flag(spec.key) {
                    out.push((spec.key.to_string(), "true".to_string()));
                }
            }
        }
    }
    out
}

fn resolve(cmd: Command, m: &ArgMatches) -> Result<RunConfig, CliError> {
    let mut file = Vec::new();
    if let Some(path) = m.get_one::<String>("config") {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        file = config::parse_config_text(&text)?;
    }
    let flags = flag_layer(cmd, m);
    let rc = RunConfig::resolve(cmd, &file, &flags)?;
    if cmd != Command::Eval {
        return Ok(rc);
    }
    let Some(path) = rc.path("checkpoint") else {
        return Ok(rc);
    };
    let ck = crate::model::load_checkpoint(path)?;
    let mut layered = commands::checkpoint_layer(&ck.meta);
    layered.retain(|(k, _)| !rc.is_explicit(k));
    layered.extend(file);
    Ok(RunConfig::resolve(cmd, &layered, &flags)?)
}

/// Parses `args` (program name first), runs the command, returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match build_cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let cmd = Command::ALL.into_iter().find(|c| c.name() == name).expect("registered subcommand");
    match resolve(cmd, sub).and_then(|rc| commands::dispatch(&rc)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
