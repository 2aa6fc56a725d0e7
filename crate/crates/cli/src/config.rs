//! Folds a TOML configuration file into the argument vector. Keys are flag
//! names (`grid-step` or `grid_step`); a table named after a subcommand
//! overrides top-level keys for that subcommand. Flags present on the command
//! line win over file values.

use std::fs;
use std::path::Path;

use clap::{ArgAction, CommandFactory};

use crate::args::Cli;
use crate::error::{usage, CliError};

const VALUED_GLOBALS: [&str; 3] = ["--config", "--threads", "--seed"];

fn config_path(args: &[String]) -> Option<&str> {
    args.iter().enumerate().skip(1).find_map(|(i, a)| {
        if a == "--config" {
            args.get(i + 1).map(String::as_str)
        } else {
            a.strip_prefix("--config=")
        }
    })
}

fn subcommand_position(args: &[String], names: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if VALUED_GLOBALS.contains(&a.as_str()) {
            i += 2;
            continue;
        }
        if names.contains(a) {
            return Some(i);
        }
        i += 1;
    }
    None
}

fn given_on_command_line(args: &[String], long: &str) -> bool {
    let flag = format!("--{long}");
    let prefix = format!("{flag}=");
    args.iter().any(|a| *a == flag || a.starts_with(&prefix))
}

fn scalar_text(key: &str, v: &toml::Value) -> Result<String, CliError> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        _ => Err(usage(format!("configuration key {key:?} has an unsupported value type"))),
    }
}

/// Returns `args` with configuration values spliced in after the subcommand.
pub fn merge(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(Path::new(path))
        .map_err(|e| usage(format!("cannot read configuration {path}: {e}")))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| usage(format!("configuration {path}: {e}")))?;

    let mut cmd = Cli::command();
    cmd.build();
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_owned()).collect();
    let Some(pos) = subcommand_position(&args, &names) else {
        return Ok(args);
    };
    let sub = cmd.find_subcommand(&args[pos]).expect("known subcommand");

    let mut entries: Vec<(String, toml::Value)> = Vec::new();
    let mut push = |key: &str, value: &toml::Value| {
        let key = key.replace('_', "-");
        entries.retain(|(k, _)| *k != key);
        entries.push((key, value.clone()));
    };
    for (k, v) in &table {
        if !v.is_table() {
            push(k, v);
        }
    }
    for (k, v) in &table {
        match v {
            toml::Value::Table(t) if names.contains(k) => {
                if *k == args[pos] {
                    for (k2, v2) in t {
                        push(k2, v2);
                    }
                }
            }
            toml::Value::Table(_) => return Err(usage(format!("configuration {path}: unknown section [{k}]"))),
            _ => {}
        }
    }

    let mut extra = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            return Err(usage(format!("configuration {path}: \"config\" cannot be nested")));
        }
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            let known_elsewhere = cmd
                .get_subcommands()
                .any(|s| s.get_arguments().any(|a| a.get_long() == Some(key.as_str())));
            if known_elsewhere {
                continue;
            }
            return Err(usage(format!("configuration {path}: unknown key {key:?}")));
        };
        if given_on_command_line(&args, &key) {
            continue;
        }
        let flag = format!("--{key}");
        match (arg.get_action(), &value) {
            (ArgAction::SetTrue, toml::Value::Boolean(true)) => extra.push(flag),
            (ArgAction::SetTrue, toml::Value::Boolean(false)) => {}
            (ArgAction::SetTrue, _) => return Err(usage(format!("configuration key {key:?} must be a boolean"))),
            (_, toml::Value::Array(items)) => {
                for item in items {
                    extra.push(format!("{flag}={}", scalar_text(&key, item)?));
                }
            }
            (_, v) => extra.push(format!("{flag}={}", scalar_text(&key, v)?)),
        }
    }
    let mut merged = args;
    let tail = merged.split_off(pos + 1);
    merged.extend(extra);
    merged.extend(tail);
    Ok(merged)
}
