//! Flat `key = value` configuration files merged under command-line flags.
//!
//! Keys are long flag names (`burn-in` or `burn_in`). Values from the file
//! are spliced into the argument list directly after the subcommand, so any
//! flag given on the command line wins.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, Command};

pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        entries.push((key, value.trim().to_string()));
    }
    Ok(entries)
}

pub fn load(path: &Path) -> Result<Vec<(String, String)>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("reading config {}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Finds the value of `--config` anywhere in the arguments.
pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn takes_value(cmd: &Command, long: &str) -> bool {
    cmd.get_arguments()
        .find(|a| a.get_long() == Some(long))
        .map(|a| a.get_action().takes_values())
        .unwrap_or(false)
}

fn all_longs(cmd: &Command, out: &mut Vec<String>) {
    out.extend(cmd.get_arguments().filter_map(|a| a.get_long().map(String::from)));
    for sub in cmd.get_subcommands() {
        all_longs(sub, out);
    }
}

/// Inserts config entries after the deepest subcommand named in `args`.
/// Entries the subcommand does not accept are skipped; keys no command
/// accepts are an error.
pub fn splice(
    root: &Command,
    args: Vec<OsString>,
    entries: &[(String, String)],
) -> Result<Vec<OsString>, String> {
    let mut known = Vec::new();
    all_longs(root, &mut known);
    if let Some((k, _)) = entries.iter().find(|(k, _)| !known.contains(k)) {
        return Err(format!("unknown configuration key `{k}`"));
    }

    let mut cmd = root;
    let mut insert_at = None;
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if let Some(long) = s.strip_prefix("--") {
            if !long.contains('=') && (long == "config" || takes_value(cmd, long)) {
                i += 1;
            }
        } else if !s.starts_with('-') {
            match cmd.find_subcommand(s.as_ref()) {
                Some(sub) => {
                    cmd = sub;
                    insert_at = Some(i + 1);
                }
                None => break,
            }
        }
        i += 1;
    }
    let Some(at) = insert_at else {
        return Ok(args);
    };

    let mut injected: Vec<OsString> = Vec::new();
    for (key, value) in entries {
        let Some(arg) = cmd.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            continue;
        };
        if key == "config" {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" | "1" | "yes" => injected.push(format!("--{key}").into()),
                "false" | "0" | "no" => {}
                other => return Err(format!("`{key}` expects true or false, got `{other}`")),
            },
            _ => injected.push(format!("--{key}={value}").into()),
        }
    }
    let mut out = args;
    out.splice(at..at, injected);
    Ok(out)
}

/// Lets a later occurrence of a flag replace an earlier one, at every level.
pub fn override_self(cmd: Command) -> Command {
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    let mut cmd = cmd.args_override_self(true);
    for name in names {
        cmd = cmd.mut_subcommand(name, override_self);
    }
    cmd
}
