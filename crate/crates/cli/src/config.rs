//! `key = value` configuration files, merged into the command line.
//!
//! Settings become `--key value` arguments placed directly after the
//! subcommand name and ahead of the user's own arguments, so an explicit
//! flag always overrides the file. A key may be scoped to one subcommand as
//! `select.b = 128`; unscoped keys apply to every subcommand that has an
//! option of that name and are ignored elsewhere.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::Command;
use hcbits::{Error, Result};

#[derive(Debug, PartialEq)]
struct Setting {
    scope: Option<String>,
    key: String,
    value: String,
}

fn parse(text: &str) -> Result<Vec<Setting>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("config line {}: expected `key = value`", i + 1)))?;
        let key = key.trim();
        let (scope, key) = match key.split_once('.') {
            Some((s, k)) => (Some(s.trim().to_string()), k.trim()),
            None => (None, key),
        };
        if key.is_empty() {
            return Err(Error::Format(format!("config line {}: empty key", i + 1)));
        }
        out.push(Setting {
            scope,
            key: key.replace('_', "-"),
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

/// Position of the subcommand name in `args` (index 0 is the program).
fn subcommand_position(cmd: &Command, args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if let Some(long) = a.strip_prefix("--") {
            let takes_value = !long.contains('=')
                && cmd
                    .get_arguments()
                    .find(|arg| arg.get_long() == Some(long))
                    .is_some_and(|arg| arg.get_action().takes_values());
            i += if takes_value { 2 } else { 1 };
            continue;
        }
        if cmd.find_subcommand(a.as_ref()).is_some() {
            return Some(i);
        }
        i += 1;
    }
    None
}

/// The value given to `--config` anywhere on the command line.
fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut iter = args.iter().skip(1);
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return iter.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// Returns `args` with the settings of the `--config` file, if any, spliced in.
pub fn merge(cmd: &Command, args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let Some(pos) = subcommand_position(cmd, &args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let sub_name = args[pos].to_string_lossy().into_owned();
    let sub = cmd.find_subcommand(&sub_name).expect("position found by name");

    let mut injected: Vec<OsString> = Vec::new();
    for s in parse(&text)? {
        if s.scope.as_deref().is_some_and(|scope| scope != sub_name) {
            continue;
        }
        let arg = sub
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(s.key.as_str()));
        let Some(arg) = arg else {
            if s.scope.is_some() {
                return Err(Error::Usage(format!("config key `{sub_name}.{}` is not an option of {sub_name}", s.key)));
            }
            continue;
        };
        if s.key == "config" {
            continue;
        }
        if arg.get_action().takes_values() {
            injected.push(format!("--{}", s.key).into());
            injected.push(s.value.into());
        } else {
            match s.value.as_str() {
                "true" | "yes" | "1" => injected.push(format!("--{}", s.key).into()),
                "false" | "no" | "0" => {}
                other => {
                    return Err(Error::Format(format!("config key `{}` expects true or false, got `{other}`", s.key)));
                }
            }
        }
    }
    let mut merged = args[..=pos].to_vec();
    merged.extend(injected);
    merged.extend_from_slice(&args[pos + 1..]);
    Ok(merged)
}
