//! `--config <file>`: plain-text `key = value` lines expanded into flags.

use std::fs;

use anyhow::{bail, Context, Result};

/// Parses config text into `--key value` pairs. Keys may use `_` or `-`;
/// a value of `true` becomes a bare flag.
pub fn parse_config(text: &str) -> Result<Vec<String>> {
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected `key = value`, got `{line}`", i + 1);
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key.starts_with('-') {
            bail!("line {}: bad key `{key}`", i + 1);
        }
        args.push(format!("--{key}"));
        if value != "true" {
            args.push(value.to_string());
        }
    }
    Ok(args)
}

/// Removes `--config <file>` from `argv` and splices the file's flags in
/// right after the subcommand, so flags given on the command line win.
pub fn expand_config(argv: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut it = argv.into_iter();
    while let Some(arg) = it.next() {
        if arg == "--config" {
            match it.next() {
                Some(p) => path = Some(p),
                None => bail!("--config needs a file path"),
            }
        } else if let Some(p) = arg.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let extra = parse_config(&text).with_context(|| format!("in config {path}"))?;
    // first positional after the program name is the subcommand
    let Some(sub) = rest.iter().skip(1).position(|a| !a.starts_with('-')).map(|i| i + 2) else {
        bail!("--config given without a subcommand");
    };
    rest.splice(sub..sub, extra);
    Ok(rest)
}
