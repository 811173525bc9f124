//! `key=value` config files. Each key names a long flag of the chosen
//! subcommand; the file's flags are placed ahead of the command line so
//! that flags given explicitly win.

use std::ffi::OsString;

use anyhow::{bail, Context, Result};

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key=value", i + 1);
        };
        let k = k.trim();
        if k.is_empty() || k.starts_with('-') || k == "config" {
            bail!("config line {}: bad key {k:?}", i + 1);
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Removes `--config <path>` from `args` and splices the file's flags in
/// right after the subcommand name.
pub fn expand(args: Vec<OsString>, subcommands: &[&str]) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        match a.to_str() {
            Some("--config") => path = Some(it.next().context("--config needs a file")?),
            Some(s) if s.starts_with("--config=") => path = Some(OsString::from(&s["--config=".len()..])),
            _ => rest.push(a),
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {}", path.to_string_lossy()))?;
    let pairs = parse(&text)?;
    let at = rest
        .iter()
        .position(|a| a.to_str().is_some_and(|s| subcommands.contains(&s)))
        .context("a subcommand is required")?;
    let flags = pairs
        .into_iter()
        .flat_map(|(k, v)| [OsString::from(format!("--{k}")), OsString::from(v)]);
    rest.splice(at + 1..at + 1, flags);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_pairs_and_comments() {
        let p = parse("# defaults\nk = 7\n\nmethod=exact # inline\n").unwrap();
        assert_eq!(p, [("k".into(), "7".into()), ("method".into(), "exact".into())]);
        assert!(parse("novalue\n").is_err());
        assert!(parse("--k=1\n").is_err());
    }

    #[test]
    fn without_config_args_pass_through() {
        let args = os(&["crswf", "solve", "--iterations", "5"]);
        assert_eq!(expand(args.clone(), &["solve"]).unwrap(), args);
    }

    #[test]
    fn file_flags_go_before_explicit_ones() {
        let dir = std::env::temp_dir().join(format!("crswf-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let file = dir.join("run.cfg");
        std::fs::write(&file, "iterations=10\nseed=3\n").unwrap();
        let args = os(&["crswf", "--config", file.to_str().unwrap(), "solve", "--iterations", "5"]);
        let got = expand(args, &["solve"]).unwrap();
        assert_eq!(got, os(&["crswf", "solve", "--iterations", "10", "--seed", "3", "--iterations", "5"]));
        std::fs::remove_dir_all(dir).unwrap();
    }
}
