//! Optional TOML config: one table per subcommand whose keys mirror the long
//! flags. Values are spliced in after the subcommand name, and any flag given
//! on the command line replaces its config counterpart.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Global options that take a value and may precede the subcommand.
const GLOBAL_VALUED: &[&str] = &["--jobs", "--config"];

/// Index of the subcommand token in `args` (which includes argv[0]).
fn subcommand_index(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if GLOBAL_VALUED.contains(&a.as_ref()) {
            i += 2;
            continue;
        }
        if !a.starts_with('-') {
            return Some(i);
        }
        i += 1;
    }
    None
}

/// Value of `--config` among the arguments before the subcommand.
pub fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let end = subcommand_index(args).unwrap_or(args.len());
    let mut i = 1;
    while i < end {
        let a = args[i].to_string_lossy();
        if a == "--config" {
            return args.get(i + 1).map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
        i += 1;
    }
    None
}

fn flag_given(user: &[OsString], flag: &str) -> bool {
    let eq = format!("{flag}=");
    user.iter().any(|a| {
        let a = a.to_string_lossy();
        a == flag || a.starts_with(&eq)
    })
}

fn value_args(flag: &str, value: &toml::Value) -> Result<Vec<OsString>, CliError> {
    let scalar = |v: &toml::Value| -> Result<String, CliError> {
        match v {
            toml::Value::String(s) => Ok(s.clone()),
            toml::Value::Integer(i) => Ok(i.to_string()),
            toml::Value::Float(f) => Ok(f.to_string()),
            other => Err(CliError::Usage(format!("config key {flag}: unsupported value {other}"))),
        }
    };
    Ok(match value {
        toml::Value::Boolean(true) => vec![flag.into()],
        toml::Value::Boolean(false) => vec![],
        toml::Value::Array(items) => {
            let parts = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?;
            vec![flag.into(), parts.join(",").into()]
        }
        v => vec![flag.into(), scalar(v)?.into()],
    })
}

/// `args` with the config section for its subcommand spliced in.
pub fn apply(args: Vec<OsString>, config: &Path) -> Result<Vec<OsString>, CliError> {
    let text = std::fs::read_to_string(config).map_err(|e| CliError::at(config.display(), e.to_string()))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Usage(format!("{}: {}", config.display(), e.message())))?;
    let Some(at) = subcommand_index(&args) else {
        return Ok(args);
    };
    let name = args[at].to_string_lossy().into_owned();
    let Some(section) = table.get(&name) else {
        return Ok(args);
    };
    let section = section
        .as_table()
        .ok_or_else(|| CliError::Usage(format!("{}: [{name}] must be a table", config.display())))?;
    let user = &args[at + 1..];
    let mut injected = Vec::new();
    for (key, value) in section {
        let flag = format!("--{key}");
        if !flag_given(user, &flag) {
            injected.extend(value_args(&flag, value)?);
        }
    }
    let mut out = args[..=at].to_vec();
    out.extend(injected);
    out.extend_from_slice(user);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(xs: &[&str]) -> Vec<OsString> {
        xs.iter().map(OsString::from).collect()
    }

    #[test]
    fn finds_subcommand_after_globals() {
        assert_eq!(subcommand_index(&os(&["capforge", "--jobs", "4", "clean"])), Some(3));
        assert_eq!(subcommand_index(&os(&["capforge", "--config", "c.toml", "split", "--seed", "1"])), Some(3));
        assert_eq!(subcommand_index(&os(&["capforge", "--version"])), None);
    }

    #[test]
    fn flags_win_over_config() {
        let dir = std::env::temp_dir().join(format!("capforge-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.toml");
        std::fs::write(&path, "[split]\nseed = 3\nfractions = [0.5, 0.25, 0.25]\n[clean]\nx = 1\n").unwrap();
        let args = apply(os(&["capforge", "split", "--seed", "9"]), &path).unwrap();
        assert_eq!(args, os(&["capforge", "split", "--fractions", "0.5,0.25,0.25", "--seed", "9"]));
        std::fs::remove_dir_all(dir).unwrap();
    }
}
