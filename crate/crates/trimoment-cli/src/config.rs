//! Flat `key=value` configuration files and the `--dump-config` echo.
//!
//! A config file supplies defaults for the flags of the subcommand it is
//! passed to: each `key=value` line stands for `--key value`, a line
//! `key=true` stands for the bare switch `--key`, and blank lines or lines
//! starting with `#` are skipped.  Keys already given explicitly on the
//! command line are left alone, so explicit flags always win.  Unknown keys
//! surface as unknown flags and are rejected by the argument parser.

use std::collections::HashSet;
use std::fs;

/// Rewrites `argv`, replacing `--config FILE` with the flags the file stands
/// for.  Errors come back as plain messages; the caller prints them and exits
/// with the validation code.
pub fn expand(argv: Vec<String>) -> Result<Vec<String>, String> {
    let mut out: Vec<String> = Vec::with_capacity(argv.len());
    let mut path: Option<String> = None;
    let mut it = argv.into_iter();
    while let Some(tok) = it.next() {
        if tok == "--config" {
            let p = it
                .next()
                .ok_or_else(|| "--config requires a file argument".to_string())?;
            if path.replace(p).is_some() {
                return Err("--config may be given at most once".into());
            }
        } else if let Some(p) = tok.strip_prefix("--config=") {
            if path.replace(p.to_string()).is_some() {
                return Err("--config may be given at most once".into());
            }
        } else {
            out.push(tok);
        }
    }
    let Some(path) = path else { return Ok(out) };
    let text =
        fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;

    // Flags the user already set explicitly; their config entries are skipped.
    let given: HashSet<String> = out
        .iter()
        .filter_map(|t| {
            t.strip_prefix("--")
                .map(|rest| rest.split('=').next().unwrap_or(rest).to_string())
        })
        .collect();

    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!(
                "{path}:{}: expected key=value, got '{line}'",
                idx + 1
            ));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(format!("{path}:{}: empty key", idx + 1));
        }
        if key == "config" {
            return Err(format!(
                "{path}:{}: config files cannot nest 'config'",
                idx + 1
            ));
        }
        if given.contains(key) {
            continue;
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            _ => {
                out.push(format!("--{key}"));
                out.push(value.to_string());
            }
        }
    }
    Ok(out)
}

/// Renders a flat document as `key=value` lines, one per entry, in order.
pub fn render(doc: &[(String, String)]) -> String {
    let mut s = String::new();
    for (k, v) in doc {
        s.push_str(k);
        s.push('=');
        s.push_str(v);
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn args(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    fn temp_config(body: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(format!(
            "trimoment-config-test-{}-{:p}.cfg",
            std::process::id(),
            &body
        ));
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    #[test]
    fn no_config_is_identity() {
        let a = args(&["trimoment", "moments", "limit", "--alpha", "0.5"]);
        assert_eq!(expand(a.clone()).unwrap(), a);
    }

    #[test]
    fn config_supplies_missing_flags() {
        let p = temp_config("alpha=0.5\nk-max=8\n\n# comment\nm=ones\n");
        let a = args(&[
            "trimoment",
            "moments",
            "limit",
            "--config",
            p.to_str().unwrap(),
        ]);
        let got = expand(a).unwrap();
        assert_eq!(
            got,
            args(&[
                "trimoment", "moments", "limit", "--alpha", "0.5", "--k-max", "8", "--m", "ones",
            ])
        );
        fs::remove_file(p).unwrap();
    }

    #[test]
    fn explicit_flags_beat_config_entries() {
        let p = temp_config("alpha=0.5\nk-max=8\n");
        let a = args(&[
            "trimoment",
            "moments",
            "limit",
            "--alpha",
            "1",
            "--config",
            p.to_str().unwrap(),
        ]);
        let got = expand(a).unwrap();
        assert_eq!(
            got,
            args(&["trimoment", "moments", "limit", "--alpha", "1", "--k-max", "8"])
        );
        fs::remove_file(p).unwrap();
    }

    #[test]
    fn boolean_keys_become_switches() {
        let p = temp_config("dump-config=true\nother=false\n");
        let a = args(&["trimoment", "verify", "--config", p.to_str().unwrap()]);
        let got = expand(a).unwrap();
        assert_eq!(got, args(&["trimoment", "verify", "--dump-config"]));
        fs::remove_file(p).unwrap();
    }

    #[test]
    fn malformed_lines_and_nesting_are_rejected() {
        let p = temp_config("just a line\n");
        let a = args(&["trimoment", "verify", "--config", p.to_str().unwrap()]);
        assert!(expand(a).unwrap_err().contains("expected key=value"));
        fs::remove_file(&p).unwrap();

        let p = temp_config("config=other.cfg\n");
        let a = args(&["trimoment", "verify", "--config", p.to_str().unwrap()]);
        assert!(expand(a).unwrap_err().contains("cannot nest"));
        fs::remove_file(&p).unwrap();

        let a = args(&["trimoment", "verify", "--config"]);
        assert!(expand(a).unwrap_err().contains("requires a file"));
    }

    #[test]
    fn render_is_line_per_pair() {
        let doc = vec![
            ("alpha".to_string(), "0.5".to_string()),
            ("k-max".to_string(), "8".to_string()),
        ];
        assert_eq!(render(&doc), "alpha=0.5\nk-max=8\n");
    }
}
