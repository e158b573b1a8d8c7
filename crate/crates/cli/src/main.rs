mod args;
mod commands;
mod output;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use collapse_core::PhysicalConstants;

use args::{Cli, Command};
use commands::{CliError, Context};
use output::{unix_now, OutDir, RunManifest, MANIFEST_SCHEMA};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_EXCLUDED: u8 = 10;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return ExitCode::from(EXIT_OK);
            }
            usage_manifest(&argv[1..], &e.to_string());
            return ExitCode::from(EXIT_USAGE);
        }
    };
    ExitCode::from(execute(cli, &argv[1..]))
}

/// Output directory named on a command line that clap rejected.
fn out_dir_guess(argv: &[String]) -> PathBuf {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            if let Some(v) = it.next() {
                return v.into();
            }
        } else if let Some(v) = a.strip_prefix("--out=") {
            return v.into();
        }
    }
    std::env::var_os("COLLAPSE_BOUNDS_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| "collapse-out".into())
}

/// Best-effort manifest for a rejected command line.
fn usage_manifest(argv: &[String], message: &str) {
    const COMMANDS: &[&str] = &["bounds", "compare", "spectrum", "simulate", "verdict", "rerun"];
    let Ok(out) = OutDir::create(&out_dir_guess(argv)) else {
        return;
    };
    let now = unix_now();
    let command = argv
        .iter()
        .find(|a| COMMANDS.contains(&a.as_str()))
        .cloned()
        .unwrap_or_default();
    let manifest = RunManifest {
        schema: MANIFEST_SCHEMA,
        tool: env!("CARGO_BIN_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        argv: replayable_argv(argv),
        config: serde_json::Value::Null,
        constants: serde_json::Value::Null,
        started_unix: now,
        finished_unix: now,
        status: "usage_error".into(),
        exit_code: EXIT_USAGE as i32,
        error: Some(message.trim().to_string()),
        outputs: Vec::new(),
    };
    let _ = out.write_manifest(&manifest);
}

/// Flags whose value is a path, made absolute in the manifest.
const PATH_FLAGS: &[&str] = &["--experiments", "--floor-file"];

/// Drops `--out` and absolutises path flags so a manifest replays anywhere.
fn replayable_argv(argv: &[String]) -> Vec<String> {
    let abs = |p: &str| -> String {
        std::path::absolute(p)
            .map(|a| a.display().to_string())
            .unwrap_or_else(|_| p.to_string())
    };
    let mut out = Vec::with_capacity(argv.len());
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
            continue;
        }
        if a.starts_with("--out=") {
            continue;
        }
        if PATH_FLAGS.contains(&a.as_str()) {
            out.push(a.clone());
            if let Some(v) = it.next() {
                out.push(abs(v));
            }
            continue;
        }
        if let Some((flag, v)) = a.split_once('=') {
            if PATH_FLAGS.contains(&flag) {
                out.push(format!("{flag}={}", abs(v)));
                continue;
            }
        }
        out.push(a.clone());
    }
    out
}

fn load_manifest(path: &Path) -> Result<RunManifest, CliError> {
    let path = if path.is_dir() {
        path.join(output::MANIFEST_FILE)
    } else {
        path.to_path_buf()
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let m: RunManifest =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if m.schema != MANIFEST_SCHEMA {
        return Err(CliError::Usage(format!(
            "{}: manifest schema {} is not supported",
            path.display(),
            m.schema
        )));
    }
    if m.command == "rerun" {
        return Err(CliError::Usage("manifest records a rerun, not a computation".into()));
    }
    Ok(m)
}

fn execute(cli: Cli, argv: &[String]) -> u8 {
    if let Command::Rerun(r) = &cli.command {
        let m = match load_manifest(&r.manifest) {
            Ok(m) => m,
            Err(e) => {
                eprintln!("error: {e}");
                return e.exit_code();
            }
        };
        let mut replay = vec!["collapse-bounds".to_string()];
        replay.extend(m.argv.iter().cloned());
        replay.push("--out".into());
        replay.push(cli.global.out.display().to_string());
        return match Cli::try_parse_from(&replay) {
            Ok(c) => execute(c, &replay[1..]),
            Err(e) => {
                let _ = e.print();
                EXIT_USAGE
            }
        };
    }

    if let Some(n) = cli.global.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let out = match OutDir::create(&cli.global.out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    let started = unix_now();
    let mut ctx = Context {
        out,
        consts: PhysicalConstants::default(),
        config: serde_json::Map::new(),
    };
    let result = build_constants(&cli).and_then(|c| {
        ctx.consts = c;
        commands::dispatch(&cli, &mut ctx)
    });
    let (code, status, error) = match &result {
        Ok(code) => (*code, if *code == EXIT_EXCLUDED { "excluded" } else { "ok" }, None),
        Err(e) => {
            eprintln!("error: {e}");
            (e.exit_code(), "failed", Some(e.to_string()))
        }
    };
    let manifest = RunManifest {
        schema: MANIFEST_SCHEMA,
        tool: env!("CARGO_BIN_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cli.command.name().into(),
        argv: replayable_argv(argv),
        config: serde_json::Value::Object(ctx.config.clone()),
        constants: serde_json::to_value(ctx.consts).unwrap_or_default(),
        started_unix: started,
        finished_unix: unix_now(),
        status: status.into(),
        exit_code: code as i32,
        error,
        outputs: ctx.out.files.clone(),
    };
    if let Err(e) = ctx.out.write_manifest(&manifest) {
        eprintln!("error: cannot write manifest: {e}");
        if code == EXIT_OK {
            return EXIT_FAILURE;
        }
    }
    code
}

fn build_constants(cli: &Cli) -> Result<PhysicalConstants, CliError> {
    let mut c = PhysicalConstants::default();
    if let Some(m0) = cli.global.m0 {
        c = c.with_m0(m0)?;
    }
    if let Some(d) = cli.global.density {
        c = c.with_default_density(d)?;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argv_drops_out_and_absolutises_paths() {
        let a: Vec<String> = [
            "bounds",
            "ddp",
            "--out",
            "x",
            "--experiments",
            "e.toml",
            "--out=y",
            "--floor-file=f.csv",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let r = replayable_argv(&a);
        assert_eq!(&r[..3], &["bounds", "ddp", "--experiments"]);
        assert!(Path::new(&r[3]).is_absolute() && r[3].ends_with("e.toml"));
        assert!(r[4].starts_with("--floor-file=/"));
        assert_eq!(r.len(), 5);
    }
}
