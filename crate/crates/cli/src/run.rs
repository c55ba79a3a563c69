//! Run manifests: an ordered list of subcommands executed with a shared
//! seed, recorded with content hashes of everything read and written.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use mtkit::synth::mix_seed;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::args::{Cli, Command, RunArgs};
use crate::commands::{dispatch, Ctx};
use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stages: Vec<StageRecord>,
}

/// One stage. Only `subcommand`, `args` and optionally `seed` are read
/// back; the rest is filled in when the stage runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub subcommand: String,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
    #[serde(default)]
    pub outputs: BTreeMap<String, String>,
    #[serde(default)]
    pub tally: Value,
}

/// SHA-256 of a file, or of the sorted names and contents of a directory.
pub fn hash_path(path: &Path) -> Result<String, CliError> {
    let mut h = Sha256::new();
    feed(&mut h, path, path)?;
    Ok(hex::encode(h.finalize()))
}

fn feed(h: &mut Sha256, root: &Path, path: &Path) -> Result<(), CliError> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| CliError::at(path, e))?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::at(path, e))?;
        entries.sort();
        for e in entries {
            let rel = e.strip_prefix(root).unwrap_or(&e);
            h.update(rel.to_string_lossy().as_bytes());
            h.update([0]);
            feed(h, root, &e)?;
        }
    } else {
        h.update(fs::read(path).map_err(|e| CliError::at(path, e))?);
    }
    Ok(())
}

fn display_key(base: &Path, p: &Path) -> String {
    p.strip_prefix(base).unwrap_or(p).to_string_lossy().replace('\\', "/")
}

fn hashes(base: &Path, paths: &[PathBuf]) -> Result<BTreeMap<String, String>, CliError> {
    paths
        .iter()
        .map(|p| Ok((display_key(base, p), hash_path(p)?)))
        .collect()
}

pub fn default_record_path(manifest: &Path) -> PathBuf {
    let name = manifest
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    manifest.with_file_name(format!("{name}.record.json"))
}

/// Executes every stage in order. Stages see paths relative to the
/// manifest's directory; a stage without `--seed` gets the manifest seed
/// mixed with its index.
pub fn execute(manifest: &RunManifest, base: &Path, quiet: bool) -> Result<RunManifest, CliError> {
    let mut record = RunManifest {
        seed: manifest.seed,
        stages: Vec::with_capacity(manifest.stages.len()),
    };
    for (index, stage) in manifest.stages.iter().enumerate() {
        let wrap = |e: CliError| CliError::Stage {
            index,
            name: stage.subcommand.clone(),
            source: Box::new(e),
        };
        let argv = std::iter::once("mtkit".to_string())
            .chain(std::iter::once(stage.subcommand.clone()))
            .chain(stage.args.iter().cloned());
        let cli = Cli::try_parse_from(argv).map_err(|e| wrap(CliError::usage(e.to_string().trim_end())))?;
        if matches!(cli.command, Command::Run(_)) {
            return Err(wrap(CliError::usage("run manifests cannot nest `run` stages")));
        }
        let seed = cli
            .seed
            .or(stage.seed)
            .unwrap_or_else(|| mix_seed(manifest.seed, index as u64));
        let ctx = Ctx {
            base: base.to_path_buf(),
            seed,
            quiet: quiet || cli.quiet,
        };
        let outcome = dispatch(&cli.command, &ctx).map_err(wrap)?;
        record.stages.push(StageRecord {
            subcommand: cli.command.name().to_string(),
            args: stage.args.clone(),
            seed: Some(seed),
            inputs: hashes(base, &outcome.inputs).map_err(wrap)?,
            outputs: hashes(base, &outcome.outputs).map_err(wrap)?,
            tally: outcome.tally,
        });
    }
    Ok(record)
}

pub fn run(a: &RunArgs, quiet: bool) -> Result<RunManifest, CliError> {
    let text = fs::read_to_string(&a.manifest).map_err(|e| CliError::at(&a.manifest, e))?;
    let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| CliError::at(&a.manifest, e))?;
    let base = a
        .manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let record = execute(&manifest, &base, quiet)?;
    let out = a.record.clone().unwrap_or_else(|| default_record_path(&a.manifest));
    let json = serde_json::to_string_pretty(&record)? + "\n";
    fs::write(&out, json).map_err(|e| CliError::at(&out, e))?;
    Ok(record)
}

fn count(v: &Value, path: &[&str]) -> u64 {
    path.iter()
        .try_fold(v, |v, k| v.get(k))
        .and_then(Value::as_u64)
        .unwrap_or(0)
}

/// Human-readable summary of a completed run.
pub fn report_run(record: &RunManifest) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "run: {} stages, seed {}", record.stages.len(), record.seed);
    let mut metrics = None;
    for (i, s) in record.stages.iter().enumerate() {
        let t = &s.tally;
        match s.subcommand.as_str() {
            "preprocess" => {
                let _ = writeln!(
                    out,
                    "[{i}] preprocess: {} in, {} kept; removed {} duplicates, {} wrong language, {} detector failures, {} bad length",
                    count(t, &["pipeline", "input"]),
                    count(t, &["pipeline", "output"]),
                    count(t, &["pipeline", "duplicates"]),
                    count(t, &["pipeline", "wrong_language"]),
                    count(t, &["pipeline", "detector_failures"]),
                    count(t, &["pipeline", "bad_length"]),
                );
            }
            "augment" => {
                let _ = writeln!(
                    out,
                    "[{i}] augment: {} of {} lines emitted against cap {}",
                    count(t, &["emitted"]),
                    count(t, &["input"]),
                    count(t, &["cap"]),
                );
            }
            "evaluate" => {
                let _ = writeln!(out, "[{i}] evaluate: {} directions", count(t, &["directions"]));
                metrics = t.get("categories").cloned();
            }
            other => {
                let _ = writeln!(out, "[{i}] {other}");
            }
        }
    }
    match metrics {
        Some(cats) => {
            let _ = writeln!(out, "{:<8}{:>10}{:>10}", "category", "BLEU", "ChrF++");
            for name in ["X-Eng", "Eng-X", "X-Fra", "Fra-X", "X-X", "All"] {
                let cell = |k: &str| {
                    cats.get(name)
                        .and_then(|c| c.get(k))
                        .and_then(Value::as_f64)
                        .map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
                };
                let _ = writeln!(out, "{name:<8}{:>10}{:>10}", cell("bleu"), cell("chrfpp"));
            }
        }
        None => out.push_str("metrics: not run\n"),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_path_sits_beside_the_manifest() {
        assert_eq!(
            default_record_path(Path::new("a/demo.json")),
            PathBuf::from("a/demo.record.json")
        );
    }

    #[test]
    fn directory_hash_depends_on_names() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), "x").unwrap();
        let one = hash_path(dir.path()).unwrap();
        fs::rename(dir.path().join("a.txt"), dir.path().join("b.txt")).unwrap();
        assert_ne!(one, hash_path(dir.path()).unwrap());
    }

    #[test]
    fn empty_run_reports_no_metrics() {
        let rec = execute(&RunManifest::default(), Path::new("."), true).unwrap();
        assert!(rec.stages.is_empty());
        assert!(report_run(&rec).contains("metrics: not run"));
    }

    #[test]
    fn nested_run_is_rejected() {
        let m = RunManifest {
            seed: 1,
            stages: vec![StageRecord {
                subcommand: "run".into(),
                args: vec!["--manifest".into(), "x.json".into()],
                ..Default::default()
            }],
        };
        let err = execute(&m, Path::new("."), true).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_USAGE);
    }
}
