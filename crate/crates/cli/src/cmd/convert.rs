use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::config::write_run_json;
use crate::errors::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Directory with the raw (as-fetched) CSV files
    #[arg(long)]
    pub raw: PathBuf,
    /// Column-mapping file (JSON); see `mapping.example.json` in the README
    #[arg(long)]
    pub mapping: PathBuf,
    /// Output directory for the canonical four-CSV dataset
    #[arg(long, default_value = "data/converted")]
    pub out: PathBuf,
}

/// One raw file: its name and the raw column carrying each canonical column.
#[derive(Debug, Deserialize)]
struct FileMapping {
    file: String,
    columns: BTreeMap<String, String>,
}

/// The user-editable adaptation point between a raw dataset schema and the
/// canonical layout. `values` optionally rewrites cell values per canonical
/// column (e.g. {"visibility": {"0": "public", "1": "private"}}).
#[derive(Debug, Deserialize)]
struct Mapping {
    topology: FileMapping,
    endowments: FileMapping,
    messages: FileMapping,
    answers: FileMapping,
    #[serde(default)]
    values: BTreeMap<String, BTreeMap<String, String>>,
}

fn convert_file(
    raw_dir: &Path,
    out_dir: &Path,
    spec: &FileMapping,
    canonical_name: &str,
    canonical_columns: &[&str],
    values: &BTreeMap<String, BTreeMap<String, String>>,
) -> CliResult<()> {
    let raw_path = raw_dir.join(&spec.file);
    let mut reader = csv::Reader::from_path(&raw_path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", raw_path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Input(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let mut source_idx = Vec::with_capacity(canonical_columns.len());
    for col in canonical_columns {
        let source = spec.columns.get(*col).ok_or_else(|| {
            CliError::Input(format!(
                "mapping for {canonical_name} is missing column `{col}`"
            ))
        })?;
        let idx = headers.iter().position(|h| h == source).ok_or_else(|| {
            CliError::Input(format!(
                "{}: source column `{source}` (for `{col}`) not found; headers are {:?}",
                spec.file, headers
            ))
        })?;
        source_idx.push((*col, idx));
    }

    let mut writer = csv::Writer::from_path(out_dir.join(canonical_name))
        .map_err(|e| CliError::Input(e.to_string()))?;
    writer
        .write_record(canonical_columns)
        .map_err(|e| CliError::Input(e.to_string()))?;
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CliError::Input(format!("{}: {e}", spec.file)))?;
        let mut out_row = Vec::with_capacity(source_idx.len());
        for (col, idx) in &source_idx {
            let cell = row.get(*idx).ok_or_else(|| {
                CliError::Input(format!("{}: row {line}: too few fields", spec.file))
            })?;
            let cell = match values.get(*col).and_then(|m| m.get(cell.trim())) {
                Some(mapped) => mapped.clone(),
                None => cell.trim().to_string(),
            };
            out_row.push(cell);
        }
        writer.write_record(&out_row).map_err(|e| CliError::Input(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn run(args: ConvertArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.mapping).map_err(|e| {
        CliError::Input(format!("cannot read mapping {}: {e}", args.mapping.display()))
    })?;
    let mapping: Mapping = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("bad mapping {}: {e}", args.mapping.display())))?;
    std::fs::create_dir_all(&args.out)?;

    convert_file(
        &args.raw,
        &args.out,
        &mapping.topology,
        tomnet_core::io::TOPOLOGY_FILE,
        &["team_id", "node_a", "node_b"],
        &mapping.values,
    )?;
    convert_file(
        &args.raw,
        &args.out,
        &mapping.endowments,
        tomnet_core::io::ENDOWMENTS_FILE,
        &["team_id", "player_id", "visibility", "codes"],
        &mapping.values,
    )?;
    convert_file(
        &args.raw,
        &args.out,
        &mapping.messages,
        tomnet_core::io::MESSAGES_FILE,
        &["team_id", "time", "sender_id", "codes"],
        &mapping.values,
    )?;
    convert_file(
        &args.raw,
        &args.out,
        &mapping.answers,
        tomnet_core::io::ANSWERS_FILE,
        &["team_id", "player_id", "answer", "correct_answer"],
        &mapping.values,
    )?;

    // The converted dataset must load cleanly before we call it done.
    let recs = tomnet_core::io::load_dataset(&args.out)?;
    write_run_json(
        &args.out,
        "convert",
        serde_json::json!({
            "raw": args.raw,
            "mapping": args.mapping,
            "out": args.out,
        }),
    )?;
    println!("converted {} teams into {}", recs.len(), args.out.display());
    Ok(())
}
