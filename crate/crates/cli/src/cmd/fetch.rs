use std::io::Read;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::write_json;
use crate::errors::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// Archive or file URL (http/https)
    #[arg(long)]
    pub url: String,
    /// Destination directory; raw files land in <dest>/raw
    #[arg(long, default_value = "data/raw")]
    pub dest: PathBuf,
    /// Expected SHA-256 of the downloaded file (hex)
    #[arg(long)]
    pub sha256: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    url: String,
    file: String,
    sha256: String,
    bytes: u64,
}

fn filename_from_url(url: &str) -> String {
    url.rsplit('/')
        .next()
        .filter(|s| !s.is_empty())
        .unwrap_or("dataset.bin")
        .split(['?', '#'])
        .next()
        .unwrap_or("dataset.bin")
        .to_string()
}

fn sha256_file(path: &Path) -> CliResult<(String, u64)> {
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    let mut bytes = 0u64;
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        bytes += n as u64;
        hasher.update(&buf[..n]);
    }
    Ok((hex_string(&hasher.finalize()), bytes))
}

fn hex_string(digest: &[u8]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn run(args: FetchArgs) -> CliResult<()> {
    let raw_dir = args.dest.join("raw");
    std::fs::create_dir_all(&raw_dir)?;
    let file_name = filename_from_url(&args.url);
    let target = raw_dir.join(&file_name);
    let manifest_path = args.dest.join("manifest.json");

    // Cached fetch: same URL, file present, recorded hash still valid.
    if manifest_path.exists() && target.exists() {
        let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(&manifest_path)?)?;
        if manifest.url == args.url {
            let (hash, _) = sha256_file(&target)?;
            if hash == manifest.sha256 {
                if let Some(expected) = &args.sha256 {
                    if !expected.eq_ignore_ascii_case(&hash) {
                        return Err(CliError::Numerical(format!(
                            "cached file hash mismatch: expected {expected}, found {hash}"
                        )));
                    }
                }
                println!("cached: {} (sha256 {hash})", target.display());
                return Ok(());
            }
        }
    }

    let response = ureq::get(&args.url)
        .call()
        .map_err(|e| CliError::Network(e.to_string()))?;
    let mut reader = response.into_reader();
    let tmp = target.with_extension("part");
    {
        let mut out = std::fs::File::create(&tmp)?;
        std::io::copy(&mut reader, &mut out).map_err(|e| CliError::Network(e.to_string()))?;
    }
    let (hash, bytes) = sha256_file(&tmp)?;
    if let Some(expected) = &args.sha256 {
        if !expected.eq_ignore_ascii_case(&hash) {
            std::fs::remove_file(&tmp)?;
            return Err(CliError::Numerical(format!(
                "download hash mismatch: expected {expected}, got {hash}"
            )));
        }
    }
    std::fs::rename(&tmp, &target)?;
    write_json(
        &manifest_path,
        &Manifest { url: args.url.clone(), file: file_name, sha256: hash.clone(), bytes },
    )?;
    println!("fetched {} ({bytes} bytes, sha256 {hash})", target.display());
    Ok(())
}
