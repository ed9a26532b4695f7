//! Run manifests: enough metadata to rerun a command and byte-compare its
//! outputs.
//!
//! The deterministic part (tool version, command, input fingerprint,
//! effective config) is embedded as `# key = value` lines at the top of
//! every table file. The side file `manifest.toml` additionally records the
//! wall-clock timestamp and worker count, which vary between reruns without
//! affecting results.

use std::path::Path;

use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Deterministic metadata lines shared by the embedded block and the side
/// manifest.
pub fn deterministic_block(
    command: &str,
    input: Option<(&Path, &str)>,
    config_echo: &[(&'static str, String)],
) -> Vec<(String, String)> {
    let mut out = vec![
        ("tool".to_string(), "tnet".to_string()),
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("command".to_string(), command.to_string()),
    ];
    if let Some((path, hash)) = input {
        out.push(("input".to_string(), path.display().to_string()));
        out.push(("input_sha256".to_string(), hash.to_string()));
    }
    for (k, v) in config_echo {
        out.push((k.to_string(), v.clone()));
    }
    out
}

fn toml_value(v: &str) -> String {
    // bare only for plain decimal numbers; everything else (hex digests,
    // dates, version strings, booleans-as-text) is quoted
    let plain_number = !v.is_empty()
        && v.chars()
            .all(|c| c.is_ascii_digit() || c == '.' || c == '-');
    if plain_number && v.parse::<f64>().is_ok() {
        v.to_string()
    } else {
        format!("\"{v}\"")
    }
}

/// Renders the side manifest (TOML) with the volatile fields appended.
pub fn render_manifest(
    block: &[(String, String)],
    workers: Option<usize>,
    extra: &[(String, String)],
) -> String {
    let mut out = String::new();
    for (k, v) in block.iter().chain(extra) {
        out.push_str(&format!("{k} = {}\n", toml_value(v)));
    }
    out.push_str(&format!(
        "workers = \"{}\"\n",
        workers.map_or_else(|| "auto".to_string(), |w| w.to_string())
    ));
    out.push_str(&format!(
        "created_utc = \"{}\"\n",
        chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ")
    ));
    out
}
