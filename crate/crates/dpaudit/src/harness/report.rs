//! Result persistence: one JSON document per audit, structurally identical
//! after a write/read round trip.

use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::harness::audit::AuditResult;
use crate::harness::config::RunConfig;

pub fn result_to_json(result: &AuditResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(result)?)
}

pub fn result_from_json(text: &str) -> Result<AuditResult> {
    Ok(serde_json::from_str(text)?)
}

/// Writes `<kind>_<seed>.json` under `dir` (created if needed).
pub fn save_result(result: &AuditResult, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let kind = match &result.config {
        RunConfig::Audit(cfg) => format!("audit_{:?}", cfg.attack).to_lowercase(),
        RunConfig::MembershipInference(_) => "mi".to_string(),
        RunConfig::RidgeStudy(_) => "ridge".to_string(),
    };
    let path = dir.join(format!("{kind}_{}.json", result.seed));
    std::fs::write(&path, result_to_json(result)?)?;
    Ok(path)
}
