use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::canonical;
use crate::config::RunConfig;
use crate::failure::CmdResult;
use crate::io::{self, Table};

/// Resolved configuration and output directory of one command.
pub struct Ctx {
    pub cfg: RunConfig,
    pub out: PathBuf,
}

impl Ctx {
    pub fn provenance(&self) -> Option<String> {
        Some(format!("run_config {}", canonical::to_compact(&self.cfg)))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CmdResult {
        io::write_atomic(&self.out.join(name), canonical::to_string(value).as_bytes())
    }

    pub fn write_table(&self, name: &str, table: Table) -> CmdResult {
        io::write_atomic(&self.out.join(name), &table.into_bytes())
    }
}

pub fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}
