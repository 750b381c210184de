use std::path::Path;

use eislife_core::{RhlpConfig, SimplexConfig};
use serde::{Deserialize, Serialize};

use crate::failure::{CmdResult, Failure};

/// Settings shared by every command. The top-level seed drives both the EM
/// initial partitions and the simplex restarts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub rhlp: RhlpConfig,
    pub simplex: SimplexConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, seed: Option<u64>) -> CmdResult<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Failure::parse(format!("{}: {e}", p.display())))?;
                serde_json::from_str::<RunConfig>(&text)
                    .map_err(|e| Failure::parse(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.rhlp.seed = cfg.seed;
        cfg.simplex.seed = cfg.seed;
        cfg.rhlp
            .validate()
            .and_then(|_| cfg.simplex.validate())
            .map_err(|e| Failure::parse(format!("config: {e}")))?;
        Ok(cfg)
    }
}
