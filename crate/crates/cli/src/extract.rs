//! `extract`: one feature row per manifest entry.

use std::path::Path;

use eislife_core::{extract_features, feature_names};
use rayon::prelude::*;

use crate::context::Ctx;
use crate::failure::{CmdResult, Failure, NO_ROWS};
use crate::io::{self, num, Table};

/// Flag for a spectrum file that is missing or does not parse.
pub const UNREADABLE: &str = "UnreadableSpectrum";

pub fn extract(ctx: &Ctx, manifest: &Path) -> CmdResult {
    let entries = io::read_manifest(manifest)?;
    let results: Vec<Result<[f64; 18], (String, String)>> = entries
        .par_iter()
        .map(|e| {
            let raw = io::read_spectrum(&e.path, e.age_hours, &e.cell_id)
                .map_err(|msg| (UNREADABLE.to_string(), msg))?;
            extract_features(&raw, &ctx.cfg.rhlp, &ctx.cfg.simplex)
                .map(|fv| fv.values())
                .map_err(|err| (err.kind().to_string(), format!("{}: {err}", e.file)))
        })
        .collect();

    let mut header: Vec<String> = feature_names().iter().map(|s| s.to_string()).collect();
    header.extend(io::RESERVED_COLUMNS.iter().map(|s| s.to_string()));
    let mut table = Table::new(ctx.provenance(), &header);
    let mut ok = 0;
    for (e, r) in entries.iter().zip(&results) {
        let mut row: Vec<String> = match r {
            Ok(values) => {
                ok += 1;
                values.iter().map(|&v| num(v)).collect()
            }
            Err(_) => vec![String::new(); 18],
        };
        row.push(num(e.age_hours));
        row.push(e.cell_id.clone());
        row.push(r.as_ref().err().map(|(kind, _)| kind.clone()).unwrap_or_default());
        table.row(row);
        if let Err((_, msg)) = r {
            eprintln!("flagged: {msg}");
        }
    }
    ctx.write_table("features.csv", table)?;
    if ok == 0 {
        return Err(Failure::new(NO_ROWS, "no spectrum produced a feature row"));
    }
    Ok(())
}
