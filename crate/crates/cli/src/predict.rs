//! `predict`: apply the final model stored in a selection report.

use std::io::Write;
use std::path::Path;

use eislife_core::{extract_features, feature_names};

use crate::context::Ctx;
use crate::failure::{from_fit, CmdResult, Failure};
use crate::io::{self, num, Table, SPECTRUM_HEADER};
use crate::select::FinalModel;

pub fn load_model(path: &Path) -> CmdResult<FinalModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
    let doc: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
    let model = doc
        .get("final_model")
        .ok_or_else(|| Failure::schema(format!("{}: no final_model", path.display())))?;
    serde_json::from_value::<FinalModel>(model.clone())
        .ok()
        .filter(|m| m.to_model().is_some())
        .ok_or_else(|| Failure::schema(format!("{}: malformed final_model", path.display())))
}

struct Input {
    cell_id: String,
    age_hours: Option<f64>,
    /// Values of the model's features, in model order.
    values: Option<Vec<f64>>,
    flags: String,
}

fn is_spectrum(path: &Path) -> CmdResult<bool> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
    let header = rdr.headers().map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
    Ok(header.iter().eq(SPECTRUM_HEADER.iter().copied()))
}

fn from_spectrum(ctx: &Ctx, path: &Path, model: &FinalModel) -> CmdResult<Vec<Input>> {
    let cell = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let raw = io::read_spectrum(path, 0.0, &cell).map_err(Failure::parse)?;
    let fv = extract_features(&raw, &ctx.cfg.rhlp, &ctx.cfg.simplex).map_err(|e| from_fit("feature extraction", e))?;
    let names = feature_names();
    let all = fv.values();
    let values = model
        .features
        .iter()
        .map(|f| {
            names
                .iter()
                .position(|n| n == f)
                .map(|j| all[j])
                .ok_or_else(|| Failure::schema(format!("model feature {f:?} is not a spectrum feature")))
        })
        .collect::<CmdResult<Vec<f64>>>()?;
    Ok(vec![Input {
        cell_id: cell,
        age_hours: None,
        values: Some(values),
        flags: String::new(),
    }])
}

fn from_table(path: &Path, model: &FinalModel) -> CmdResult<Vec<Input>> {
    let table = io::read_features(path)?;
    let cols = model
        .features
        .iter()
        .map(|f| {
            table
                .names
                .iter()
                .position(|n| n == f)
                .ok_or_else(|| Failure::schema(format!("{}: missing feature column {f:?}", path.display())))
        })
        .collect::<CmdResult<Vec<usize>>>()?;
    Ok(table
        .rows
        .into_iter()
        .map(|r| Input {
            values: cols.iter().map(|&c| r.values[c]).collect(),
            cell_id: r.cell_id,
            age_hours: Some(r.age_hours),
            flags: r.flags,
        })
        .collect())
}

pub fn predict(ctx: &Ctx, selection: &Path, input: &Path, write_file: bool) -> CmdResult {
    let fm = load_model(selection)?;
    let model = fm.to_model().expect("checked on load");
    let inputs = if is_spectrum(input)? {
        from_spectrum(ctx, input, &fm)?
    } else {
        from_table(input, &fm)?
    };

    let header = ["cell_id", "age_hours", "estimated_hours", "flags"];
    let mut plain = Table::new(None, header);
    let mut annotated = Table::new(ctx.provenance(), header);
    for inp in &inputs {
        let estimate = match (&inp.values, inp.flags.is_empty()) {
            (Some(v), true) => num(model.predict(v)),
            _ => String::new(),
        };
        let row = [
            inp.cell_id.clone(),
            inp.age_hours.map(num).unwrap_or_default(),
            estimate,
            inp.flags.clone(),
        ];
        plain.row(&row);
        annotated.row(&row);
    }
    std::io::stdout()
        .write_all(&plain.into_bytes())
        .map_err(|e| Failure::new(crate::failure::INTERNAL, format!("stdout: {e}")))?;
    if write_file {
        ctx.write_table("predictions.csv", annotated)?;
    }
    Ok(())
}
