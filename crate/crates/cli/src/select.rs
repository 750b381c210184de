//! `select`: exhaustive leave-one-out subset search over a features table.

use std::path::Path;

use eislife_core::regression::SubsetScore;
use eislife_core::{exhaustive_select, Criterion, Dataset, LinearModel, SelectionOptions};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::context::{file_label, Ctx};
use crate::failure::{from_fit, CmdResult, Failure};
use crate::io::{self, num, Table};

/// Model refit on all rows with the selected columns, addressed by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalModel {
    pub features: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub x_mean: Vec<f64>,
    pub x_std: Vec<f64>,
    pub y_mean: f64,
    pub y_std: f64,
    pub rank_deficient: bool,
}

impl FinalModel {
    fn from_model(m: &LinearModel, names: &[String]) -> Self {
        Self {
            features: m.feature_indices.iter().map(|&j| names[j].clone()).collect(),
            weights: m.weights.clone(),
            intercept: m.intercept,
            x_mean: m.x_mean.clone(),
            x_std: m.x_std.clone(),
            y_mean: m.y_mean,
            y_std: m.y_std,
            rank_deficient: m.rank_deficient,
        }
    }

    /// Core model whose feature indices run over `self.features` in order.
    pub fn to_model(&self) -> Option<LinearModel> {
        let d = self.features.len();
        if self.weights.len() != d || self.x_mean.len() != d || self.x_std.len() != d {
            return None;
        }
        Some(LinearModel {
            weights: self.weights.clone(),
            intercept: self.intercept,
            feature_indices: (0..d).collect(),
            x_mean: self.x_mean.clone(),
            x_std: self.x_std.clone(),
            y_mean: self.y_mean,
            y_std: self.y_std,
            rank_deficient: self.rank_deficient,
        })
    }
}

#[derive(Serialize)]
struct ScoreDoc {
    dimension: usize,
    features: Vec<String>,
    indices: Vec<usize>,
    train_me: f64,
    test_me: f64,
    train_mse: f64,
    test_mse: f64,
}

impl From<&SubsetScore> for ScoreDoc {
    fn from(s: &SubsetScore) -> Self {
        Self {
            dimension: s.subset.len(),
            features: s.names.clone(),
            indices: s.subset.clone(),
            train_me: s.train_me,
            test_me: s.test_me,
            train_mse: s.train_mse,
            test_mse: s.test_mse,
        }
    }
}

#[derive(Serialize)]
struct SelectionDoc<'a> {
    command: &'static str,
    input: String,
    run_config: &'a RunConfig,
    criterion: Criterion,
    max_dim: Option<usize>,
    feature_names: Vec<String>,
    n_samples: usize,
    dropped_flagged: usize,
    best: ScoreDoc,
    per_dimension_best: Vec<ScoreDoc>,
    tied_with_best: Vec<Vec<String>>,
    evaluated: usize,
    infeasible: usize,
    constant_columns: Vec<String>,
    final_model: FinalModel,
}

pub struct SelectArgs {
    pub allow_flagged: bool,
    pub max_dim: Option<usize>,
    pub criterion: Criterion,
    /// Restrict the search to these columns.
    pub features: Option<Vec<String>>,
}

/// Builds the dataset from a features table, dropping flagged rows when allowed.
pub fn load_dataset(path: &Path, args: &SelectArgs) -> CmdResult<(Dataset, usize)> {
    let table = io::read_features(path)?;
    let columns: Vec<usize> = match &args.features {
        None => (0..table.names.len()).collect(),
        Some(wanted) => wanted
            .iter()
            .map(|w| {
                table
                    .names
                    .iter()
                    .position(|n| n == w)
                    .ok_or_else(|| Failure::schema(format!("{}: no feature column {w:?}", path.display())))
            })
            .collect::<CmdResult<_>>()?,
    };
    if columns.is_empty() {
        return Err(Failure::schema(format!("{}: no feature columns", path.display())));
    }
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut cells = Vec::new();
    let mut dropped = 0;
    for (i, r) in table.rows.iter().enumerate() {
        if !r.flags.is_empty() {
            if args.allow_flagged {
                dropped += 1;
                continue;
            }
            return Err(Failure::parse(format!(
                "{}: row {} is flagged ({}); rerun with --allow-flagged to drop flagged rows",
                path.display(),
                i + 1,
                r.flags
            )));
        }
        let values: Option<Vec<f64>> = columns.iter().map(|&c| r.values[c]).collect();
        let Some(values) = values else {
            return Err(Failure::parse(format!("{}: row {} has empty feature cells", path.display(), i + 1)));
        };
        rows.push(values);
        y.push(r.age_hours);
        cells.push(r.cell_id.clone());
    }
    let names = columns.iter().map(|&c| table.names[c].clone()).collect();
    let data = Dataset::new(&rows, y, names, cells).map_err(|e| from_fit("dataset", e))?;
    Ok((data, dropped))
}

pub fn select(ctx: &Ctx, features: &Path, args: &SelectArgs) -> CmdResult {
    let (data, dropped) = load_dataset(features, args)?;
    let opts = SelectionOptions {
        max_dim: args.max_dim,
        criterion: args.criterion,
    };
    let report = exhaustive_select(&data, &opts).map_err(|e| from_fit("selection", e))?;

    let mut fig6 = Table::new(ctx.provenance(), ["cell_id", "age_hours", "loo_prediction", "abs_error"]);
    for i in 0..data.n_samples() {
        fig6.row([
            data.cell_ids[i].clone(),
            num(data.y[i]),
            num(report.predictions[i]),
            num(report.abs_errors[i]),
        ]);
    }
    let mut fig7 = Table::new(ctx.provenance(), ["dimension", "best_test_me", "best_subset_names"]);
    for s in &report.per_dimension_best {
        fig7.row([s.subset.len().to_string(), num(s.test_me), s.names.join(";")]);
    }

    let doc = SelectionDoc {
        command: "select",
        input: file_label(features),
        run_config: &ctx.cfg,
        criterion: report.criterion,
        max_dim: args.max_dim,
        feature_names: data.names.clone(),
        n_samples: data.n_samples(),
        dropped_flagged: dropped,
        best: (&report.best).into(),
        per_dimension_best: report.per_dimension_best.iter().map(ScoreDoc::from).collect(),
        tied_with_best: report.tied_with_best.iter().map(|s| data.subset_names(s)).collect(),
        evaluated: report.evaluated,
        infeasible: report.infeasible,
        constant_columns: data.subset_names(&report.constant_columns),
        final_model: FinalModel::from_model(&report.final_model, &data.names),
    };
    ctx.write_json("selection.json", &doc)?;
    ctx.write_table("figure6.csv", fig6)?;
    ctx.write_table("figure7.csv", fig7)
}
