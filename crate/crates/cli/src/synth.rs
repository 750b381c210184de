//! `synth`: write a synthetic study directory.

use std::path::Path;

use eislife_core::features::feature_index;
use eislife_core::synth::{gen_ageing_dataset_with, gen_latent_study, GeneratedSpectrum, PlantedTruth, SynthSpec};
use eislife_core::LogsigParams;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::context::Ctx;
use crate::failure::{from_fit, CmdResult, Failure};
use crate::io::{self, num, Table, MANIFEST_HEADER};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySpec {
    pub synth: SynthSpec,
    pub n_spectra: usize,
    /// Feature names the recorded ages are planted on. Empty means the
    /// recorded ages are the latent drift ages.
    pub planted: Vec<String>,
}

impl Default for StudySpec {
    fn default() -> Self {
        Self {
            synth: SynthSpec::default(),
            n_spectra: 29,
            planted: Vec::new(),
        }
    }
}

#[derive(Serialize)]
struct PlantedDoc {
    features: Vec<String>,
    coefficients: Vec<f64>,
    intercept: f64,
    noise_sigma: f64,
    regenerations: usize,
}

#[derive(Serialize)]
struct SpectrumTruth {
    file: String,
    cell_id: String,
    age_hours: f64,
    latent_age_hours: f64,
    logsig: LogsigParams,
    /// Monomial coefficients of the three regimes.
    betas: [[f64; 4]; 3],
    boundaries_logf: (f64, f64),
    labels: Vec<usize>,
}

#[derive(Serialize)]
struct TruthDoc<'a> {
    command: &'static str,
    run_config: &'a RunConfig,
    study: &'a StudySpec,
    planted: Option<PlantedDoc>,
    spectra: Vec<SpectrumTruth>,
}

pub fn load_spec(path: Option<&Path>) -> CmdResult<StudySpec> {
    let Some(p) = path else {
        return Ok(StudySpec::default());
    };
    let text = std::fs::read_to_string(p).map_err(|e| Failure::parse(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::parse(format!("{}: {e}", p.display())))
}

pub fn synth(ctx: &Ctx, spec_path: Option<&Path>, seed: Option<u64>) -> CmdResult {
    let mut study = load_spec(spec_path)?;
    if let Some(s) = seed {
        study.synth.seed = s;
    }
    study.synth.validate().map_err(|e| Failure::parse(format!("spec: {e}")))?;
    let planted: Vec<usize> = study
        .planted
        .iter()
        .map(|n| feature_index(n).ok_or_else(|| Failure::parse(format!("spec: unknown feature {n:?}"))))
        .collect::<CmdResult<_>>()?;

    let (spectra, latent, planted_truth): (Vec<GeneratedSpectrum>, Vec<f64>, Option<(PlantedTruth, usize)>) =
        if planted.is_empty() {
            let s = gen_latent_study(&study.synth, study.n_spectra).map_err(|e| Failure::parse(format!("spec: {e}")))?;
            let ages = s.iter().map(|g| g.spectrum.age_hours).collect();
            (s, ages, None)
        } else {
            let ds = gen_ageing_dataset_with(&study.synth, study.n_spectra, &planted, &ctx.cfg.rhlp, &ctx.cfg.simplex)
                .map_err(|e| from_fit("synthetic study", e))?;
            (ds.spectra, ds.latent_age_hours, Some((ds.truth, ds.regenerations)))
        };

    let width = (spectra.len().max(1) - 1).to_string().len().max(3);
    let mut manifest = Table::new(None, MANIFEST_HEADER);
    let mut truths = Vec::with_capacity(spectra.len());
    for (i, g) in spectra.iter().enumerate() {
        let file = format!("spectra/spectrum_{i:0width$}.csv");
        io::write_atomic(&ctx.out.join(&file), &io::spectrum_csv(&g.spectrum))?;
        manifest.row([file.clone(), num(g.spectrum.age_hours), g.spectrum.cell_id.clone()]);
        truths.push(SpectrumTruth {
            file,
            cell_id: g.spectrum.cell_id.clone(),
            age_hours: g.spectrum.age_hours,
            latent_age_hours: latent[i],
            logsig: g.truth.logsig_truth,
            betas: g.truth.regime_betas(),
            boundaries_logf: g.truth.boundaries_logf,
            labels: g.labels.clone(),
        });
    }
    ctx.write_table("manifest.csv", manifest)?;
    let planted_doc = planted_truth.map(|(t, regenerations)| PlantedDoc {
        features: t.planted.iter().map(|&j| eislife_core::feature_names()[j].to_string()).collect(),
        coefficients: t.coefficients,
        intercept: t.intercept,
        noise_sigma: t.noise_sigma,
        regenerations,
    });
    ctx.write_json(
        "truth.json",
        &TruthDoc {
            command: "synth",
            run_config: &ctx.cfg,
            study: &study,
            planted: planted_doc,
            spectra: truths,
        },
    )
}
