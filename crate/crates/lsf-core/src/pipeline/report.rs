//! Consolidated baseline-vs-fusion comparison table.

use super::config::PipelineConfig;
use super::stages::{eval_path, require, StageReport};
use super::PipelineError;
use crate::digest::digest_bytes;
use std::fs;

/// Metric row parsed back from an evaluation artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub model: String,
    pub accuracy: Option<f64>,
    pub recall: Option<f64>,
    pub specificity: Option<f64>,
    pub auc_roc: f64,
    pub ap: f64,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub task: String,
    pub rows: Vec<MetricsRow>,
}

fn parse_eval(text: &str, model: &str) -> Result<MetricsRow, PipelineError> {
    let mut map = std::collections::BTreeMap::new();
    for line in text.lines() {
        if let Some((k, v)) = line.split_once(' ') {
            map.insert(k.to_string(), v.to_string());
        }
    }
    let opt = |key: &str| -> Result<Option<f64>, PipelineError> {
        match map.get(key).map(String::as_str) {
            Some("undefined") => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| PipelineError::Artifact(format!("bad {key} in evaluation file"))),
            None => Err(PipelineError::Artifact(format!(
                "evaluation file lacks {key}"
            ))),
        }
    };
    Ok(MetricsRow {
        model: model.to_string(),
        accuracy: opt("accuracy")?,
        recall: opt("recall")?,
        specificity: opt("specificity")?,
        auc_roc: opt("auc_roc")?.ok_or_else(|| PipelineError::Artifact("auc undefined".into()))?,
        ap: opt("ap")?.ok_or_else(|| PipelineError::Artifact("ap undefined".into()))?,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => "-".into(),
    }
}

impl ComparisonReport {
    pub fn markdown(&self) -> String {
        let mut out = format!(
            "# {} detection: baseline vs LSF\n\n| model | accuracy | recall | specificity | auc_roc | ap |\n|---|---|---|---|---|---|\n",
            self.task
        );
        for r in &self.rows {
            out.push_str(&format!(
                "| {} | {} | {} | {} | {:.4} | {:.4} |\n",
                r.model,
                fmt_opt(r.accuracy),
                fmt_opt(r.recall),
                fmt_opt(r.specificity),
                r.auc_roc,
                r.ap
            ));
        }
        out
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("model,accuracy,recall,specificity,auc_roc,ap\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{:.4},{:.4}\n",
                r.model,
                fmt_opt(r.accuracy),
                fmt_opt(r.recall),
                fmt_opt(r.specificity),
                r.auc_roc,
                r.ap
            ));
        }
        out
    }
}

/// Build the comparison from the evaluation artifacts.
pub fn comparison_report(config: &PipelineConfig) -> Result<ComparisonReport, PipelineError> {
    let lsf_text = fs::read_to_string(require(eval_path(config, "lsf"), "evaluate")?)?;
    let baseline_text = fs::read_to_string(require(eval_path(config, "baseline"), "evaluate")?)?;
    Ok(ComparisonReport {
        task: config.task.name().to_string(),
        rows: vec![
            parse_eval(&lsf_text, "LSF")?,
            parse_eval(&baseline_text, "baseline")?,
        ],
    })
}

pub(super) fn stage_report(config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let mut rep = StageReport::new("report");
    let stage_dir = config.out_dir.join("report");
    fs::create_dir_all(&stage_dir)?;
    let comparison = comparison_report(config)?;
    let md = comparison.markdown();
    let csv = comparison.csv();
    fs::write(stage_dir.join("report.md"), &md)?;
    fs::write(stage_dir.join("report.csv"), &csv)?;
    rep.messages.push(format!(
        "LSF AP {:.4} vs baseline AP {:.4}",
        comparison.rows[0].ap, comparison.rows[1].ap
    ));
    let mut manifest = format!("lsf-manifest 1\nstage report\nconfig {}\n", config.digest());
    manifest.push_str(&format!(
        "output report.md {:016x}\noutput report.csv {:016x}\n",
        digest_bytes(md.as_bytes()),
        digest_bytes(csv.as_bytes())
    ));
    fs::write(stage_dir.join("manifest.txt"), manifest)?;
    Ok(rep)
}
