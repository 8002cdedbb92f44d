//! Text renderings of a bundle: the comparison table and the selection matrix.

use super::{Outcome, RunArtifactBundle};
use crate::error::{Error, Result};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            other => Err(Error::Config(format!("unknown table format `{other}`"))),
        }
    }
}

/// Placeholder for failed methods and undefined metrics.
pub const MISSING: &str = "—";

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.2}"),
        Some(_) => "inf".to_string(),
        None => MISSING.to_string(),
    }
}

fn to_csv(rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Validation(e.to_string()))
}

/// The ranking table, ascending by J, with metrics rounded to two decimals.
pub fn render_table(bundle: &RunArtifactBundle, format: TableFormat) -> Result<String> {
    if bundle.ranking.is_empty() {
        return Err(Error::Validation("bundle has no methods to tabulate".into()));
    }
    let header = ["method", "J", "MAE", "rRMSE", "rMAE", "CC", "n_selected"];
    let mut rows = Vec::with_capacity(bundle.ranking.len());
    let mut notes = Vec::new();
    for row in &bundle.ranking {
        let mut method = row.method.to_string();
        if let Some(reason) = &row.failure {
            notes.push(format!("{}: {}", row.method, reason));
            if format == TableFormat::Markdown {
                method = format!("{method} [{}]", notes.len());
            }
        }
        rows.push(vec![
            method,
            cell(row.j),
            cell(row.mae),
            cell(row.rrmse),
            cell(row.rmae),
            cell(row.cc),
            row.n_selected.map_or(MISSING.to_string(), |n| n.to_string()),
            row.failure.clone().unwrap_or_default(),
        ]);
    }
    match format {
        TableFormat::Csv => {
            let mut all = vec![header.iter().map(|s| s.to_string()).chain(["note".to_string()]).collect()];
            all.extend(rows);
            to_csv(all)
        }
        TableFormat::Markdown => {
            let mut out = String::new();
            writeln!(out, "| {} |", header.join(" | ")).expect("write to string");
            writeln!(out, "|{}", "---|".repeat(header.len())).expect("write to string");
            for mut r in rows {
                r.pop();
                writeln!(out, "| {} |", r.join(" | ").replace('\n', " ")).expect("write to string");
            }
            if !notes.is_empty() {
                out.push('\n');
                for (i, note) in notes.iter().enumerate() {
                    writeln!(out, "[{}] {}", i + 1, note.replace('\n', " ")).expect("write to string");
                }
            }
            Ok(out)
        }
    }
}

/// Method x feature 0/1 matrix in ranking order, followed by the number of
/// SFS methods selecting each feature and a flag row for features reaching
/// the bundle's threshold.
pub fn render_selection_matrix(bundle: &RunArtifactBundle) -> Result<String> {
    if bundle.ranking.is_empty() {
        return Err(Error::Validation("bundle has no methods for a selection matrix".into()));
    }
    let n = bundle.feature_names.len();
    let mut rows = vec![std::iter::once("method".to_string()).chain(bundle.feature_names.iter().cloned()).collect()];
    let mut counts = vec![0usize; n];
    for ranked in &bundle.ranking {
        let mut flags = vec![0u8; n];
        if let Some(run) = bundle.run_for(&ranked.method) {
            if let Outcome::Succeeded(r) = &run.outcome {
                for &j in &r.selected {
                    flags[j] = 1;
                    if run.method.is_sfs() {
                        counts[j] += 1;
                    }
                }
            }
        }
        rows.push(
            std::iter::once(ranked.method.to_string())
                .chain(flags.iter().map(|f| f.to_string()))
                .collect(),
        );
    }
    rows.push(std::iter::once("sfs_count".to_string()).chain(counts.iter().map(|c| c.to_string())).collect());
    rows.push(
        std::iter::once(format!("sfs_count>={}", bundle.matrix_threshold))
            .chain(counts.iter().map(|&c| u8::from(c >= bundle.matrix_threshold).to_string()))
            .collect(),
    );
    to_csv(rows)
}

#[cfg(test)]
mod tests {
    use super::super::{rank, Method, MethodResult, MethodRun, Provenance};
    use super::*;
    use crate::data::FeaturePartition;
    use crate::regressors::RegressorSpec;
    use crate::suitability::EvaluationRecord;
    use std::collections::BTreeMap;

    fn ok(method: Method, j: f64, selected: Vec<usize>) -> MethodRun {
        let record = EvaluationRecord {
            partition: FeaturePartition::new(selected.clone(), 3).unwrap().sorted(),
            m1: None,
            m2: None,
            penalty: 0.0,
            j_prime: vec![j],
            j,
            beta1: 1.0,
            beta2: 0.0,
            m2_targets: Vec::new(),
            grid_point: RegressorSpec::LinearElastic { alpha1: 0.0, alpha2: 0.0 },
        };
        MethodRun {
            method,
            outcome: Outcome::Succeeded(MethodResult {
                selected_names: selected.iter().map(|j| format!("f{j}")).collect(),
                selected,
                j,
                metrics: None,
                record,
                family_records: Vec::new(),
            }),
        }
    }

    fn bundle(runs: Vec<MethodRun>) -> RunArtifactBundle {
        RunArtifactBundle {
            provenance: Provenance {
                config_hash: String::new(),
                dataset_hash: String::new(),
                fold_seed: 0,
                model_seed: 0,
                version: String::new(),
            },
            preset: None,
            feature_names: vec!["f0".into(), "f1".into(), "f2".into()],
            matrix_threshold: 2,
            ranking: rank(&runs),
            runs,
            traces: Vec::new(),
            plan: None,
            timings: BTreeMap::new(),
        }
    }

    #[test]
    fn table_sorted_and_rounded() {
        let b = bundle(vec![ok(Method::SfsSvr, 0.354, vec![0]), ok(Method::SfsLinear, 0.3249, vec![1])]);
        let csv = render_table(&b, TableFormat::Csv).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "method,J,MAE,rRMSE,rMAE,CC,n_selected,note");
        assert!(lines[1].starts_with("sfs_linear,0.32,"));
        assert!(lines[2].starts_with("sfs_svr,0.35,"));
    }

    #[test]
    fn failed_rows_use_placeholder_and_footnote() {
        let mut runs = vec![ok(Method::SfsLinear, 0.3, vec![1])];
        runs.push(MethodRun { method: Method::FilterPca, outcome: Outcome::Failed { reason: "too few".into() } });
        let md = render_table(&bundle(runs), TableFormat::Markdown).unwrap();
        assert!(md.contains("| filter_pca [1] | — | — | — | — | — | — |"));
        assert!(md.contains("[1] filter_pca: too few"));
    }

    #[test]
    fn matrix_counts_sfs_selections() {
        let runs = vec![
            ok(Method::SfsLinear, 0.3, vec![1, 2]),
            ok(Method::SfsRf, 0.4, vec![1]),
            ok(Method::FilterMi, 0.5, vec![1, 0]),
            ok(Method::SfsSvr, 0.6, vec![]),
        ];
        let csv = render_selection_matrix(&bundle(runs)).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "method,f0,f1,f2");
        assert_eq!(lines[3], "filter_mi,1,1,0");
        assert_eq!(lines[4], "sfs_svr,0,0,0");
        assert_eq!(lines[5], "sfs_count,0,2,1");
        assert_eq!(lines[6], "sfs_count>=2,0,1,0");
    }

    #[test]
    fn empty_bundle_rejected() {
        assert!(render_table(&bundle(Vec::new()), TableFormat::Csv).is_err());
        assert!(render_selection_matrix(&bundle(Vec::new())).is_err());
    }
}
