use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::StageTimings;

/// Outcome of evaluating one embedding. Timings are wall-clock seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub method: String,
    pub dataset: String,
    pub dims: usize,
    pub folds: usize,
    pub fold_accuracies: Vec<f64>,
    pub chosen_k: Vec<usize>,
    pub mean_accuracy: f64,
    pub two_std: f64,
    /// Clustering is k-means, not spectral clustering.
    pub clustering: String,
    pub clusters: usize,
    pub ari: f64,
    pub preservation_topk: usize,
    pub preservation: f64,
    pub timings: Vec<(String, f64)>,
}

pub fn stage_timings(t: &StageTimings) -> Vec<(String, f64)> {
    vec![
        ("graph".into(), t.graph.as_secs_f64()),
        ("walks".into(), t.walks.as_secs_f64()),
        ("train".into(), t.train.as_secs_f64()),
        ("project".into(), t.project.as_secs_f64()),
        ("total".into(), t.total().as_secs_f64()),
    ]
}

impl EvalReport {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if self.fold_accuracies.len() != self.folds
            || !self.fold_accuracies.iter().all(|&a| in_unit(a))
        {
            return Err(Error::Evaluation("fold accuracies malformed".into()));
        }
        if !in_unit(self.mean_accuracy) || !in_unit(self.preservation) {
            return Err(Error::Evaluation(
                "accuracy or preservation outside [0, 1]".into(),
            ));
        }
        if !(-1.0..=1.0).contains(&self.ari) {
            return Err(Error::Evaluation(format!(
                "ARI {} outside [-1, 1]",
                self.ari
            )));
        }
        Ok(())
    }

    /// `(metric, value)` pairs in a fixed order.
    pub fn records(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = vec![
            ("method".into(), self.method.clone()),
            ("dataset".into(), self.dataset.clone()),
            ("dims".into(), self.dims.to_string()),
            ("folds".into(), self.folds.to_string()),
        ];
        for (i, (a, k)) in self.fold_accuracies.iter().zip(&self.chosen_k).enumerate() {
            out.push((format!("fold_{i}_accuracy"), a.to_string()));
            out.push((format!("fold_{i}_k"), k.to_string()));
        }
        out.push(("mean_accuracy".into(), self.mean_accuracy.to_string()));
        out.push(("accuracy_2std".into(), self.two_std.to_string()));
        out.push(("clustering".into(), self.clustering.clone()));
        out.push(("clusters".into(), self.clusters.to_string()));
        out.push(("ari".into(), self.ari.to_string()));
        out.push((
            "preservation_topk".into(),
            self.preservation_topk.to_string(),
        ));
        out.push(("preservation".into(), self.preservation.to_string()));
        for (stage, secs) in &self.timings {
            out.push((format!("time_{stage}_seconds"), secs.to_string()));
        }
        out
    }

    /// One `metric<TAB>value` line per metric.
    pub fn to_records_text(&self) -> String {
        self.records().iter().fold(String::new(), |mut s, (k, v)| {
            let _ = writeln!(s, "{k}\t{v}");
            s
        })
    }

    /// `key = value` lines with a separate timing section.
    pub fn to_key_value_text(&self) -> String {
        let mut s = String::new();
        let fmt_list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "method = {}", self.method);
        let _ = writeln!(s, "dataset = {}", self.dataset);
        let _ = writeln!(s, "dims = {}", self.dims);
        let _ = writeln!(s, "folds = {}", self.folds);
        let _ = writeln!(s, "fold_accuracies = {}", fmt_list(&self.fold_accuracies));
        let ks = self
            .chosen_k
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(s, "chosen_k = {ks}");
        let _ = writeln!(s, "mean_accuracy = {}", self.mean_accuracy);
        let _ = writeln!(s, "accuracy_2std = {}", self.two_std);
        let _ = writeln!(s, "clustering = {}", self.clustering);
        let _ = writeln!(s, "clusters = {}", self.clusters);
        let _ = writeln!(s, "ari = {}", self.ari);
        let _ = writeln!(s, "preservation_topk = {}", self.preservation_topk);
        let _ = writeln!(s, "preservation = {}", self.preservation);
        let _ = writeln!(s, "[timings]");
        for (stage, secs) in &self.timings {
            let _ = writeln!(s, "{stage} = {secs}");
        }
        s
    }

    pub fn write_key_value(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_key_value_text()).map_err(|e| Error::io(path, e))
    }

    pub fn write_records(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_records_text()).map_err(|e| Error::io(path, e))
    }
}

/// Parses a records file back into `(metric, value)` pairs.
pub fn parse_records(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('\t'))
        .map(|(k, v)| (k.to_owned(), v.to_owned()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EvalReport {
        EvalReport {
            method: "pca".into(),
            dataset: "blobs".into(),
            dims: 2,
            folds: 2,
            fold_accuracies: vec![1.0, 0.5],
            chosen_k: vec![1, 3],
            mean_accuracy: 0.75,
            two_std: 0.5,
            clustering: "kmeans".into(),
            clusters: 3,
            ari: 0.25,
            preservation_topk: 5,
            preservation: 0.4,
            timings: vec![("pca".into(), 0.01)],
        }
    }

    #[test]
    fn records_round_trip() {
        let r = sample();
        r.validate().unwrap();
        let parsed = parse_records(&r.to_records_text());
        assert_eq!(parsed, r.records());
        assert!(parsed
            .iter()
            .any(|(k, v)| k == "mean_accuracy" && v == "0.75"));
        assert!(parsed.iter().any(|(k, _)| k == "time_pca_seconds"));
        assert!(r.to_key_value_text().contains("[timings]\npca = 0.01\n"));
    }

    #[test]
    fn invalid_values_rejected() {
        let mut r = sample();
        r.ari = 1.5;
        assert!(r.validate().is_err());
        let mut r = sample();
        r.fold_accuracies.pop();
        assert!(r.validate().is_err());
    }
}
