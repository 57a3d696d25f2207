//! Per-iteration report tables.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use incprune::DpStats;
use sha2::{Digest, Sha256};

/// First 16 hex digits of the SHA-256 of the model file.
pub fn model_digest(text: &str) -> String {
    let hash = Sha256::digest(text.as_bytes());
    hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// One report row; counters are copied from [`DpStats`] unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub variant: String,
    pub iteration: usize,
    pub vectors_in: usize,
    pub vectors_out: usize,
    pub lp_count: usize,
    pub constraint_rows: usize,
    pub harvested: usize,
    pub detection_lps: usize,
    pub residual: Option<f64>,
    pub wall_time_s: f64,
}

impl Row {
    pub fn new(variant: &str, iteration: usize, stats: &DpStats, residual: Option<f64>) -> Self {
        Row {
            variant: variant.to_string(),
            iteration,
            vectors_in: stats.vectors_in,
            vectors_out: stats.vectors_out,
            lp_count: stats.total_lps(),
            constraint_rows: stats.total_rows(),
            harvested: stats.csp.harvested_without_lp,
            detection_lps: stats.detection.lp_count(),
            residual,
            wall_time_s: stats.wall_time.as_secs_f64(),
        }
    }
}

/// Report for one run or one comparison.
pub struct RunReport {
    pub digest: String,
    pub rows: Vec<Row>,
    /// Include the wall-time column; off by default so reruns are byte-identical.
    pub timings: bool,
}

impl RunReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let with_residual = self.rows.iter().any(|r| r.residual.is_some());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "model",
            "variant",
            "iteration",
            "vectors_in",
            "vectors_out",
            "lp_count",
            "constraint_rows",
            "harvested",
            "detection_lps",
        ];
        if with_residual {
            header.push("residual");
        }
        if self.timings {
            header.push("wall_time_s");
        }
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                self.digest.clone(),
                r.variant.clone(),
                r.iteration.to_string(),
                r.vectors_in.to_string(),
                r.vectors_out.to_string(),
                r.lp_count.to_string(),
                r.constraint_rows.to_string(),
                r.harvested.to_string(),
                r.detection_lps.to_string(),
            ];
            if with_residual {
                rec.push(r.residual.map_or(String::new(), |x| format!("{x:.9}")));
            }
            if self.timings {
                rec.push(format!("{:.6}", r.wall_time_s));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        self.write_csv(file)
    }
}
