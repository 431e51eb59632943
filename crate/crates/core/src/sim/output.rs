//! CSV and JSON artifacts written by the CLI.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use super::config::RunConfig;
use super::harness::{CurveRow, DecisionRow, FlComparison, SlotReport, SummaryRow};
use crate::error::{Error, Result};

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_slots(rows: &[SlotReport], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "slot",
        "policy",
        "cache_size",
        "chr",
        "realized_revenue",
        "planned_revenue",
        "placements",
    ])?;
    for r in rows {
        w.write_record(&[
            r.slot.to_string(),
            r.policy.to_string(),
            r.cache_size.to_string(),
            r.chr.to_string(),
            r.realized_revenue.to_string(),
            r.planned_revenue.to_string(),
            r.placements.to_string(),
        ])?;
    }
    finish(w, path)
}

pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "policy",
        "n",
        "cache_size",
        "slots",
        "mean_chr",
        "chr_ci",
        "mean_revenue",
        "revenue_ci",
        "mean_planned_revenue",
        "mean_placements",
    ])?;
    for r in rows {
        w.write_record(&[
            r.policy.to_string(),
            r.n.to_string(),
            r.cache_size.to_string(),
            r.slots.to_string(),
            r.mean_chr.to_string(),
            r.chr_ci.to_string(),
            r.mean_revenue.to_string(),
            r.revenue_ci.to_string(),
            r.mean_planned_revenue.to_string(),
            r.mean_placements.to_string(),
        ])?;
    }
    finish(w, path)
}

/// `round,mean_loss,val_acc_s0,...`. An empty curve still gets a header
/// sized for `horizon` positions.
pub fn write_train_curve(rows: &[CurveRow], horizon: usize, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["round".to_string(), "mean_loss".to_string()];
    header.extend((0..horizon).map(|s| format!("val_acc_s{s}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.round.to_string(), r.mean_loss.to_string()];
        rec.extend(r.val_accuracy.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    finish(w, path)
}

pub fn write_decisions(rows: &[DecisionRow], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["policy", "cache_size", "slot", "file", "weight", "selected"])?;
    for r in rows {
        w.write_record(&[
            r.policy.to_string(),
            r.cache_size.to_string(),
            r.slot.to_string(),
            r.file.to_string(),
            r.weight.to_string(),
            u8::from(r.selected).to_string(),
        ])?;
    }
    finish(w, path)
}

pub fn write_comparison(cmp: &FlComparison, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["position", "federated", "centralized"])?;
    for (s, (f, c)) in cmp.federated.iter().zip(&cmp.centralized).enumerate() {
        w.write_record(&[s.to_string(), f.to_string(), c.to_string()])?;
    }
    finish(w, path)
}

pub fn write_config_echo(cfg: &RunConfig, path: &Path) -> Result<()> {
    fs::write(path, cfg.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}
