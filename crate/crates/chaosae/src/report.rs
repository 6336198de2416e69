//! Consolidated JSON summary and SVG plots of whatever stages have run.

use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{coordinate_label, ExperimentConfig};
use crate::error::Result;
use crate::formats::{self, LleRow, SweepRow};
use crate::pipeline::{cell_label, known_systems, lle_stem, Layout, LleMode, SweepMode, TrainSummary};
use crate::plot::{LinePlot, Series};

pub const REPORT_FORMAT_VERSION: u64 = 1;

/// Path relative to the output root with `/` separators.
fn rel(layout: &Layout, path: &Path) -> String {
    let p = path.strip_prefix(&layout.root).unwrap_or(path);
    p.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect::<Vec<_>>().join("/")
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("value serializes")
}

struct Collector<'a> {
    layout: &'a Layout,
    missing: Vec<String>,
    plots: Vec<(String, LinePlot)>,
}

impl Collector<'_> {
    /// `Some` if `path` exists; otherwise records it as missing.
    fn want(&mut self, path: &Path) -> Option<()> {
        if path.exists() {
            Some(())
        } else {
            self.missing.push(rel(self.layout, path));
            None
        }
    }

    fn training(&mut self, system: &str) -> Result<Value> {
        let dir = self.layout.root.join("train").join(system);
        let summary_path = dir.join("summary.json");
        if self.want(&summary_path).is_none() {
            return Ok(Value::Null);
        }
        let summary: TrainSummary = formats::read_json(&summary_path)?;
        let loss_path = dir.join("loss.csv");
        let mut entry = to_value(&summary);
        entry["loss_curve"] = json!(rel(self.layout, &loss_path));
        if loss_path.exists() {
            let rows: Vec<formats::LossRow> = formats::read_csv_rows(&loss_path)?;
            let pts = |f: fn(&formats::LossRow) -> f64| rows.iter().map(|r| (r.epoch as f64, f(r))).collect::<Vec<_>>();
            self.plots.push((
                format!("loss_{system}.svg"),
                LinePlot {
                    title: format!("{system} training loss"),
                    x_label: "epoch".into(),
                    y_label: "loss".into(),
                    log_y: true,
                    series: vec![
                        Series::new("train", pts(|r| r.train_loss)).dashed(),
                        Series::new("test", pts(|r| r.test_loss)),
                    ],
                    ..Default::default()
                },
            ));
        }
        Ok(entry)
    }

    fn sweep(&mut self, mode: SweepMode, system: &str) -> Result<Value> {
        let dir = self.layout.sweep_dir(mode, system);
        let csv = dir.join("sweep.csv");
        if self.want(&csv).is_none() {
            return Ok(Value::Null);
        }
        let rows: Vec<SweepRow> = formats::read_sweep_csv(&csv)?;
        let meta: Value = formats::read_json(&dir.join("sweep.meta.json"))?;
        let cells: Vec<Value> = rows
            .iter()
            .map(|r| {
                json!({
                    "value": r.alpha_or_w,
                    "label": cell_label(mode, r.alpha_or_w),
                    "mean_active": r.mean_active,
                    "std_active": r.std_active,
                    "test_mse": r.test_mse,
                    "test_total_loss": r.test_total_loss,
                })
            })
            .collect();
        let x_label = match mode {
            SweepMode::Alpha => "alpha",
            SweepMode::Window => "W",
        };
        let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.mean_active.is_some()).collect();
        let mean: Vec<(f64, f64)> = ok.iter().map(|r| (r.alpha_or_w, r.mean_active.unwrap())).collect();
        let band = |sign: f64| -> Vec<(f64, f64)> {
            ok.iter().map(|r| (r.alpha_or_w, r.mean_active.unwrap() + sign * r.std_active.unwrap())).collect()
        };
        let log_x = mode == SweepMode::Alpha;
        self.plots.push((
            format!("nodes_{}_{system}.svg", mode.name()),
            LinePlot {
                title: format!("{system}: active latent nodes"),
                x_label: x_label.into(),
                y_label: "active nodes".into(),
                log_x,
                series: vec![
                    Series::new("mean", mean),
                    Series::new("mean + std", band(1.0)).dashed(),
                    Series::new("mean - std", band(-1.0)).dashed(),
                ],
                ..Default::default()
            },
        ));
        self.plots.push((
            format!("mse_{}_{system}.svg", mode.name()),
            LinePlot {
                title: format!("{system}: test loss"),
                x_label: x_label.into(),
                y_label: "loss".into(),
                log_x,
                log_y: true,
                series: vec![
                    Series::new("test mse", ok.iter().map(|r| (r.alpha_or_w, r.test_mse.unwrap())).collect()),
                    Series::new("test total", ok.iter().map(|r| (r.alpha_or_w, r.test_total_loss.unwrap())).collect())
                        .dashed(),
                ],
            },
        ));
        Ok(json!({ "csv": rel(self.layout, &csv), "meta": meta, "cells": cells }))
    }

    fn lle(&mut self, stem: &str) -> Result<Value> {
        let csv = self.layout.lle_dir().join(format!("{stem}.csv"));
        if self.want(&csv).is_none() {
            return Ok(Value::Null);
        }
        let rows: Vec<LleRow> = formats::read_lle_csv(&csv)?;
        Ok(to_value(&rows))
    }

    fn divergence_plots(&mut self, cfg: &ExperimentConfig) -> Result<()> {
        let curves = self.layout.lle_dir().join("curves");
        for target in &cfg.lle.targets {
            let system = target.system.name();
            let mut series = Vec::new();
            for &c in &target.coordinates {
                let label = coordinate_label(&target.system, cfg.index_of(c)?);
                let path = curves.join(format!("input_{system}_{label}.dat"));
                if path.exists() {
                    series.push(Series::new(label, formats::read_dat(&path)?));
                }
            }
            if !series.is_empty() {
                self.plots.push((
                    format!("divergence_{system}.svg"),
                    LinePlot {
                        title: format!("{system}: divergence of twin trajectories"),
                        x_label: "t".into(),
                        y_label: "ln d".into(),
                        series,
                        ..Default::default()
                    },
                ));
            }
        }
        Ok(())
    }
}

/// Builds `report/summary.json` plus SVG plots from the current output
/// directory. Stages that have not run appear as `null` and their expected
/// inputs are listed under `missing`.
pub fn run_report(cfg: &ExperimentConfig) -> Result<Value> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.output_dir);
    let mut col = Collector { layout: &layout, missing: Vec::new(), plots: Vec::new() };

    let mut training = Map::new();
    let mut sweep_alpha = Map::new();
    let mut sweep_window = Map::new();
    for spec in known_systems() {
        let name = spec.name();
        training.insert(name.into(), col.training(name)?);
        sweep_alpha.insert(name.into(), col.sweep(SweepMode::Alpha, name)?);
        sweep_window.insert(name.into(), col.sweep(SweepMode::Window, name)?);
    }
    let mut lle = Map::new();
    for (mode, grid) in [
        (LleMode::Input, SweepMode::Alpha),
        (LleMode::Reconstructed, SweepMode::Alpha),
        (LleMode::Reconstructed, SweepMode::Window),
    ] {
        let stem = lle_stem(mode, grid);
        lle.insert(stem.clone(), col.lle(&stem)?);
    }
    col.divergence_plots(cfg)?;

    let dir = layout.report_dir();
    formats::ensure_dir(&dir)?;
    let mut plot_paths = Vec::new();
    for (name, plot) in &col.plots {
        let path = dir.join(name);
        formats::write_bytes(&path, plot.to_svg().as_bytes())?;
        plot_paths.push(rel(&layout, &path));
    }
    let summary = json!({
        "format_version": REPORT_FORMAT_VERSION,
        "config": to_value(cfg),
        "seeds": { "train": cfg.train.seed, "integration": cfg.integration.seed },
        "training": training,
        "sweeps": { "alpha": sweep_alpha, "window": sweep_window },
        "lle": lle,
        "plots": plot_paths,
        "missing": col.missing,
    });
    formats::write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// JSON schema of `report/summary.json`.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");
