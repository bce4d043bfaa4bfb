//! The four experiments. Each writes a report bundle into the output directory.

use std::path::Path;

use gridprobe_core::deviation::{
    mean_sem, ols, pc1_crowding, pca_layer_curves, set_statistics, Crowding, DeviationReport, NeuronFraction,
    SetStatistics, SignificanceCounter, TTestKind,
};
use gridprobe_core::imaging::{load_image, resize};
use gridprobe_core::netcore::{load_model, Model};
use gridprobe_core::rsa::{layer_curve, layer_curves, DissimilarityCurve, NeuronSweep};
use gridprobe_core::stimuli::{
    dot_count_sequence, mask_sweep, select_white_mask, whiteness_sweep_with, DotOrder, GridSpec, Sweep,
};
use gridprobe_core::INPUT_SIZE;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind, LoadedConfig};
use crate::emit::{write_bytes, write_json, Cell, Provenance, Table};
use crate::error::{HarnessError, Result};
use crate::manifest::{Entry, Manifest, StimulusSource};
use crate::svg::{ramp, Plot, PALETTE};

/// Neurons analysed per block when counting significant neurons.
const NEURON_CHUNK: usize = 4096;

pub const ILLUSION_LABEL: &str = "illusion";
pub const CONTROL_LABEL: &str = "control";

pub struct Run {
    pub config: ExperimentConfig,
    pub model: Model,
    pub provenance: Provenance,
}

impl Run {
    pub fn new(loaded: LoadedConfig) -> Result<Self> {
        let model = load_model(&loaded.config.model)?;
        let provenance = Provenance::new(&loaded.sha256, model.container_crc(), loaded.config.seed);
        Ok(Self {
            config: loaded.config,
            model,
            provenance,
        })
    }

    /// Runs the configured experiment.
    pub fn execute(&self) -> Result<()> {
        let out = &self.config.output_dir;
        std::fs::create_dir_all(out).map_err(HarnessError::io(out))?;
        match self.config.experiment {
            ExperimentKind::DotWhiteness => self.dot_whiteness(),
            ExperimentKind::DotCount => self.dot_count(),
            ExperimentKind::LayerPropagation => self.layer_propagation(),
            ExperimentKind::Pca => self.pca(),
        }
    }

    /// `config.layer`, else `fc8` when the model has one, else the last layer.
    pub fn analysis_layer(&self) -> Result<String> {
        if let Some(l) = &self.config.layer {
            if self.model.layer_index(l).is_none() {
                return Err(gridprobe_core::rsa::RsaError::UnknownLayer(l.clone()).into());
            }
            return Ok(l.clone());
        }
        let names: Vec<&str> = self.model.layer_names().collect();
        Ok(if names.contains(&"fc8") {
            "fc8".to_string()
        } else {
            names.last().expect("models have at least one layer").to_string()
        })
    }

    fn sweep_layers(&self) -> Result<Vec<String>> {
        match &self.config.layers {
            Some(ls) => {
                for l in ls {
                    if self.model.layer_index(l).is_none() {
                        return Err(gridprobe_core::rsa::RsaError::UnknownLayer(l.clone()).into());
                    }
                }
                Ok(ls.clone())
            }
            None => Ok(self.model.layer_names().map(str::to_string).collect()),
        }
    }

    fn path(&self, name: &str) -> std::path::PathBuf {
        self.config.output_dir.join(name)
    }

    fn entry_sweep(&self, entry: &Entry) -> Result<Sweep> {
        match &entry.source {
            StimulusSource::Grid(p) => Ok(whiteness_sweep_with(&GridSpec::load(p)?, self.config.levels)?),
            StimulusSource::Image(p) => {
                let mut img = load_image(p)?;
                if (img.width(), img.height()) != (INPUT_SIZE, INPUT_SIZE) {
                    img = resize(&img, INPUT_SIZE, INPUT_SIZE)?;
                }
                let [lo, hi] = self.config.mask_band;
                let mask = select_white_mask(&img, lo, hi)?;
                Ok(mask_sweep(&img, &mask, self.config.levels)?)
            }
        }
    }

    fn grid_pair(&self) -> Result<[(&'static str, GridSpec); 2]> {
        let grid = self.config.grid_spec()?;
        let control = self.config.control_spec(&grid)?;
        Ok([(ILLUSION_LABEL, grid), (CONTROL_LABEL, control)])
    }

    fn dot_whiteness(&self) -> Result<()> {
        let layer = self.analysis_layer()?;
        let manifests = self
            .config
            .manifests
            .iter()
            .map(Manifest::load)
            .collect::<Result<Vec<_>>>()?;

        let mut sets = Vec::with_capacity(manifests.len());
        for m in &manifests {
            let results = m
                .entries
                .par_iter()
                .map(|e| {
                    let sweep = self.entry_sweep(e)?;
                    let curve = layer_curve(&self.model, &sweep, sweep.reference(), &layer)?;
                    let report = DeviationReport::analyze(&curve)?;
                    Ok((e.display_name(), curve, report))
                })
                .collect::<Result<Vec<_>>>()?;
            sets.push((m.label.clone(), results));
        }

        let mut curves = Table::new(&["set", "stimulus", "gamma", "R", "layer", "neuron_i", "neuron_j", "neuron_k"]);
        let mut reports = Vec::new();
        for (label, results) in &sets {
            for (name, curve, report) in results {
                for (g, r) in curve.points() {
                    curves.push(vec![
                        label.as_str().into(),
                        name.as_str().into(),
                        g.into(),
                        r.into(),
                        curve.layer().into(),
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                    ]);
                }
                reports.push(StimulusReport {
                    set: label,
                    stimulus: name,
                    report,
                });
            }
        }
        curves.write(&self.path("curves.csv"))?;
        write_json(
            &self.path("deviation.json"),
            &DeviationBundle {
                provenance: &self.provenance,
                layer: &layer,
                reports,
            },
        )?;

        let collect = |f: fn(&DeviationReport) -> f64| -> Vec<(String, Vec<f64>)> {
            sets.iter()
                .map(|(label, rs)| (label.clone(), rs.iter().map(|(_, _, r)| f(r)).collect()))
                .collect()
        };
        let summary = Summary {
            provenance: &self.provenance,
            layer: &layer,
            ttest: self.config.ttest,
            area: set_statistics(&collect(|r| r.area), self.config.ttest)?,
            normalized_area: set_statistics(&collect(|r| r.normalized_area), self.config.ttest)?,
        };
        write_json(&self.path("summary.json"), &summary)?;

        for (i, (label, results)) in sets.iter().enumerate() {
            let curves: Vec<&DissimilarityCurve> = results.iter().map(|(_, c, _)| c).collect();
            let svg = mean_curve_svg(label, &layer, &curves, PALETTE[i % PALETTE.len()])?;
            write_bytes(&self.path(&format!("mean_curve_{label}.svg")), svg.as_bytes())?;
        }
        Ok(())
    }

    fn dot_count(&self) -> Result<()> {
        let layer = self.analysis_layer()?;
        let spec = self.config.grid_spec()?;
        let order = self.config.dot_order();
        let sweep = dot_count_sequence(&spec, order)?;
        let curve = layer_curve(&self.model, &sweep, sweep.reference(), &layer)?;
        let fit = ols(curve.gammas(), curve.values())?;

        let mut table = Table::new(&["count", "R", "fit", "residual"]);
        let mut max_abs_residual = 0.0f64;
        for (k, r) in curve.points() {
            let p = fit.predict(k);
            max_abs_residual = max_abs_residual.max((r - p).abs());
            table.push(vec![(k as usize).into(), r.into(), p.into(), (r - p).into()]);
        }
        table.write(&self.path("dot_count.csv"))?;

        let r_max_count = curve.final_value().unwrap_or(0.0);
        let relative_max_residual = if r_max_count == 0.0 {
            0.0
        } else {
            max_abs_residual / r_max_count
        };
        write_json(
            &self.path("dot_count.json"),
            &DotCountReport {
                provenance: &self.provenance,
                layer: &layer,
                dot_order: order,
                sequence_length: sweep.len(),
                slope: fit.slope,
                intercept: fit.intercept,
                r_max_count,
                max_abs_residual,
                relative_max_residual,
            },
        )?;

        let pts: Vec<(f64, f64)> = curve.points().collect();
        let last = *curve.gammas().last().unwrap_or(&0.0);
        let mut plot = Plot::new(
            &format!("Dissimilarity vs white dots ({layer})"),
            "white dots",
            "R",
            (0.0, last),
            value_range(pts.iter().map(|p| p.1).chain([fit.predict(0.0), fit.predict(last)])),
        );
        plot.line(&[(0.0, fit.predict(0.0)), (last, fit.predict(last))], PALETTE[1]);
        plot.line(&pts, PALETTE[0]);
        plot.scatter(&pts, &vec![PALETTE[0].to_string(); pts.len()]);
        plot.legend("R", PALETTE[0]);
        plot.legend("least-squares line", PALETTE[1]);
        write_bytes(&self.path("dot_count.svg"), plot.render().as_bytes())
    }

    fn layer_propagation(&self) -> Result<()> {
        let layers = self.sweep_layers()?;
        let names: Vec<&str> = layers.iter().map(String::as_str).collect();
        let mut traces = Vec::new();
        for (label, spec) in self.grid_pair()? {
            let sweep = whiteness_sweep_with(&spec, self.config.levels)?;
            let reports = layer_curves(&self.model, &sweep, sweep.reference(), &names)?
                .iter()
                .map(DeviationReport::analyze)
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let fractions = if self.config.neuron_fractions {
                let recorded = NeuronSweep::record_layers(
                    &self.model,
                    &sweep,
                    sweep.reference(),
                    &names,
                    self.config.memory_budget_bytes(),
                )?;
                let mut out = Vec::with_capacity(recorded.len());
                for mut r in recorded {
                    let mut counter = SignificanceCounter::new(self.config.neuron_threshold);
                    r.for_each_curve(NEURON_CHUNK, |c| counter.push(&c))?;
                    out.push(Some(counter.finish()?));
                }
                out
            } else {
                vec![None; layers.len()]
            };
            traces.push(Trace {
                stimulus: label,
                layers: reports
                    .into_iter()
                    .zip(fractions)
                    .map(|(report, neurons)| LayerEntry { report, neurons })
                    .collect(),
            });
        }

        let mut header = vec!["layer".to_string()];
        for t in &traces {
            for col in ["gamma_max_r", "d", "normalized_d", "significant_fraction"] {
                header.push(format!("{}_{col}", t.stimulus));
            }
        }
        let mut table = Table::new(&header);
        for (i, layer) in layers.iter().enumerate() {
            let mut row: Vec<Cell> = vec![layer.as_str().into()];
            for t in &traces {
                let e = &t.layers[i];
                row.push(e.report.gamma_max_r.into());
                row.push(e.report.area.into());
                row.push(e.report.normalized_area.into());
                row.push(e.neurons.map(|n| n.fraction).into());
            }
            table.push(row);
        }
        table.write(&self.path("propagation.csv"))?;
        write_json(
            &self.path("propagation.json"),
            &PropagationBundle {
                provenance: &self.provenance,
                neuron_threshold: self.config.neuron_threshold,
                traces: &traces,
            },
        )?;

        let series: Vec<(String, Vec<f64>)> = traces
            .iter()
            .map(|t| {
                (
                    t.stimulus.to_string(),
                    t.layers.iter().map(|e| e.report.normalized_area).collect(),
                )
            })
            .collect();
        let mut plot = Plot::new(
            "Normalized deviation area per layer",
            "layer",
            "D / R(1)",
            (0.0, 1.0),
            value_range(series.iter().flat_map(|s| s.1.iter().copied()).chain([0.0])),
        );
        plot.bars(&layers, &series);
        write_bytes(&self.path("propagation.svg"), plot.render().as_bytes())
    }

    fn pca(&self) -> Result<()> {
        let layers = self.sweep_layers()?;
        let names: Vec<&str> = layers.iter().map(String::as_str).collect();
        for (label, spec) in self.grid_pair()? {
            let sweep = whiteness_sweep_with(&spec, self.config.levels)?;
            let curves = layer_curves(&self.model, &sweep, sweep.reference(), &names)?;
            let pca = pca_layer_curves(&curves)?;
            let pc1 = pca.pc1();
            let crowding = pc1_crowding(&pca.gammas, &pc1);

            let k = pca.components.len();
            let mut header = vec!["gamma".to_string()];
            header.extend((1..=k).map(|i| format!("pc{i}")));
            let mut table = Table::new(&header);
            for (g, row) in pca.gammas.iter().zip(&pca.projections) {
                let mut cells: Vec<Cell> = vec![(*g).into()];
                cells.extend(row.iter().map(|&v| v.into()));
                table.push(cells);
            }
            table.write(&self.path(&format!("pca_{label}.csv")))?;
            write_json(
                &self.path(&format!("pca_{label}.json")),
                &PcaBundle {
                    provenance: &self.provenance,
                    stimulus: label,
                    layers: &pca.layers,
                    gammas: &pca.gammas,
                    components: &pca.components,
                    singular_values: &pca.singular_values,
                    explained_variance_ratio: &pca.explained_variance_ratio,
                    crowding: &crowding,
                },
            )?;

            let pts: Vec<(f64, f64)> = pca
                .projections
                .iter()
                .map(|row| (row[0], row.get(1).copied().unwrap_or(0.0)))
                .collect();
            let colors: Vec<String> = pca.gammas.iter().map(|&g| ramp(g)).collect();
            let mut plot = Plot::new(
                &format!("Sweep levels in PC space ({label})"),
                "PC1",
                "PC2",
                value_range(pts.iter().map(|p| p.0)),
                value_range(pts.iter().map(|p| p.1)),
            );
            plot.line(&pts, "#bbbbbb");
            plot.scatter(&pts, &colors);
            plot.legend("gamma = 0", &ramp(0.0));
            plot.legend("gamma = 1", &ramp(1.0));
            write_bytes(&self.path(&format!("pca_{label}.svg")), plot.render().as_bytes())?;
        }
        Ok(())
    }
}

fn value_range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    vals.filter(|v| v.is_finite())
        .fold(None, |acc: Option<(f64, f64)>, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
        .unwrap_or((0.0, 1.0))
}

/// Mean curve across a set with a ±1 SEM band.
fn mean_curve_svg(label: &str, layer: &str, curves: &[&DissimilarityCurve], color: &str) -> Result<String> {
    let gammas = curves.first().map(|c| c.gammas().to_vec()).unwrap_or_default();
    let mut mean = Vec::with_capacity(gammas.len());
    let mut lower = Vec::with_capacity(gammas.len());
    let mut upper = Vec::with_capacity(gammas.len());
    for i in 0..gammas.len() {
        let vals: Vec<f64> = curves.iter().map(|c| c.values()[i]).collect();
        let ms = mean_sem(&vals)?;
        let sem = ms.sem.unwrap_or(0.0);
        mean.push(ms.mean);
        lower.push(ms.mean - sem);
        upper.push(ms.mean + sem);
    }
    let mut plot = Plot::new(
        &format!("Mean dissimilarity, {label} (n = {}, {layer})", curves.len()),
        "dot whiteness",
        "R",
        (0.0, 1.0),
        value_range(lower.iter().chain(&upper).copied()),
    );
    plot.band(&gammas, &lower, &upper, color);
    let pts: Vec<(f64, f64)> = gammas.iter().copied().zip(mean.iter().copied()).collect();
    plot.line(&pts, color);
    plot.legend(&format!("{label} mean ± SEM"), color);
    Ok(plot.render())
}

#[derive(Serialize)]
struct StimulusReport<'a> {
    set: &'a str,
    stimulus: &'a str,
    #[serde(flatten)]
    report: &'a DeviationReport,
}

#[derive(Serialize)]
struct DeviationBundle<'a> {
    provenance: &'a Provenance,
    layer: &'a str,
    reports: Vec<StimulusReport<'a>>,
}

#[derive(Serialize)]
struct Summary<'a> {
    provenance: &'a Provenance,
    layer: &'a str,
    ttest: TTestKind,
    /// Statistics of the deviation area D.
    area: SetStatistics,
    /// Statistics of D divided by R at full whiteness.
    normalized_area: SetStatistics,
}

#[derive(Serialize)]
struct DotCountReport<'a> {
    provenance: &'a Provenance,
    layer: &'a str,
    dot_order: DotOrder,
    sequence_length: usize,
    slope: f64,
    intercept: f64,
    r_max_count: f64,
    max_abs_residual: f64,
    relative_max_residual: f64,
}

#[derive(Serialize)]
struct LayerEntry {
    #[serde(flatten)]
    report: DeviationReport,
    neurons: Option<NeuronFraction>,
}

#[derive(Serialize)]
struct Trace {
    stimulus: &'static str,
    layers: Vec<LayerEntry>,
}

#[derive(Serialize)]
struct PropagationBundle<'a> {
    provenance: &'a Provenance,
    neuron_threshold: f64,
    traces: &'a [Trace],
}

#[derive(Serialize)]
struct PcaBundle<'a> {
    provenance: &'a Provenance,
    stimulus: &'a str,
    layers: &'a [String],
    gammas: &'a [f64],
    components: &'a [Vec<f64>],
    singular_values: &'a [f64],
    explained_variance_ratio: &'a [f64],
    crowding: &'a Crowding,
}

/// Loads, validates and runs the config at `path`.
pub fn run_config(path: &Path) -> Result<()> {
    Run::new(ExperimentConfig::load(path)?)?.execute()
}
