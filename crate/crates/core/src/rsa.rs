//! Representational dissimilarity between activations of a sweep and its
//! reference image, at whole-layer and single-neuron granularity.

use std::fs::File;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::imaging::Image;
use crate::netcore::{forward_visit, Model, NetError, Tensor};
use crate::stimuli::Sweep;

#[derive(Debug, Error)]
pub enum RsaError {
    #[error("shape {left:?} does not match shape {right:?}")]
    IncompatibleShape { left: [usize; 3], right: [usize; 3] },
    #[error("model has no layer named {0:?}")]
    UnknownLayer(String),
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("spill storage: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RsaError>;

/// Mean absolute difference between two equally shaped tensors.
pub fn dissimilarity(a: &Tensor, b: &Tensor) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(RsaError::IncompatibleShape {
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(mean_abs_diff(a.data(), b.data()))
}

fn mean_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    sum / a.len() as f64
}

/// R as a function of the sweep variable for one layer or one neuron.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DissimilarityCurve {
    gammas: Vec<f64>,
    values: Vec<f64>,
    layer: String,
    neuron: Option<(usize, usize, usize)>,
}

impl DissimilarityCurve {
    pub fn new(
        gammas: Vec<f64>,
        values: Vec<f64>,
        layer: impl Into<String>,
        neuron: Option<(usize, usize, usize)>,
    ) -> Result<Self> {
        if gammas.len() != values.len() {
            return Err(RsaError::InvalidCurve(format!(
                "{} gamma values but {} R values",
                gammas.len(),
                values.len()
            )));
        }
        if gammas.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(RsaError::InvalidCurve("gamma values must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || gammas.iter().any(|g| !g.is_finite()) {
            return Err(RsaError::InvalidCurve("values must be finite and R nonnegative".into()));
        }
        Ok(Self {
            gammas,
            values,
            layer: layer.into(),
            neuron,
        })
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn layer(&self) -> &str {
        &self.layer
    }

    pub fn neuron(&self) -> Option<(usize, usize, usize)> {
        self.neuron
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    /// R at the last sample, i.e. at the fully white end of a whiteness sweep.
    pub fn final_value(&self) -> Option<f64> {
        self.values.last().copied()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.gammas.iter().copied().zip(self.values.iter().copied())
    }

    /// Same curve with every R multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.gammas.clone(),
            self.values.iter().map(|v| v * c).collect(),
            self.layer.clone(),
            self.neuron,
        )
    }
}

fn check_layers(model: &Model, layers: &[&str]) -> Result<Vec<usize>> {
    layers
        .iter()
        .map(|name| model.layer_index(name).ok_or_else(|| RsaError::UnknownLayer(name.to_string())))
        .collect()
}

/// Runs one forward pass and keeps the outputs of the listed layers.
fn capture(model: &Model, img: &Image, indices: &[usize]) -> Result<Vec<Tensor>> {
    let mut out: Vec<Option<Tensor>> = vec![None; indices.len()];
    forward_visit(model, img, |i, _, t| {
        for (slot, &want) in out.iter_mut().zip(indices) {
            if want == i {
                *slot = Some(t.clone());
            }
        }
    })?;
    Ok(out.into_iter().map(|t| t.expect("every index names a layer")).collect())
}

/// Activations of a reference image at a fixed set of layers, computed once.
#[derive(Debug, Clone)]
pub struct Reference {
    layers: Vec<String>,
    indices: Vec<usize>,
    activations: Vec<Tensor>,
}

impl Reference {
    pub fn capture(model: &Model, img: &Image, layers: &[&str]) -> Result<Self> {
        let indices = check_layers(model, layers)?;
        let activations = capture(model, img, &indices)?;
        Ok(Self {
            layers: layers.iter().map(|s| s.to_string()).collect(),
            indices,
            activations,
        })
    }

    pub fn layers(&self) -> &[String] {
        &self.layers
    }

    pub fn activation(&self, layer: &str) -> Option<&Tensor> {
        self.layers.iter().position(|l| l == layer).map(|i| &self.activations[i])
    }

    /// R of `img` against the reference at every captured layer.
    pub fn dissimilarities(&self, model: &Model, img: &Image) -> Result<Vec<f64>> {
        let mut out: Vec<Result<f64>> = (0..self.indices.len()).map(|_| Ok(0.0)).collect();
        forward_visit(model, img, |i, _, t| {
            for ((slot, &want), r) in out.iter_mut().zip(&self.indices).zip(&self.activations) {
                if want == i {
                    *slot = dissimilarity(t, r);
                }
            }
        })?;
        out.into_iter().collect()
    }
}

/// Curves for several layers from a single pass over the sweep.
///
/// Forward passes for different sweep images run concurrently; each R is
/// accumulated sequentially, so the result does not depend on thread count.
pub fn layer_curves(model: &Model, sweep: &Sweep, reference: &Image, layers: &[&str]) -> Result<Vec<DissimilarityCurve>> {
    let reference = Reference::capture(model, reference, layers)?;
    let rows: Vec<Vec<f64>> = sweep
        .images
        .par_iter()
        .map(|img| reference.dissimilarities(model, img))
        .collect::<Result<_>>()?;
    layers
        .iter()
        .enumerate()
        .map(|(li, name)| {
            DissimilarityCurve::new(sweep.levels.clone(), rows.iter().map(|r| r[li]).collect(), *name, None)
        })
        .collect()
}

pub fn layer_curve(model: &Model, sweep: &Sweep, reference: &Image, layer: &str) -> Result<DissimilarityCurve> {
    Ok(layer_curves(model, sweep, reference, &[layer])?.remove(0))
}

/// Curves for every layer of the model, in network order.
pub fn all_layer_curves(model: &Model, sweep: &Sweep, reference: &Image) -> Result<Vec<DissimilarityCurve>> {
    let names: Vec<&str> = model.layer_names().collect();
    layer_curves(model, sweep, reference, &names)
}

enum Storage {
    Memory(Vec<f64>),
    Spilled(File),
}

/// Per-neuron absolute differences `|a - ref|` for every sweep level of one
/// layer, held in memory or in an anonymous temporary file depending on a
/// byte budget. Rows are sweep levels; columns are neurons in tensor order.
pub struct NeuronSweep {
    layer: String,
    gammas: Vec<f64>,
    shape: [usize; 3],
    storage: Storage,
}

enum Sink {
    Memory(Vec<f64>),
    Spill(BufWriter<File>),
}

impl NeuronSweep {
    pub fn record(model: &Model, sweep: &Sweep, reference: &Image, layer: &str, budget_bytes: usize) -> Result<Self> {
        Ok(Self::record_layers(model, sweep, reference, &[layer], budget_bytes)?.remove(0))
    }

    /// Records several layers from one pass over the sweep.
    ///
    /// Layers are kept in memory, in the given order, while their combined
    /// size fits `budget_bytes`; the rest are written to temporary files.
    pub fn record_layers(
        model: &Model,
        sweep: &Sweep,
        reference: &Image,
        layers: &[&str],
        budget_bytes: usize,
    ) -> Result<Vec<Self>> {
        let indices = check_layers(model, layers)?;
        let references = capture(model, reference, &indices)?;
        let levels = sweep.len();
        let mut used = 0usize;
        let mut sinks = Vec::with_capacity(layers.len());
        for r in &references {
            let bytes = r.len().saturating_mul(levels).saturating_mul(8);
            if used.saturating_add(bytes) <= budget_bytes {
                used += bytes;
                sinks.push(Sink::Memory(Vec::with_capacity(r.len() * levels)));
            } else {
                sinks.push(Sink::Spill(BufWriter::new(tempfile::tempfile()?)));
            }
        }

        // Bound the number of in-flight rows by the budget as well.
        let image_bytes: usize = references.iter().map(|r| r.len() * 8).sum();
        let batch = rayon::current_num_threads()
            .min(budget_bytes.saturating_sub(used) / image_bytes.max(1))
            .max(1);
        for imgs in sweep.images.chunks(batch) {
            let rows: Vec<Vec<Vec<f64>>> = imgs
                .par_iter()
                .map(|img| {
                    let acts = capture(model, img, &indices)?;
                    Ok(acts
                        .iter()
                        .zip(&references)
                        .map(|(a, r)| a.data().iter().zip(r.data()).map(|(x, y)| (x - y).abs()).collect())
                        .collect())
                })
                .collect::<Result<_>>()?;
            for per_layer in rows {
                for (row, sink) in per_layer.into_iter().zip(sinks.iter_mut()) {
                    match sink {
                        Sink::Memory(data) => data.extend_from_slice(&row),
                        Sink::Spill(w) => {
                            for v in row {
                                w.write_all(&v.to_le_bytes())?;
                            }
                        }
                    }
                }
            }
        }

        sinks
            .into_iter()
            .zip(layers)
            .zip(&indices)
            .map(|((sink, name), &index)| {
                let storage = match sink {
                    Sink::Memory(data) => Storage::Memory(data),
                    Sink::Spill(w) => Storage::Spilled(w.into_inner().map_err(|e| e.into_error())?),
                };
                Ok(Self {
                    layer: name.to_string(),
                    gammas: sweep.levels.clone(),
                    shape: model.output_shapes()[index],
                    storage,
                })
            })
            .collect()
    }

    pub fn layer(&self) -> &str {
        &self.layer
    }

    pub fn neuron_count(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_spilled(&self) -> bool {
        matches!(self.storage, Storage::Spilled(_))
    }

    fn neuron_index(&self, flat: usize) -> (usize, usize, usize) {
        let [_, cols, channels] = self.shape;
        (flat / (cols * channels), (flat / channels) % cols, flat % channels)
    }

    /// Loads neurons `start..start+len` as a level-major block.
    fn read_block(&mut self, start: usize, len: usize, buf: &mut Vec<f64>) -> Result<()> {
        let n = self.neuron_count();
        buf.clear();
        match &mut self.storage {
            Storage::Memory(data) => {
                for level in 0..self.gammas.len() {
                    buf.extend_from_slice(&data[level * n + start..level * n + start + len]);
                }
            }
            Storage::Spilled(file) => {
                let mut bytes = vec![0u8; len * 8];
                for level in 0..self.gammas.len() {
                    file.seek(SeekFrom::Start(((level * n + start) * 8) as u64))?;
                    file.read_exact(&mut bytes)?;
                    buf.extend(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())));
                }
            }
        }
        Ok(())
    }

    /// Streams every neuron curve in tensor order, `chunk` neurons at a time.
    pub fn for_each_curve(&mut self, chunk: usize, mut f: impl FnMut(DissimilarityCurve)) -> Result<()> {
        let n = self.neuron_count();
        let levels = self.gammas.len();
        let chunk = chunk.max(1);
        let mut buf = Vec::new();
        let mut start = 0;
        while start < n {
            let len = chunk.min(n - start);
            self.read_block(start, len, &mut buf)?;
            for j in 0..len {
                let values = (0..levels).map(|l| buf[l * len + j]).collect();
                let curve = DissimilarityCurve::new(
                    self.gammas.clone(),
                    values,
                    self.layer.clone(),
                    Some(self.neuron_index(start + j)),
                )?;
                f(curve);
            }
            start += len;
        }
        Ok(())
    }

    /// Layer R at each level, recovered as the mean of per-neuron terms.
    pub fn mean_curve(&mut self) -> Result<DissimilarityCurve> {
        let n = self.neuron_count();
        let levels = self.gammas.len();
        let mut sums = vec![0.0; levels];
        let mut buf = Vec::new();
        let chunk = 1 << 16;
        let mut start = 0;
        while start < n {
            let len = chunk.min(n - start);
            self.read_block(start, len, &mut buf)?;
            for (l, s) in sums.iter_mut().enumerate() {
                *s += buf[l * len..(l + 1) * len].iter().sum::<f64>();
            }
            start += len;
        }
        let values = sums.into_iter().map(|s| if n == 0 { 0.0 } else { s / n as f64 }).collect();
        DissimilarityCurve::new(self.gammas.clone(), values, self.layer.clone(), None)
    }
}

/// Every neuron curve of a layer, held in memory.
pub fn neuron_curves(model: &Model, sweep: &Sweep, reference: &Image, layer: &str) -> Result<Vec<DissimilarityCurve>> {
    let mut recorded = NeuronSweep::record(model, sweep, reference, layer, usize::MAX)?;
    let mut out = Vec::with_capacity(recorded.neuron_count());
    recorded.for_each_curve(4096, |c| out.push(c))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: [usize; 3], data: Vec<f64>) -> Tensor {
        Tensor::new(shape[0], shape[1], shape[2], data).unwrap()
    }

    #[test]
    fn simple_values() {
        let a = Tensor::flat(vec![1.0, 2.0, 3.0]);
        let b = Tensor::flat(vec![0.0; 3]);
        assert_eq!(dissimilarity(&a, &b).unwrap(), 2.0);
        assert_eq!(dissimilarity(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn shape_mismatch() {
        let a = t([1, 2, 2], vec![0.0; 4]);
        let b = t([2, 1, 2], vec![0.0; 4]);
        assert!(matches!(dissimilarity(&a, &b), Err(RsaError::IncompatibleShape { .. })));
    }

    #[test]
    fn curve_validation() {
        assert!(DissimilarityCurve::new(vec![0.0, 0.5], vec![0.0], "x", None).is_err());
        assert!(DissimilarityCurve::new(vec![0.0, 0.0], vec![0.0, 1.0], "x", None).is_err());
        assert!(DissimilarityCurve::new(vec![0.0, 1.0], vec![0.0, -1.0], "x", None).is_err());
        let c = DissimilarityCurve::new(vec![0.0, 1.0], vec![0.0, 2.0], "x", None).unwrap();
        assert_eq!(c.final_value(), Some(2.0));
        assert_eq!(c.scaled(0.5).unwrap().values(), &[0.0, 1.0]);
    }
}
