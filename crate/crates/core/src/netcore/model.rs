use std::collections::HashSet;
use std::sync::OnceLock;

use serde::Serialize;

use super::layers::{self, ConvParams, FcParams, PoolParams};
use super::{NetError, Result, Tensor};
use crate::imaging::{Image, CHANNELS};
use crate::INPUT_SIZE;

/// Shape of the network input: rows, cols, channels.
pub const INPUT_SHAPE: [usize; 3] = [INPUT_SIZE, INPUT_SIZE, CHANNELS];

/// Whiteness is scaled by this factor before mean subtraction.
pub const INPUT_SCALE: f64 = 255.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelOrder {
    Rgb,
    Bgr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerKind {
    Conv(ConvParams),
    Relu,
    MaxPool(PoolParams),
    Fc(FcParams),
    Softmax,
}

impl LayerKind {
    pub fn is_weighted(&self) -> bool {
        matches!(self, LayerKind::Conv(_) | LayerKind::Fc(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            LayerKind::Conv(_) => "conv",
            LayerKind::Relu => "relu",
            LayerKind::MaxPool(_) => "maxpool",
            LayerKind::Fc(_) => "fc",
            LayerKind::Softmax => "softmax",
        }
    }

    /// Dimensions of the weight tensor (empty for unweighted layers).
    pub fn weight_dims(&self) -> Vec<usize> {
        match self {
            LayerKind::Conv(p) => vec![p.out_channels, p.kernel_h, p.kernel_w, p.in_channels],
            LayerKind::Fc(p) => vec![p.out_features, p.in_features],
            _ => Vec::new(),
        }
    }

    pub fn bias_len(&self) -> usize {
        match self {
            LayerKind::Conv(p) => p.out_channels,
            LayerKind::Fc(p) => p.out_features,
            _ => 0,
        }
    }

    pub fn output_shape(&self, input: [usize; 3]) -> Result<[usize; 3]> {
        let [h, w, c] = input;
        let incompatible = |e: NetError| NetError::IncompatibleModel(e.to_string());
        match self {
            LayerKind::Conv(p) => {
                if p.in_channels != c {
                    return Err(NetError::IncompatibleModel(format!(
                        "convolution expects {} channels, input has {c}",
                        p.in_channels
                    )));
                }
                let (oh, ow) = p.output_dims(h, w).map_err(incompatible)?;
                Ok([oh, ow, p.out_channels])
            }
            LayerKind::Relu | LayerKind::Softmax => Ok(input),
            LayerKind::MaxPool(p) => {
                let (oh, ow) = p.output_dims(h, w).map_err(incompatible)?;
                Ok([oh, ow, c])
            }
            LayerKind::Fc(p) => {
                if h * w * c != p.in_features {
                    return Err(NetError::IncompatibleModel(format!(
                        "fully-connected layer expects {} inputs, previous layer yields {h}x{w}x{c}",
                        p.in_features
                    )));
                }
                Ok([1, 1, p.out_features])
            }
        }
    }
}

/// Output shape of every layer for a given input shape.
pub fn infer_shapes<'a>(
    input: [usize; 3],
    kinds: impl IntoIterator<Item = &'a LayerKind>,
) -> Result<Vec<[usize; 3]>> {
    let mut shape = input;
    kinds
        .into_iter()
        .map(|k| {
            shape = k.output_shape(shape)?;
            Ok(shape)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerDef {
    pub name: String,
    pub kind: LayerKind,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl LayerDef {
    pub fn unweighted(name: impl Into<String>, kind: LayerKind) -> Self {
        Self {
            name: name.into(),
            kind,
            weights: Vec::new(),
            bias: Vec::new(),
        }
    }

    pub fn weighted(name: impl Into<String>, kind: LayerKind, weights: Vec<f32>, bias: Vec<f32>) -> Self {
        Self {
            name: name.into(),
            kind,
            weights,
            bias,
        }
    }

    pub fn apply(&self, input: &Tensor) -> Result<Tensor> {
        match &self.kind {
            LayerKind::Conv(p) => layers::conv2d(input, p, &self.weights, &self.bias),
            LayerKind::Relu => Ok(layers::relu(input)),
            LayerKind::MaxPool(p) => layers::maxpool(input, p),
            LayerKind::Fc(p) => layers::fc(input, p, &self.weights, &self.bias),
            LayerKind::Softmax => Ok(layers::softmax(input)),
        }
    }
}

/// A validated feed-forward layer stack with its input convention.
#[derive(Debug, Clone)]
pub struct Model {
    channel_order: ChannelOrder,
    means: [f64; 3],
    layers: Vec<LayerDef>,
    shapes: Vec<[usize; 3]>,
    crc: OnceLock<u32>,
}

impl Model {
    pub fn new(channel_order: ChannelOrder, means: [f64; 3], layers: Vec<LayerDef>) -> Result<Self> {
        if layers.is_empty() {
            return Err(NetError::IncompatibleModel("model has no layers".into()));
        }
        let mut seen = HashSet::new();
        for layer in &layers {
            if layer.name.is_empty() || !seen.insert(layer.name.as_str()) {
                return Err(NetError::IncompatibleModel(format!(
                    "layer name {:?} is empty or repeated",
                    layer.name
                )));
            }
            let expected: usize = if layer.kind.is_weighted() {
                layer.kind.weight_dims().iter().product()
            } else {
                0
            };
            if layer.weights.len() != expected || layer.bias.len() != layer.kind.bias_len() {
                return Err(NetError::IncompatibleModel(format!(
                    "layer {} carries {} weights and {} biases, expected {expected} and {}",
                    layer.name,
                    layer.weights.len(),
                    layer.bias.len(),
                    layer.kind.bias_len()
                )));
            }
        }
        let shapes = infer_shapes(INPUT_SHAPE, layers.iter().map(|l| &l.kind))?;
        Ok(Self {
            channel_order,
            means,
            layers,
            shapes,
            crc: OnceLock::new(),
        })
    }

    pub(super) fn set_container_crc(&self, crc: u32) {
        let _ = self.crc.set(crc);
    }

    pub fn channel_order(&self) -> ChannelOrder {
        self.channel_order
    }

    pub fn means(&self) -> [f64; 3] {
        self.means
    }

    pub fn layers(&self) -> &[LayerDef] {
        &self.layers
    }

    pub fn layer_names(&self) -> impl Iterator<Item = &str> {
        self.layers.iter().map(|l| l.name.as_str())
    }

    pub fn layer_index(&self, name: &str) -> Option<usize> {
        self.layers.iter().position(|l| l.name == name)
    }

    /// Output shape of each layer, in network order.
    pub fn output_shapes(&self) -> &[[usize; 3]] {
        &self.shapes
    }

    pub fn weighted_layer_count(&self) -> usize {
        self.layers.iter().filter(|l| l.kind.is_weighted()).count()
    }

    /// CRC32 of the model's serialized container.
    pub fn container_crc(&self) -> u32 {
        *self.crc.get_or_init(|| crc32fast::hash(&super::container::to_bytes(self)))
    }
}

/// Maps whiteness to `255 * v - mean[c]` in the model's channel order.
pub fn preprocess(img: &Image, model: &Model) -> Result<Tensor> {
    let [h, w, c] = INPUT_SHAPE;
    if img.width() != w || img.height() != h {
        return Err(NetError::InvalidInput(format!(
            "model expects a {w}x{h} image, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let means = model.means;
    let order: [usize; 3] = match model.channel_order {
        ChannelOrder::Rgb => [0, 1, 2],
        ChannelOrder::Bgr => [2, 1, 0],
    };
    let mut data = Vec::with_capacity(h * w * c);
    for px in img.data().chunks_exact(CHANNELS) {
        for (k, &src) in order.iter().enumerate() {
            data.push(px[src] * INPUT_SCALE - means[k]);
        }
    }
    Tensor::new(h, w, c, data)
}

/// Outputs of every layer for one forward pass, in network order.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSet {
    entries: Vec<(String, Tensor)>,
}

impl ActivationSet {
    pub fn get(&self, layer: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == layer).map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last(&self) -> Option<&Tensor> {
        self.entries.last().map(|(_, t)| t)
    }
}

/// Runs a forward pass and hands each layer output to `visit` without retaining it.
pub fn forward_visit(model: &Model, img: &Image, mut visit: impl FnMut(usize, &str, &Tensor)) -> Result<()> {
    let mut x = preprocess(img, model)?;
    for (i, layer) in model.layers.iter().enumerate() {
        x = layer.apply(&x).map_err(|e| match e {
            NetError::IncompatibleShape(m) | NetError::InvalidGeometry(m) => {
                NetError::IncompatibleShape(format!("layer {}: {m}", layer.name))
            }
            other => other,
        })?;
        visit(i, &layer.name, &x);
    }
    Ok(())
}

pub fn forward(model: &Model, img: &Image) -> Result<ActivationSet> {
    let mut entries = Vec::with_capacity(model.layers.len());
    forward_visit(model, img, |_, name, t| entries.push((name.to_string(), t.clone())))?;
    Ok(ActivationSet { entries })
}
