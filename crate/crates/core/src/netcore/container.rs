//! NNWC weight container.
//!
//! All integers are little-endian.
//!
//! ```text
//! header
//!   4 bytes   magic "NNWC"
//!   u32       version (1)
//!   u8        channel order: 0 = RGB, 1 = BGR
//!   3 x f64   per-channel means, in model channel order
//!   u32       layer count
//! layer record (repeated)
//!   u16       name length, then that many bytes of UTF-8
//!   u8        kind: 0 conv, 1 relu, 2 maxpool, 3 fc, 4 softmax
//!   params    conv:    u32 kernel_h, kernel_w, stride, padding, in_channels, out_channels
//!             relu:    (none)
//!             maxpool: u32 window, stride
//!             fc:      u32 in_features, out_features; u8 flatten (1 = HWC, 2 = CHW)
//!             softmax: (none)
//!   u8        weight rank, then rank x u32 dims
//!             conv [out, kh, kw, in]; fc [out, in]; 0 for unweighted kinds
//!   payload   f32 weights (product of dims), then f32 biases (out channels)
//!   u32       CRC32 (IEEE) of this layer's payload bytes
//! ```
//!
//! The file ends after the last layer record. The fc flatten tag is
//! mandatory; a value other than 1 or 2 is rejected.

use std::path::Path;

use super::layers::{ConvParams, FcParams, FlattenOrder, PoolParams};
use super::model::{ChannelOrder, LayerDef, LayerKind, Model};
use super::{NetError, Result};

pub const MAGIC: &[u8; 4] = b"NNWC";
pub const VERSION: u32 = 1;

const KIND_CONV: u8 = 0;
const KIND_RELU: u8 = 1;
const KIND_MAXPOOL: u8 = 2;
const KIND_FC: u8 = 3;
const KIND_SOFTMAX: u8 = 4;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(NetError::CorruptContainer(format!(
                "truncated at byte {} (needed {n} more)",
                self.pos
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn read_kind(r: &mut Reader<'_>, name: &str) -> Result<LayerKind> {
    let tag = r.u8()?;
    Ok(match tag {
        KIND_CONV => LayerKind::Conv(ConvParams {
            kernel_h: r.usize()?,
            kernel_w: r.usize()?,
            stride: r.usize()?,
            padding: r.usize()?,
            in_channels: r.usize()?,
            out_channels: r.usize()?,
        }),
        KIND_RELU => LayerKind::Relu,
        KIND_MAXPOOL => LayerKind::MaxPool(PoolParams {
            window: r.usize()?,
            stride: r.usize()?,
        }),
        KIND_FC => {
            let in_features = r.usize()?;
            let out_features = r.usize()?;
            let flatten = match r.u8()? {
                1 => FlattenOrder::Hwc,
                2 => FlattenOrder::Chw,
                other => {
                    return Err(NetError::Format(format!(
                        "layer {name}: flatten order tag {other} is not 1 (HWC) or 2 (CHW)"
                    )))
                }
            };
            LayerKind::Fc(FcParams {
                in_features,
                out_features,
                flatten,
            })
        }
        KIND_SOFTMAX => LayerKind::Softmax,
        other => return Err(NetError::Format(format!("layer {name}: unknown kind {other}"))),
    })
}

/// Parses a container held in memory.
pub fn from_bytes(bytes: &[u8]) -> Result<Model> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r
        .take(4)
        .map_err(|_| NetError::Format("file too short for magic".into()))?;
    if magic != MAGIC {
        return Err(NetError::Format(format!("bad magic {magic:?}")));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(NetError::Format(format!("unsupported version {version}")));
    }
    let channel_order = match r.u8()? {
        0 => ChannelOrder::Rgb,
        1 => ChannelOrder::Bgr,
        other => return Err(NetError::Format(format!("unknown channel order tag {other}"))),
    };
    let means = [r.f64()?, r.f64()?, r.f64()?];
    let count = r.u32()?;

    let mut layers = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let name_len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| NetError::Format("layer name is not UTF-8".into()))?
            .to_string();
        let kind = read_kind(&mut r, &name)?;
        let rank = r.u8()? as usize;
        let dims = (0..rank).map(|_| r.usize()).collect::<Result<Vec<_>>>()?;
        if dims != kind.weight_dims() {
            return Err(NetError::IncompatibleModel(format!(
                "layer {name}: weight dims {dims:?} disagree with parameters {:?}",
                kind.weight_dims()
            )));
        }
        let n_weights: usize = if rank == 0 { 0 } else { dims.iter().product() };
        let n_bias = if rank == 0 { 0 } else { kind.bias_len() };
        let payload = r.take((n_weights + n_bias) * 4)?;
        let stored_crc = r.u32()?;
        let crc = crc32fast::hash(payload);
        if crc != stored_crc {
            return Err(NetError::CorruptContainer(format!(
                "layer {name}: payload CRC {crc:08x} does not match stored {stored_crc:08x}"
            )));
        }
        let mut values = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()));
        let weights: Vec<f32> = values.by_ref().take(n_weights).collect();
        let bias: Vec<f32> = values.collect();
        layers.push(LayerDef::weighted(name, kind, weights, bias));
    }
    if r.pos != bytes.len() {
        return Err(NetError::CorruptContainer(format!(
            "{} trailing bytes after the last layer",
            bytes.len() - r.pos
        )));
    }
    let model = Model::new(channel_order, means, layers)?;
    model.set_container_crc(crc32fast::hash(bytes));
    Ok(model)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| NetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_bytes(&bytes)
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

/// Serializes a model; `from_bytes(to_bytes(m))` reproduces `m`.
pub fn to_bytes(model: &Model) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(match model.channel_order() {
        ChannelOrder::Rgb => 0,
        ChannelOrder::Bgr => 1,
    });
    for m in model.means() {
        out.extend_from_slice(&m.to_le_bytes());
    }
    put_u32(&mut out, model.layers().len());
    for layer in model.layers() {
        out.extend_from_slice(&(layer.name.len() as u16).to_le_bytes());
        out.extend_from_slice(layer.name.as_bytes());
        match &layer.kind {
            LayerKind::Conv(p) => {
                out.push(KIND_CONV);
                for v in [p.kernel_h, p.kernel_w, p.stride, p.padding, p.in_channels, p.out_channels] {
                    put_u32(&mut out, v);
                }
            }
            LayerKind::Relu => out.push(KIND_RELU),
            LayerKind::MaxPool(p) => {
                out.push(KIND_MAXPOOL);
                put_u32(&mut out, p.window);
                put_u32(&mut out, p.stride);
            }
            LayerKind::Fc(p) => {
                out.push(KIND_FC);
                put_u32(&mut out, p.in_features);
                put_u32(&mut out, p.out_features);
                out.push(match p.flatten {
                    FlattenOrder::Hwc => 1,
                    FlattenOrder::Chw => 2,
                });
            }
            LayerKind::Softmax => out.push(KIND_SOFTMAX),
        }
        let dims = layer.kind.weight_dims();
        out.push(dims.len() as u8);
        for d in dims {
            put_u32(&mut out, d);
        }
        let start = out.len();
        for v in layer.weights.iter().chain(&layer.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let crc = crc32fast::hash(&out[start..]);
        out.extend_from_slice(&crc.to_le_bytes());
    }
    out
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_bytes(model)).map_err(|source| NetError::Io {
        path: path.display().to_string(),
        source,
    })
}
