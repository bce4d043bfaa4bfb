//! Writes the small deterministic models used by the test suites.
//!
//! Usage: `cargo run -p gridprobe-core --example make_fixtures -- <out_dir>`

use std::path::PathBuf;

use gridprobe_core::netcore::{
    save_model, ChannelOrder, ConvParams, FcParams, FlattenOrder, LayerDef, LayerKind, Model, PoolParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rng: &mut ChaCha8Rng, n: usize, scale: f32) -> Vec<f32> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn conv(
    rng: &mut ChaCha8Rng,
    name: &str,
    k: usize,
    stride: usize,
    padding: usize,
    cin: usize,
    cout: usize,
) -> LayerDef {
    let p = ConvParams {
        kernel_h: k,
        kernel_w: k,
        stride,
        padding,
        in_channels: cin,
        out_channels: cout,
    };
    let scale = 1.0 / ((k * k * cin) as f32).sqrt();
    LayerDef::weighted(name, LayerKind::Conv(p), random(rng, p.weight_len(), scale), random(rng, cout, 0.1))
}

fn fc(rng: &mut ChaCha8Rng, name: &str, inputs: usize, outputs: usize, flatten: FlattenOrder) -> LayerDef {
    let p = FcParams {
        in_features: inputs,
        out_features: outputs,
        flatten,
    };
    let scale = 1.0 / (inputs as f32).sqrt();
    LayerDef::weighted(name, LayerKind::Fc(p), random(rng, p.weight_len(), scale), random(rng, outputs, 0.1))
}

/// conv1 (8x8 stride 8) -> relu1 -> fc1.
fn tiny() -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let layers = vec![
        conv(&mut rng, "conv1", 8, 8, 0, 3, 2),
        LayerDef::unweighted("relu1", LayerKind::Relu),
        fc(&mut rng, "fc1", 28 * 28 * 2, 10, FlattenOrder::Hwc),
    ];
    Model::new(ChannelOrder::Rgb, [120.0, 115.0, 105.0], layers).unwrap()
}

/// A 1x1 convolution passing the preprocessed input through unchanged.
fn identity() -> Model {
    let p = ConvParams {
        kernel_h: 1,
        kernel_w: 1,
        stride: 1,
        padding: 0,
        in_channels: 3,
        out_channels: 3,
    };
    let mut weights = vec![0.0f32; p.weight_len()];
    for c in 0..3 {
        weights[c * 3 + c] = 1.0;
    }
    let layers = vec![LayerDef::weighted("identity", LayerKind::Conv(p), weights, vec![0.0; 3])];
    Model::new(ChannelOrder::Rgb, [0.0; 3], layers).unwrap()
}

/// The identity layer followed by a ReLU, which is also the identity on non-negative input.
fn identity_stack() -> Model {
    let mut layers = identity().layers().to_vec();
    layers.push(LayerDef::unweighted("identity_relu", LayerKind::Relu));
    Model::new(ChannelOrder::Rgb, [0.0; 3], layers).unwrap()
}

/// A scaled-down VGG-style stack with every layer kind.
fn small() -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pool = PoolParams { window: 2, stride: 2 };
    let layers = vec![
        conv(&mut rng, "conv1", 4, 4, 0, 3, 4),
        LayerDef::unweighted("relu1", LayerKind::Relu),
        LayerDef::unweighted("pool1", LayerKind::MaxPool(pool)),
        conv(&mut rng, "conv2", 3, 1, 1, 4, 8),
        LayerDef::unweighted("relu2", LayerKind::Relu),
        LayerDef::unweighted("pool2", LayerKind::MaxPool(pool)),
        fc(&mut rng, "fc1", 14 * 14 * 8, 16, FlattenOrder::Chw),
        LayerDef::unweighted("relu3", LayerKind::Relu),
        fc(&mut rng, "fc2", 16, 10, FlattenOrder::Hwc),
        LayerDef::unweighted("prob", LayerKind::Softmax),
    ];
    Model::new(ChannelOrder::Bgr, [103.939, 116.779, 123.68], layers).unwrap()
}

fn main() {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/fixtures".into()));
    std::fs::create_dir_all(&out).expect("create output directory");
    for (name, model) in [
        ("tiny", tiny()),
        ("identity", identity()),
        ("identity_stack", identity_stack()),
        ("small", small()),
    ] {
        let path = out.join(format!("{name}.nnwc"));
        save_model(&model, &path).expect("write container");
        println!("{} {:08x} {} layers", path.display(), model.container_crc(), model.layers().len());
    }
}
