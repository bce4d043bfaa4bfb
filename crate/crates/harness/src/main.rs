use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gridprobe::emit::write_json;
use gridprobe::{configure_threads, run_config, HarnessError, Result};
use gridprobe_core::imaging::{load_image, resize, save_image};
use gridprobe_core::netcore::{forward_visit, load_model, LayerKind, Model};
use gridprobe_core::rsa::RsaError;
use gridprobe_core::stimuli::{render_canvas, render_grid, GridSpec};
use gridprobe_core::INPUT_SIZE;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "gridprobe", version, about = "Scintillating-grid probes of convolutional networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render a grid spec to an image (PNG by extension, else 16-bit PPM).
    Render {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the dot whiteness.
        #[arg(long)]
        gamma: Option<f64>,
        /// Write the full-resolution canvas instead of the network input.
        #[arg(long)]
        canvas: bool,
    },
    /// Print a JSON summary of a model container.
    Inspect {
        #[arg(long)]
        model: PathBuf,
        /// Run this image through the model.
        #[arg(long, requires = "layer")]
        image: Option<PathBuf>,
        /// Layer whose activation is reported.
        #[arg(long, requires = "image")]
        layer: Option<String>,
        /// Write the activation here instead of stdout.
        #[arg(long, requires = "image")]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct LayerSummary<'a> {
    name: &'a str,
    #[serde(flatten)]
    kind: &'a LayerKind,
    output_shape: [usize; 3],
    weight_dims: Vec<usize>,
    parameters: usize,
}

#[derive(Serialize)]
struct ModelSummary<'a> {
    container_crc32: String,
    channel_order: gridprobe_core::netcore::ChannelOrder,
    means: [f64; 3],
    weighted_layers: usize,
    layers: Vec<LayerSummary<'a>>,
}

fn summarize(model: &Model) -> ModelSummary<'_> {
    ModelSummary {
        container_crc32: format!("{:08x}", model.container_crc()),
        channel_order: model.channel_order(),
        means: model.means(),
        weighted_layers: model.weighted_layer_count(),
        layers: model
            .layers()
            .iter()
            .zip(model.output_shapes())
            .map(|(l, &output_shape)| LayerSummary {
                name: &l.name,
                kind: &l.kind,
                output_shape,
                weight_dims: l.kind.weight_dims(),
                parameters: l.weights.len() + l.bias.len(),
            })
            .collect(),
    }
}

#[derive(Serialize)]
struct Activation<'a> {
    layer: &'a str,
    /// Rows, columns, channels; values are in that order.
    shape: [usize; 3],
    values: &'a [f64],
}

fn to_stdout<T: Serialize>(value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(|source| HarnessError::Json {
        path: "<stdout>".into(),
        source,
    })?;
    println!("{s}");
    Ok(())
}

fn inspect(model: PathBuf, image: Option<PathBuf>, layer: Option<String>, out: Option<PathBuf>) -> Result<()> {
    let model = load_model(&model)?;
    let (Some(image), Some(layer)) = (image, layer) else {
        return to_stdout(&summarize(&model));
    };
    let index = model
        .layer_index(&layer)
        .ok_or_else(|| RsaError::UnknownLayer(layer.clone()))?;
    let mut img = load_image(&image)?;
    if (img.width(), img.height()) != (INPUT_SIZE, INPUT_SIZE) {
        img = resize(&img, INPUT_SIZE, INPUT_SIZE)?;
    }
    let mut captured = None;
    forward_visit(&model, &img, |i, _, t| {
        if i == index {
            captured = Some(t.clone());
        }
    })?;
    let t = captured.expect("forward visits every layer");
    let act = Activation {
        layer: &layer,
        shape: t.shape(),
        values: t.data(),
    };
    match out {
        Some(p) => write_json(&p, &act),
        None => to_stdout(&act),
    }
}

fn render(spec: PathBuf, out: PathBuf, gamma: Option<f64>, canvas: bool) -> Result<()> {
    let mut spec = GridSpec::load(&spec)?;
    if let Some(g) = gamma {
        spec.dot_whiteness = g;
    }
    let img = if canvas { render_canvas(&spec)? } else { render_grid(&spec)? };
    save_image(&img, &out)?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Run { config } => run_config(&config),
        Command::Render {
            spec,
            out,
            gamma,
            canvas,
        } => render(spec, out, gamma, canvas),
        Command::Inspect {
            model,
            image,
            layer,
            out,
        } => inspect(model, image, layer, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({"error": {"kind": e.kind(), "message": e.to_string()}});
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}

