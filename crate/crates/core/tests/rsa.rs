use gridprobe_core::imaging::Image;
use gridprobe_core::netcore::{forward, load_model, Tensor};
use gridprobe_core::rsa::*;
use gridprobe_core::stimuli::{whiteness_sweep_with, GridSpec, Sweep};
use gridprobe_core::INPUT_SIZE;
use proptest::prelude::*;

fn fixture(name: &str) -> String {
    format!("{}/../../data/fixtures/{name}.nnwc", env!("CARGO_MANIFEST_DIR"))
}

fn pair(max: usize) -> impl Strategy<Value = (Tensor, Tensor, Tensor)> {
    (1..=max, 1..=max, 1..=max).prop_flat_map(|(m, n, k)| {
        let v = move || prop::collection::vec(-10.0f64..10.0, m * n * k);
        (v(), v(), v()).prop_map(move |(a, b, c)| {
            (
                Tensor::new(m, n, k, a).unwrap(),
                Tensor::new(m, n, k, b).unwrap(),
                Tensor::new(m, n, k, c).unwrap(),
            )
        })
    })
}

proptest! {
    #[test]
    fn scaled_l1_metric((a, b, c) in pair(5)) {
        let ab = dissimilarity(&a, &b).unwrap();
        prop_assert_eq!(ab, dissimilarity(&b, &a).unwrap());
        prop_assert_eq!(dissimilarity(&a, &a).unwrap(), 0.0);
        let bc = dissimilarity(&b, &c).unwrap();
        let ac = dissimilarity(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert!(ab >= 0.0);
    }
}

/// Random-noise sweep: each level perturbs a random base image.
fn noise_sweep(levels: usize, seed: u64) -> Sweep {
    let mut s = seed;
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    let n = INPUT_SIZE * INPUT_SIZE * 3;
    let base: Vec<f64> = (0..n).map(|_| next()).collect();
    let images = (0..levels)
        .map(|l| {
            let amount = l as f64 / (levels - 1) as f64;
            let data = base.iter().map(|&v| (v + amount * (next() - 0.5)).clamp(0.0, 1.0)).collect();
            Image::from_data(INPUT_SIZE, INPUT_SIZE, data).unwrap()
        })
        .collect();
    Sweep {
        levels: gridprobe_core::stimuli::uniform_levels(levels),
        images,
    }
}

#[test]
fn neuron_curves_match_recomputation() {
    let model = load_model(fixture("tiny")).unwrap();
    let sweep = noise_sweep(5, 7);
    let reference = sweep.reference().clone();
    let stored: Vec<_> = sweep.images.iter().map(|img| forward(&model, img).unwrap()).collect();
    let ref_acts = forward(&model, &reference).unwrap();
    for layer in ["conv1", "relu1", "fc1"] {
        let curves = neuron_curves(&model, &sweep, &reference, layer).unwrap();
        let r = ref_acts.get(layer).unwrap();
        assert_eq!(curves.len(), r.len());
        for (flat, curve) in curves.iter().enumerate() {
            let (i, j, k) = curve.neuron().unwrap();
            assert_eq!(r.index(i, j, k), flat);
            for (l, acts) in stored.iter().enumerate() {
                let a = acts.get(layer).unwrap();
                assert_eq!(curve.values()[l], (a.data()[flat] - r.data()[flat]).abs());
            }
        }
        // The layer curve is the mean of the neuron curves.
        let layer_curve = layer_curve(&model, &sweep, &reference, layer).unwrap();
        for l in 0..sweep.len() {
            let mean = curves.iter().map(|c| c.values()[l]).sum::<f64>() / curves.len() as f64;
            assert!((mean - layer_curve.values()[l]).abs() < 1e-9);
        }
        assert_eq!(layer_curve.values()[0], 0.0);
    }
}

#[test]
fn spilled_storage_matches_memory() {
    let model = load_model(fixture("tiny")).unwrap();
    let sweep = noise_sweep(4, 11);
    let reference = sweep.reference().clone();
    let mut mem = NeuronSweep::record(&model, &sweep, &reference, "conv1", usize::MAX).unwrap();
    let mut disk = NeuronSweep::record(&model, &sweep, &reference, "conv1", 1024).unwrap();
    assert!(!mem.is_spilled());
    assert!(disk.is_spilled());
    let mut a = Vec::new();
    let mut b = Vec::new();
    mem.for_each_curve(1000, |c| a.push(c)).unwrap();
    disk.for_each_curve(333, |c| b.push(c)).unwrap();
    assert_eq!(a, b);
    assert_eq!(mem.mean_curve().unwrap(), disk.mean_curve().unwrap());
}

#[test]
fn constant_neuron_has_zero_curve() {
    // pool-free network: a fully black image and its copy never change anything.
    let model = load_model(fixture("tiny")).unwrap();
    let black = Image::gray(INPUT_SIZE, INPUT_SIZE, 0.0).unwrap();
    let sweep = Sweep {
        levels: vec![0.0, 0.5, 1.0],
        images: vec![black.clone(), black.clone(), black.clone()],
    };
    let curves = neuron_curves(&model, &sweep, &black, "fc1").unwrap();
    assert!(curves.iter().all(|c| c.values().iter().all(|&v| v == 0.0)));
}

#[test]
fn identity_model_curve_is_proportional_to_gamma() {
    let model = load_model(fixture("identity")).unwrap();
    let sweep = whiteness_sweep_with(&GridSpec::default(), 21).unwrap();
    let curve = layer_curve(&model, &sweep, sweep.reference(), "identity").unwrap();
    let slope = curve.values()[20] / curve.gammas()[20];
    assert!(slope > 0.0);
    for (g, r) in curve.points() {
        assert!((r - slope * g).abs() <= 1e-9 * slope);
    }
}

#[test]
fn unknown_layer() {
    let model = load_model(fixture("tiny")).unwrap();
    let sweep = noise_sweep(2, 1);
    assert!(matches!(
        layer_curve(&model, &sweep, sweep.reference(), "fc9"),
        Err(RsaError::UnknownLayer(_))
    ));
    assert!(matches!(
        neuron_curves(&model, &sweep, sweep.reference(), "conv7"),
        Err(RsaError::UnknownLayer(_))
    ));
}
