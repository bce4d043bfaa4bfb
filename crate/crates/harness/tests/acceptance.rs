//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Every criterion is checked against an oracle written independently of
//! the library code, at its stated tolerance and time limit.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use gridprobe_core::deviation::{
    deviation_area, mean_sem, ols, pca_matrix, ttest_ind, ttest_ind_with, DeviationReport, TTestKind,
};
use gridprobe_core::netcore::{
    conv2d, fc, load_model, maxpool, relu, softmax, ConvParams, FcParams, FlattenOrder, PoolParams, Tensor,
};
use gridprobe_core::rsa::{dissimilarity, layer_curve, DissimilarityCurve};
use gridprobe_core::stimuli::{dot_count_sequence, uniform_levels, whiteness_sweep, DotOrder, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn random_tensor(rng: &mut ChaCha8Rng, h: usize, w: usize, c: usize) -> Tensor {
    let data = (0..h * w * c).map(|_| rng.random_range(-2.0..2.0)).collect();
    Tensor::new(h, w, c, data).unwrap()
}

fn random_f32(rng: &mut ChaCha8Rng, n: usize) -> Vec<f32> {
    (0..n).map(|_| rng.random_range(-1.0f32..1.0)).collect()
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let (h, w, c) = (rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(1..=8));
        let a = random_tensor(&mut rng, h, w, c);
        let b = random_tensor(&mut rng, h, w, c);
        let mut sum = 0.0;
        for i in 0..h {
            for j in 0..w {
                for k in 0..c {
                    sum += (a.at(i, j, k) - b.at(i, j, k)).abs();
                }
            }
        }
        let want = sum / (h * w * c) as f64;
        let got = dissimilarity(&a, &b).map_err(|e| format!("case {case}: {e}"))?;
        let err = (got - want).abs();
        worst = worst.max(err);
        check(err <= 1e-12, || format!("case {case} ({h}x{w}x{c}): got {got}, oracle {want}"))?;
    }
    Ok(format!("1000 pairs, max error {worst:.1e}"))
}

fn naive_conv(x: &Tensor, p: &ConvParams, w: &[f32], b: &[f32]) -> Vec<f64> {
    let oh = (x.rows() + 2 * p.padding - p.kernel_h) / p.stride + 1;
    let ow = (x.cols() + 2 * p.padding - p.kernel_w) / p.stride + 1;
    let mut out = Vec::new();
    for i in 0..oh {
        for j in 0..ow {
            for o in 0..p.out_channels {
                let mut acc = b[o] as f64;
                for ki in 0..p.kernel_h {
                    for kj in 0..p.kernel_w {
                        let r = (i * p.stride + ki) as isize - p.padding as isize;
                        let s = (j * p.stride + kj) as isize - p.padding as isize;
                        if r < 0 || s < 0 || r >= x.rows() as isize || s >= x.cols() as isize {
                            continue;
                        }
                        for ch in 0..x.channels() {
                            let wi = ((o * p.kernel_h + ki) * p.kernel_w + kj) * x.channels() + ch;
                            acc += w[wi] as f64 * x.at(r as usize, s as usize, ch);
                        }
                    }
                }
                out.push(acc);
            }
        }
    }
    out
}

fn naive_pool(x: &Tensor, p: &PoolParams) -> Vec<f64> {
    let oh = (x.rows() - p.window) / p.stride + 1;
    let ow = (x.cols() - p.window) / p.stride + 1;
    let mut out = Vec::new();
    for i in 0..oh {
        for j in 0..ow {
            for k in 0..x.channels() {
                let mut m = f64::NEG_INFINITY;
                for di in 0..p.window {
                    for dj in 0..p.window {
                        m = m.max(x.at(i * p.stride + di, j * p.stride + dj, k));
                    }
                }
                out.push(m);
            }
        }
    }
    out
}

fn naive_fc(x: &Tensor, p: &FcParams, w: &[f32], b: &[f32]) -> Vec<f64> {
    let (h, wd, c) = (x.rows(), x.cols(), x.channels());
    let mut out = vec![0.0; p.out_features];
    for (o, slot) in out.iter_mut().enumerate() {
        let mut acc = b[o] as f64;
        for i in 0..h {
            for j in 0..wd {
                for k in 0..c {
                    let feature = match p.flatten {
                        FlattenOrder::Hwc => (i * wd + j) * c + k,
                        FlattenOrder::Chw => (k * h + i) * wd + j,
                    };
                    acc += w[o * p.in_features + feature] as f64 * x.at(i, j, k);
                }
            }
        }
        *slot = acc;
    }
    out
}

fn compare(kind: &str, case: usize, got: &[f64], want: &[f64], worst: &mut f64) -> Result<(), String> {
    check(got.len() == want.len(), || {
        format!("{kind} case {case}: {} outputs, oracle has {}", got.len(), want.len())
    })?;
    for (a, e) in got.iter().zip(want) {
        let err = (a - e).abs();
        *worst = worst.max(err);
        check(err <= 1e-5, || format!("{kind} case {case}: got {a}, oracle {e}"))?;
    }
    Ok(())
}

fn forward_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for case in 0..200 {
        let k: usize = rng.random_range(1..=3);
        let padding: usize = rng.random_range(0..=1);
        let h = rng.random_range(k.saturating_sub(2 * padding).max(1)..=8);
        let w = rng.random_range(k.saturating_sub(2 * padding).max(1)..=8);
        let p = ConvParams {
            kernel_h: k,
            kernel_w: k,
            stride: rng.random_range(1..=2),
            padding,
            in_channels: rng.random_range(1..=4),
            out_channels: rng.random_range(1..=4),
        };
        let x = random_tensor(&mut rng, h, w, p.in_channels);
        let wts = random_f32(&mut rng, p.weight_len());
        let bias = random_f32(&mut rng, p.out_channels);
        let got = conv2d(&x, &p, &wts, &bias).map_err(|e| format!("conv case {case}: {e}"))?;
        compare("conv", case, got.data(), &naive_conv(&x, &p, &wts, &bias), &mut worst)?;
    }
    for case in 0..200 {
        let (h, w, c) = (rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(1..=4));
        let x = random_tensor(&mut rng, h, w, c);
        let want: Vec<f64> = x.data().iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
        compare("relu", case, relu(&x).data(), &want, &mut worst)?;
    }
    for case in 0..200 {
        let p = PoolParams {
            window: rng.random_range(1..=3),
            stride: rng.random_range(1..=3),
        };
        let (h, w, c) = (rng.random_range(p.window..=8), rng.random_range(p.window..=8), rng.random_range(1..=4));
        let x = random_tensor(&mut rng, h, w, c);
        let got = maxpool(&x, &p).map_err(|e| format!("maxpool case {case}: {e}"))?;
        compare("maxpool", case, got.data(), &naive_pool(&x, &p), &mut worst)?;
    }
    for case in 0..200 {
        let (h, w, c) = (rng.random_range(1..=4), rng.random_range(1..=4), rng.random_range(1..=4));
        let x = random_tensor(&mut rng, h, w, c);
        let p = FcParams {
            in_features: x.len(),
            out_features: rng.random_range(1..=6),
            flatten: if rng.random_bool(0.5) { FlattenOrder::Hwc } else { FlattenOrder::Chw },
        };
        let wts = random_f32(&mut rng, p.weight_len());
        let bias = random_f32(&mut rng, p.out_features);
        let got = fc(&x, &p, &wts, &bias).map_err(|e| format!("fc case {case}: {e}"))?;
        compare("fc", case, got.data(), &naive_fc(&x, &p, &wts, &bias), &mut worst)?;
    }
    for case in 0..200 {
        let n = rng.random_range(1..=32);
        let x = random_tensor(&mut rng, 1, 1, n);
        let total: f64 = x.data().iter().map(|v| v.exp()).sum();
        let want: Vec<f64> = x.data().iter().map(|v| v.exp() / total).collect();
        compare("softmax", case, softmax(&x).data(), &want, &mut worst)?;
    }
    Ok(format!("200 shapes x 5 layer kinds, max error {worst:.1e}"))
}

/// Exact area under a nonnegative piecewise-linear function given by its knots,
/// split into a rectangle and a triangle per segment.
fn knot_area(knots: &[(f64, f64)]) -> f64 {
    knots
        .windows(2)
        .map(|s| {
            let width = s[1].0 - s[0].0;
            width * s[0].1.min(s[1].1) + width * (s[1].1 - s[0].1).abs() / 2.0
        })
        .sum()
}

fn quadrature() -> Outcome {
    // R = 2γ up to γ = 0.5, then R(0.75) = 0.6 and R(1) = 0.2.
    let gammas = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    let hand = DissimilarityCurve::new(gammas, vec![0.0, 0.5, 1.0, 0.6, 0.2], "hand", None)
        .map_err(|e| e.to_string())?;
    let d = deviation_area(&hand).map_err(|e| e.to_string())?;
    check((d - 0.45).abs() <= 1e-12, || format!("hand case: D = {d}, expected 0.45"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = (d - 0.45).abs();
    for case in 0..100 {
        let levels = rng.random_range(5..=41);
        let gammas = uniform_levels(levels);
        let imax = rng.random_range(1..levels - 1);
        let slope: f64 = rng.random_range(0.1..5.0);
        let peak = slope * gammas[imax];
        // Samples after the peak stay below it, so d = slope·γ − R is positive there.
        let values: Vec<f64> = gammas
            .iter()
            .enumerate()
            .map(|(i, &g)| if i <= imax { slope * g } else { rng.random_range(0.0..peak) })
            .collect();
        let knots: Vec<(f64, f64)> = gammas
            .iter()
            .zip(&values)
            .skip(imax)
            .map(|(&g, &r)| (g, slope * g - r))
            .collect();
        let want = knot_area(&knots);
        let curve = DissimilarityCurve::new(gammas, values, "random", None).map_err(|e| e.to_string())?;
        let got = deviation_area(&curve).map_err(|e| format!("case {case}: {e}"))?;
        let err = (got - want).abs();
        worst = worst.max(err);
        check(err <= 1e-12, || format!("case {case}: D = {got}, closed form {want}"))?;
    }
    Ok(format!("hand case D = {d}, 100 random curves, max error {worst:.1e}"))
}

fn max_relative_residual(curve: &DissimilarityCurve) -> Result<f64, String> {
    let fit = ols(curve.gammas(), curve.values()).map_err(|e| e.to_string())?;
    let last = curve.final_value().ok_or("empty curve")?;
    check(last > 0.0, || "curve ends at R = 0".into())?;
    let worst = curve
        .points()
        .map(|(x, r)| (fit.predict(x) - r).abs())
        .fold(0.0, f64::max);
    Ok(worst / last)
}

fn linearity_null() -> Outcome {
    let model = load_model(repo().join("data/fixtures/identity.nnwc")).map_err(|e| e.to_string())?;
    let spec = GridSpec::default();
    let sweep = whiteness_sweep(&spec).map_err(|e| e.to_string())?;
    let curve = layer_curve(&model, &sweep, sweep.reference(), "identity").map_err(|e| e.to_string())?;
    let whiteness = max_relative_residual(&curve)?;
    check(whiteness < 1e-9, || format!("whiteness sweep relative residual {whiteness:.3e}"))?;
    let report = DeviationReport::analyze(&curve).map_err(|e| e.to_string())?;
    check(report.area.abs() <= 1e-9 && report.normalized_area.abs() <= 1e-9, || {
        format!("D = {}, normalized {}", report.area, report.normalized_area)
    })?;

    let counts = dot_count_sequence(&spec, DotOrder::Raster).map_err(|e| e.to_string())?;
    check(counts.len() == 26, || format!("dot-count sequence has {} images", counts.len()))?;
    let curve = layer_curve(&model, &counts, counts.reference(), "identity").map_err(|e| e.to_string())?;
    let dots = max_relative_residual(&curve)?;
    check(dots < 1e-9, || format!("dot-count relative residual {dots:.3e}"))?;
    Ok(format!(
        "whiteness residual {whiteness:.1e}, D = {}, dot-count residual {dots:.1e}",
        report.area
    ))
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn matrix(v: &Value) -> Vec<Vec<f64>> {
    v.as_array().unwrap().iter().map(floats).collect()
}

fn six_digits(what: &str, got: f64, want: f64) -> Result<(), String> {
    check(got == want || (got - want).abs() <= 5e-7 * got.abs().max(want.abs()), || {
        format!("{what}: got {got}, oracle {want}")
    })
}

fn statistics_oracles() -> Outcome {
    let path = repo().join("data/oracles/statistics.json");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let o: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let cases = o["ttest"].as_array().ok_or("no ttest cases")?;
    check(cases.len() == 20, || format!("{} t-test cases", cases.len()))?;
    for (i, c) in cases.iter().enumerate() {
        let (xs, ys) = (floats(&c["xs"]), floats(&c["ys"]));
        let s = ttest_ind(&xs, &ys).map_err(|e| e.to_string())?;
        six_digits(&format!("sample {i} t"), s.t, c["t"].as_f64().unwrap())?;
        six_digits(&format!("sample {i} p"), s.p, c["p"].as_f64().unwrap())?;
        let w = ttest_ind_with(&xs, &ys, TTestKind::Welch).map_err(|e| e.to_string())?;
        six_digits(&format!("sample {i} welch t"), w.t, c["welch_t"].as_f64().unwrap())?;
        six_digits(&format!("sample {i} welch p"), w.p, c["welch_p"].as_f64().unwrap())?;
        let m = mean_sem(&xs).map_err(|e| e.to_string())?;
        six_digits(&format!("sample {i} mean"), m.mean, c["mean_x"].as_f64().unwrap())?;
        six_digits(&format!("sample {i} sem"), m.sem.unwrap_or(f64::NAN), c["sem_x"].as_f64().unwrap())?;
    }

    let mut worst = 0.0f64;
    let pcas = o["pca"].as_array().ok_or("no pca cases")?;
    for (m, c) in pcas.iter().enumerate() {
        let rows = matrix(&c["matrix"]);
        check(rows.len() == 5 && rows.iter().all(|r| r.len() == 4), || format!("matrix {m} is not 5x4"))?;
        let (components, _, _, _) = pca_matrix(&rows).map_err(|e| e.to_string())?;
        for (k, want) in matrix(&c["components"]).iter().enumerate() {
            let got = &components[k];
            let sign = got.iter().zip(want).map(|(a, b)| a * b).sum::<f64>().signum();
            for (a, b) in got.iter().zip(want) {
                let err = (a - sign * b).abs();
                worst = worst.max(err);
                check(err <= 1e-9, || format!("matrix {m} component {k}: {a} vs {}", sign * b))?;
            }
        }
    }
    Ok(format!(
        "20 samples to 6 digits, {} PCA matrices, max component error {worst:.1e}",
        pcas.len()
    ))
}

fn snapshot(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).map_err(|e| format!("{}: {e}", d.display()))? {
            let p = e.map_err(|e| e.to_string())?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(out)
}

/// Runs every experiment kind from `dir`, each writing into `dir/out/<kind>`.
fn full_run(dir: &Path, threads: Option<&str>) -> Result<(), String> {
    let data = repo().join("data").canonicalize().map_err(|e| e.to_string())?;
    let manifests: Vec<String> = ["illusions", "natural_synthetic", "illusion_controls"]
        .iter()
        .map(|m| data.join(format!("manifests/{m}.json")).display().to_string())
        .collect();
    let model = data.join("fixtures/small.nnwc").display().to_string();
    for kind in ["dot-whiteness", "dot-count", "layer-propagation", "pca"] {
        let config = serde_json::json!({
            "model": model,
            "experiment": kind,
            "manifests": manifests,
            "output_dir": format!("out/{kind}"),
            "dot_order": "shuffled",
            "seed": 7,
        });
        let path = dir.join(format!("{kind}.json"));
        std::fs::write(&path, serde_json::to_vec_pretty(&config).unwrap()).map_err(|e| e.to_string())?;
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_gridprobe"));
        cmd.args(["run", "--config"]).arg(&path);
        match threads {
            Some(n) => cmd.env("GRIDPROBE_THREADS", n),
            None => cmd.env_remove("GRIDPROBE_THREADS"),
        };
        let out = cmd.output().map_err(|e| e.to_string())?;
        check(out.status.success(), || {
            format!("{kind} run failed: {}", String::from_utf8_lossy(&out.stderr))
        })?;
    }
    Ok(())
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    std::fs::create_dir_all(&a).map_err(|e| e.to_string())?;
    std::fs::create_dir_all(&b).map_err(|e| e.to_string())?;
    full_run(&a, None)?;
    full_run(&b, Some("1"))?;
    let (first, second) = (snapshot(&a.join("out"))?, snapshot(&b.join("out"))?);
    check(!first.is_empty(), || "no report files written".into())?;
    check(first.keys().eq(second.keys()), || {
        format!("file sets differ: {:?} vs {:?}", first.keys(), second.keys())
    })?;
    for (name, bytes) in &first {
        check(second[name] == *bytes, || format!("{name} differs between runs"))?;
    }
    let bytes: usize = first.values().map(Vec::len).sum();
    Ok(format!("{} files, {bytes} bytes identical across two runs", first.len()))
}

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            name: "metric oracle equivalence",
            limit: Some(Duration::from_secs(1)),
            run: metric_oracle,
        },
        Criterion {
            name: "forward-pass equivalence",
            limit: Some(Duration::from_secs(30)),
            run: forward_equivalence,
        },
        Criterion {
            name: "quadrature exactness",
            limit: Some(Duration::from_secs(1)),
            run: quadrature,
        },
        Criterion {
            name: "linearity null",
            limit: Some(Duration::from_secs(10)),
            run: linearity_null,
        },
        Criterion {
            name: "statistics oracles",
            limit: Some(Duration::from_secs(1)),
            run: statistics_oracles,
        },
        Criterion {
            name: "determinism",
            limit: None,
            run: determinism,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!(
                "took {:.3} s, limit {} s",
                elapsed.as_secs_f64(),
                limit.as_secs()
            )),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS {}: {detail} ({:.3} s)", c.name, elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {}: {why} ({:.3} s)", c.name, elapsed.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
