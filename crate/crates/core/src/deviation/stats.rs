//! Two-sample t-tests and mean ± SEM summaries.
//!
//! The two-sided p-value of a t statistic with `df` degrees of freedom is
//! `I_x(df/2, 1/2)` with `x = df / (df + t^2)`, where `I` is the regularized
//! incomplete beta function. `I` is evaluated with the modified Lentz
//! continued fraction, using the symmetry `I_x(a, b) = 1 - I_{1-x}(b, a)`
//! where the fraction converges slowly.

use serde::{Deserialize, Serialize};

use super::{DeviationError, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos approximation).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the series in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)` for `a, b > 0`, `x` in [0, 1].
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TTestKind {
    /// Pooled-variance Student test.
    #[default]
    Student,
    /// Unequal-variance test with Welch-Satterthwaite degrees of freedom.
    Welch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub df: f64,
    pub kind: TTestKind,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Two-sided p-value of `t` with `df` degrees of freedom.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
}

pub fn ttest_ind(xs: &[f64], ys: &[f64]) -> Result<TTest> {
    ttest_ind_with(xs, ys, TTestKind::Student)
}

pub fn ttest_ind_with(xs: &[f64], ys: &[f64], kind: TTestKind) -> Result<TTest> {
    let got = xs.len().min(ys.len());
    if got < 2 {
        return Err(DeviationError::InsufficientData { needed: 2, got });
    }
    let (n1, n2) = (xs.len() as f64, ys.len() as f64);
    let (m1, m2) = (mean(xs), mean(ys));
    let (v1, v2) = (sample_variance(xs, m1), sample_variance(ys, m2));
    let (se, df) = match kind {
        TTestKind::Student => {
            let df = n1 + n2 - 2.0;
            let pooled = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / df;
            ((pooled * (1.0 / n1 + 1.0 / n2)).sqrt(), df)
        }
        TTestKind::Welch => {
            let (a, b) = (v1 / n1, v2 / n2);
            let df = (a + b).powi(2) / (a * a / (n1 - 1.0) + b * b / (n2 - 1.0));
            ((a + b).sqrt(), df)
        }
    };
    if se == 0.0 {
        if m1 == m2 {
            return Ok(TTest {
                t: 0.0,
                p: 1.0,
                df: n1 + n2 - 2.0,
                kind,
            });
        }
        return Err(DeviationError::DegenerateData(
            "both samples have zero variance and different means".into(),
        ));
    }
    let t = (m1 - m2) / se;
    Ok(TTest {
        t,
        p: two_sided_p(t, df),
        df,
        kind,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSem {
    pub n: usize,
    pub mean: f64,
    /// Absent for a single observation.
    pub sem: Option<f64>,
}

pub fn mean_sem(xs: &[f64]) -> Result<MeanSem> {
    if xs.is_empty() {
        return Err(DeviationError::EmptyInput);
    }
    let m = mean(xs);
    let sem = (xs.len() >= 2).then(|| (sample_variance(xs, m) / xs.len() as f64).sqrt());
    Ok(MeanSem {
        n: xs.len(),
        mean: m,
        sem,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetSummary {
    pub label: String,
    pub values: Vec<f64>,
    #[serde(flatten)]
    pub summary: MeanSem,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetComparison {
    pub first: String,
    pub second: String,
    #[serde(flatten)]
    pub test: TTest,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetStatistics {
    pub sets: Vec<SetSummary>,
    pub comparisons: Vec<SetComparison>,
}

/// Summaries of every set and a t-test for every ordered pair `(i, j)` with `i < j`.
///
/// Pairs whose test is undefined (too few samples or no variance) are omitted.
pub fn set_statistics(sets: &[(String, Vec<f64>)], kind: TTestKind) -> Result<SetStatistics> {
    let summaries = sets
        .iter()
        .map(|(label, values)| {
            Ok(SetSummary {
                label: label.clone(),
                values: values.clone(),
                summary: mean_sem(values)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut comparisons = Vec::new();
    for (i, (a, xs)) in sets.iter().enumerate() {
        for (b, ys) in &sets[i + 1..] {
            if let Ok(test) = ttest_ind_with(xs, ys, kind) {
                comparisons.push(SetComparison {
                    first: a.clone(),
                    second: b.clone(),
                    test,
                });
            }
        }
    }
    Ok(SetStatistics {
        sets: summaries,
        comparisons,
    })
}
