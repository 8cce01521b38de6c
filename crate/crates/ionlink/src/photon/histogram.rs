use serde::Serialize;
use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use super::{CorrelationHistogram, EventRecord, Normalization};
use crate::exec::{map_chunks, Exec};
use crate::units::TICK_SECONDS;
use crate::{Error, Result};

fn to_ticks(x: f64, what: &str) -> Result<i64> {
    let t = (x / TICK_SECONDS).round();
    if t < 1.0 || ((t * TICK_SECONDS) - x).abs() > 1e-6 * x {
        return Err(Error::Domain(format!("{what} {x:e} s is not a whole number of TDC ticks")));
    }
    Ok(t as i64)
}

/// Cross-channel delay histogram over `[-span, span)`.
///
/// Every (ch0, ch1) pair with `t_d = t1 - t0` inside the span is counted once.
/// Bin width and span are snapped to whole ticks so binning is exact.
pub fn histogram_events(
    events: &[EventRecord],
    bin_width: f64,
    span: f64,
    exec: Exec,
) -> Result<CorrelationHistogram> {
    let bw = to_ticks(bin_width, "bin width")?;
    let half_bins = (span / bin_width).round() as i64;
    if half_bins < 1 {
        return Err(Error::Domain("span shorter than one bin".into()));
    }
    let span_t = half_bins * bw;
    let nbins = (2 * half_bins) as usize;

    let mut ch0 = Vec::new();
    let mut ch1 = Vec::new();
    for e in events {
        match e.channel {
            0 => ch0.push(e.timestamp_ticks as i64),
            _ => ch1.push(e.timestamp_ticks as i64),
        }
    }
    ch0.sort_unstable();
    ch1.sort_unstable();

    let partial = map_chunks(exec, &ch0, 8192, |chunk| {
        let mut counts = vec![0u64; nbins];
        let mut start = ch1.partition_point(|&t| t < chunk.first().copied().unwrap_or(0) - span_t);
        for &t0 in chunk {
            while start < ch1.len() && ch1[start] < t0 - span_t {
                start += 1;
            }
            for &t1 in &ch1[start..] {
                let d = t1 - t0;
                if d >= span_t {
                    break;
                }
                counts[((d + span_t) / bw) as usize] += 1;
            }
        }
        counts
    });
    let mut counts = vec![0u64; nbins];
    for p in partial {
        for (c, v) in counts.iter_mut().zip(p) {
            *c += v;
        }
    }
    let w = bw as f64 * TICK_SECONDS;
    Ok(CorrelationHistogram {
        bin_width: w,
        bin_edges: (-half_bins..=half_bins).map(|k| (k * bw) as f64 * TICK_SECONDS).collect(),
        counts: counts.into_iter().map(|c| c as f64).collect(),
        normalization: Normalization::Counts,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub critical: f64,
    pub confidence: f64,
    pub pass: bool,
}

/// Pearson goodness of fit against fully specified expectations.
///
/// Consecutive bins are pooled until each group expects at least
/// `min_expected` counts; no parameters are fitted so dof = groups.
pub fn chi_square_gof(
    observed: &[f64],
    expected: &[f64],
    min_expected: f64,
    confidence: f64,
) -> Result<ChiSquare> {
    if observed.len() != expected.len() {
        return Err(Error::Dimension("observed and expected differ in length".into()));
    }
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&oi, &ei) in observed.iter().zip(expected) {
        o += oi;
        e += ei;
        if e >= min_expected {
            groups.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match groups.last_mut() {
            Some(g) => {
                g.0 += o;
                g.1 += e;
            }
            None => groups.push((o, e)),
        }
    }
    if groups.is_empty() || groups.iter().any(|g| g.1 <= 0.0) {
        return Err(Error::Domain("no bins with positive expectation".into()));
    }
    let statistic = groups.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = groups.len();
    let critical = ChiSquared::new(dof as f64)
        .map_err(|e| Error::Domain(e.to_string()))?
        .inverse_cdf(confidence);
    Ok(ChiSquare { statistic, dof, critical, confidence, pass: statistic <= critical })
}

/// Consecutive bins pooled until each group expects at least `threshold`.
fn pool(expected: &[f64], threshold: f64) -> Vec<std::ops::Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    let mut e = 0.0;
    for (i, &ei) in expected.iter().enumerate() {
        e += ei;
        if e >= threshold {
            groups.push(start..i + 1);
            start = i + 1;
            e = 0.0;
        }
    }
    if start < expected.len() {
        match groups.last_mut() {
            Some(g) => g.end = expected.len(),
            None => groups.push(0..expected.len()),
        }
    }
    groups
}

/// Goodness of fit for histograms whose bins are not independent Poisson
/// counts, such as pair histograms where one photon enters many pairs.
///
/// `batches` are histograms of independent, identically distributed slices
/// of the data, each with expectation `expected_per_batch`. Bins are pooled
/// into at most `max_groups` groups; the group covariance is estimated from
/// the batches and Hotelling's T² is referred to its exact F distribution
/// under normality. `statistic` and `critical` are on the T² scale, which
/// tends to χ² with `dof` degrees of freedom as the batch count grows.
pub fn chi_square_batched(
    batches: &[Vec<f64>],
    expected_per_batch: &[f64],
    max_groups: usize,
    confidence: f64,
) -> Result<ChiSquare> {
    let b = batches.len();
    if batches.iter().any(|h| h.len() != expected_per_batch.len()) {
        return Err(Error::Dimension("batch histograms differ in length from the expectation".into()));
    }
    let total: f64 = expected_per_batch.iter().sum();
    if !(total > 0.0) || max_groups == 0 {
        return Err(Error::Domain("no bins with positive expectation".into()));
    }
    let groups = pool(expected_per_batch, total / max_groups as f64);
    let g = groups.len();
    if b <= g + 1 {
        return Err(Error::Domain(format!("{b} batches cannot resolve {g} groups")));
    }
    let sum = |h: &[f64], r: &std::ops::Range<usize>| h[r.clone()].iter().sum::<f64>();
    let x = DMatrix::from_fn(b, g, |i, j| sum(&batches[i], &groups[j]));
    let mu = DVector::from_iterator(g, groups.iter().map(|r| sum(expected_per_batch, r)));
    let mean = DVector::from_iterator(g, (0..g).map(|j| x.column(j).mean()));
    let mut cov = DMatrix::zeros(g, g);
    for i in 0..b {
        let d = x.row(i).transpose() - &mean;
        cov += &d * d.transpose();
    }
    cov /= (b - 1) as f64;
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::Singular("batch covariance is not positive definite".into()))?;
    let d = &mean - &mu;
    let t2 = b as f64 * d.dot(&chol.solve(&d));
    let (bf, gf) = (b as f64, g as f64);
    let scale = gf * (bf - 1.0) / (bf - gf);
    let f_crit = FisherSnedecor::new(gf, bf - gf)
        .map_err(|e| Error::Domain(e.to_string()))?
        .inverse_cdf(confidence);
    let critical = scale * f_crit;
    Ok(ChiSquare { statistic: t2, dof: g, critical, confidence, pass: t2 <= critical })
}
