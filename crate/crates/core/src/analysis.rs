//! Ensemble statistics over trajectory records and the closed-system
//! two-point-measurement reference.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::protocol::{delta_free_energy, Direction, ProtocolParams};
use crate::qstate::{eigensystem, gibbs_state, propagator, Operator2, PureState, TimeReverse};
use crate::stats::{mean_and_stderr, NeumaierSum};
use crate::trajectory::TrajectoryRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FtPoint {
    /// `ΔU_nm − ΔF`.
    pub delta_u: f64,
    /// `log p_F − log p_B`.
    pub log_ratio: f64,
    pub n: usize,
    pub m: usize,
}

/// Ordinary or weighted least-squares line `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_stderr: f64,
    pub residual_std: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtAnalysis {
    pub points: Vec<FtPoint>,
    pub fit: LinearFit,
    /// `max |log_ratio − β·delta_u|` over all points.
    pub max_identity_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficacyResult {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl EfficacyResult {
    /// `|mean − 1| ≤ k·stderr`.
    pub fn consistent_with_one(&self, k: f64) -> bool {
        (self.mean - 1.0).abs() <= k * self.stderr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub total: usize,
    pub t: f64,
    /// 1-D k-means centres of the samples, ascending.
    pub cluster_centers: Vec<f64>,
}

impl Histogram {
    /// Local maxima of the counts, ignoring bins below `min_fraction` of the
    /// total. Plateaus count once.
    pub fn modes(&self, min_fraction: f64) -> usize {
        let floor = min_fraction * self.total as f64;
        let c = &self.counts;
        let mut modes = 0;
        let mut i = 0;
        while i < c.len() {
            let mut j = i;
            while j + 1 < c.len() && c[j + 1] == c[i] {
                j += 1;
            }
            let left_lower = i == 0 || c[i - 1] < c[i];
            let right_lower = j + 1 == c.len() || c[j + 1] < c[i];
            if left_lower && right_lower && c[i] as f64 >= floor && c[i] > 0 {
                modes += 1;
            }
            i = j + 1;
        }
        modes
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyCurve {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub intercept: f64,
    pub slope: f64,
    pub slope_stderr: f64,
    pub p_value: f64,
    pub residual_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpmTransition {
    pub n: usize,
    pub m: usize,
    /// Joint forward probability `p(m, n)`.
    pub prob: f64,
    /// `W_nm = ε_m(λ_τ) − ε_n(λ_0)`.
    pub work: f64,
    /// Joint probability of the reversed transition `m → n` under the
    /// backward protocol, i.e. `p_B(−W_nm)`.
    pub backward_prob: f64,
    /// `p_F(W) − p_B(−W)·e^{β(W−ΔF)}`.
    pub crooks_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpmDistribution {
    pub beta: f64,
    pub delta_f: f64,
    /// Ordered `(n, m)` = (0,0), (0,1), (1,0), (1,1).
    pub transitions: [TpmTransition; 4],
    /// `Σ p(m,n) e^{−β(W_nm − ΔF)}`.
    pub jarzynski_sum: f64,
}

impl TpmDistribution {
    pub fn total_probability(&self) -> f64 {
        self.transitions.iter().map(|t| t.prob).sum()
    }

    /// Entropy production `β(W_nm − ΔF)` of each transition.
    pub fn entropy_values(&self) -> [f64; 4] {
        self.transitions
            .map(|t| self.beta * (t.work - self.delta_f))
    }
}

fn ols(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    wls(xs, ys, None)
}

/// Least squares with optional weights. The slope variance uses the residual
/// scale estimated from the data (`n − 2` degrees of freedom).
fn wls(xs: &[f64], ys: &[f64], weights: Option<&[f64]>) -> Result<LinearFit> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "{n} points cannot fix a line"
        )));
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let sw: f64 = (0..n).map(w).sum();
    let xbar = (0..n).map(|i| w(i) * xs[i]).sum::<f64>() / sw;
    let ybar = (0..n).map(|i| w(i) * ys[i]).sum::<f64>() / sw;
    let sxx: f64 = (0..n).map(|i| w(i) * (xs[i] - xbar).powi(2)).sum();
    let sxy: f64 = (0..n).map(|i| w(i) * (xs[i] - xbar) * (ys[i] - ybar)).sum();
    if sxx.is_nan() || sxx <= 0.0 {
        return Err(Error::InsufficientData("abscissae have zero spread".into()));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let (slope_stderr, residual_std) = if n > 2 {
        let rss: f64 = (0..n)
            .map(|i| w(i) * (ys[i] - intercept - slope * xs[i]).powi(2))
            .sum();
        let s2 = rss / (n - 2) as f64;
        ((s2 / sxx).sqrt(), s2.sqrt())
    } else {
        (0.0, 0.0)
    };
    Ok(LinearFit {
        intercept,
        slope,
        slope_stderr,
        residual_std,
        points: n,
    })
}

/// Per-trajectory detailed fluctuation points and the OLS slope of
/// `log p_F − log p_B` against `ΔU_nm − ΔF`.
pub fn detailed_ft_points(
    records: &[TrajectoryRecord],
    beta: f64,
    delta_f: f64,
) -> Result<FtAnalysis> {
    if records.is_empty() {
        return Err(Error::Empty("trajectory records"));
    }
    let mut points = Vec::with_capacity(records.len());
    let mut max_residual: f64 = 0.0;
    for (k, rec) in records.iter().enumerate() {
        if rec.gamma1 != 0.0 {
            return Err(Error::InsufficientData(format!(
                "record {k} has γ₁ = {}; the detailed relation needs γ₁ = 0",
                rec.gamma1
            )));
        }
        let log_ratio = rec.log_ratio().ok_or_else(|| {
            Error::InsufficientData(format!("record {k} carries no path probabilities"))
        })?;
        let delta_u = rec.delta_u() - delta_f;
        max_residual = max_residual.max((log_ratio - beta * delta_u).abs());
        points.push(FtPoint {
            delta_u,
            log_ratio,
            n: rec.n,
            m: rec.m,
        });
    }
    let fit = fit_ft_points(&points)?;
    Ok(FtAnalysis {
        points,
        fit,
        max_identity_residual: max_residual,
    })
}

pub fn fit_ft_points(points: &[FtPoint]) -> Result<LinearFit> {
    let xs: Vec<f64> = points.iter().map(|p| p.delta_u).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.log_ratio).collect();
    ols(&xs, &ys)
}

/// Final entropy production `β(W + Q − ΔF)` of a record.
pub fn final_entropy(rec: &TrajectoryRecord, beta: f64, delta_f: f64) -> f64 {
    beta * (rec.final_work() + rec.final_heat() - delta_f)
}

/// Sample mean and standard error of `e^{−Σ(τ)}`.
pub fn efficacy(records: &[TrajectoryRecord], beta: f64, delta_f: f64) -> Result<EfficacyResult> {
    let samples: Vec<f64> = records
        .iter()
        .map(|r| (-final_entropy(r, beta, delta_f)).exp())
        .collect();
    let (mean, stderr) = mean_and_stderr(&samples).ok_or(Error::Empty("trajectory records"))?;
    Ok(EfficacyResult {
        mean,
        stderr,
        n: samples.len(),
    })
}

fn time_position(rec: &TrajectoryRecord, t: f64) -> Option<usize> {
    let tol = 1e-9 * t.abs().max(1.0);
    let k = rec.times.partition_point(|&s| s < t - tol);
    (k < rec.times.len() && (rec.times[k] - t).abs() <= tol).then_some(k)
}

/// `Σ(t)` across records; `t` must be a recorded time of every record.
pub fn entropy_at(records: &[TrajectoryRecord], t: f64) -> Result<Vec<f64>> {
    if records.is_empty() {
        return Err(Error::Empty("trajectory records"));
    }
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            time_position(r, t).map(|k| r.entropy[k]).ok_or_else(|| {
                Error::Grid(format!("t = {t} µs is not a recorded time of record {i}"))
            })
        })
        .collect()
}

/// Histogram of `Σ(t)` over `[min, max]`, plus 1-D k-means centres with
/// `k = min(4, distinct values)`.
pub fn entropy_histogram(records: &[TrajectoryRecord], t: f64, bins: usize) -> Result<Histogram> {
    let values = entropy_at(records, t)?;
    histogram_of(&values, t, bins)
}

pub fn histogram_of(values: &[f64], t: f64, bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::Empty("histogram samples"));
    }
    if bins == 0 {
        return Err(Error::InsufficientData(
            "histogram needs at least one bin".into(),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InsufficientData("non-finite entropy sample".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    };
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    edges[bins] = hi;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(Histogram {
        edges,
        counts,
        total: values.len(),
        t,
        cluster_centers: kmeans_1d(values, 4),
    })
}

/// Lloyd iterations in one dimension, seeded at evenly spaced quantiles.
/// Returns at most `k` ascending centres (fewer when there are fewer
/// distinct values).
pub fn kmeans_1d(values: &[f64], k: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    let k = k.min(distinct.len());
    if k == 0 {
        return Vec::new();
    }
    if k == distinct.len() {
        return distinct;
    }
    let n = sorted.len();
    let mut centers: Vec<f64> = (0..k)
        .map(|j| sorted[((2 * j + 1) * n / (2 * k)).min(n - 1)])
        .collect();
    centers.dedup();
    for _ in 0..200 {
        // sorted data: each cluster is a contiguous run split at midpoints
        let mut sums = vec![0.0; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        let mut c = 0;
        for &v in &sorted {
            while c + 1 < centers.len() && v > 0.5 * (centers[c] + centers[c + 1]) {
                c += 1;
            }
            sums[c] += v;
            counts[c] += 1;
        }
        let next: Vec<f64> = centers
            .iter()
            .enumerate()
            .filter(|&(j, _)| counts[j] > 0)
            .map(|(j, _)| sums[j] / counts[j] as f64)
            .collect();
        if next == centers {
            break;
        }
        centers = next;
    }
    centers
}

/// Fraction of `samples` within `tol_fraction` of the smallest spacing between
/// distinct `peaks` of the nearest peak.
pub fn fraction_near_peaks(samples: &[f64], peaks: &[f64], tol_fraction: f64) -> Result<f64> {
    if samples.is_empty() || peaks.is_empty() {
        return Err(Error::Empty("peak samples"));
    }
    let mut p = peaks.to_vec();
    p.sort_by(f64::total_cmp);
    let spacing = p
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !spacing.is_finite() {
        return Err(Error::InsufficientData(
            "peaks need at least two distinct values".into(),
        ));
    }
    let tol = tol_fraction * spacing;
    let near = samples
        .iter()
        .filter(|&&s| p.iter().any(|&c| (s - c).abs() <= tol))
        .count();
    Ok(near as f64 / samples.len() as f64)
}

/// Pointwise mean and standard error of `Σ(t)` on a common time grid.
pub fn mean_entropy_curve(records: &[TrajectoryRecord]) -> Result<EntropyCurve> {
    let first = records.first().ok_or(Error::Empty("trajectory records"))?;
    for (i, r) in records.iter().enumerate() {
        if r.times != first.times {
            return Err(Error::Grid(format!(
                "record {i} does not share the time grid of record 0"
            )));
        }
    }
    let len = first.times.len();
    let mut mean = Vec::with_capacity(len);
    let mut stderr = Vec::with_capacity(len);
    let mut column = Vec::with_capacity(records.len());
    for k in 0..len {
        column.clear();
        column.extend(records.iter().map(|r| r.entropy[k]));
        let (m, s) = mean_and_stderr(&column).expect("non-empty");
        mean.push(m);
        stderr.push(s);
    }
    Ok(EntropyCurve {
        times: first.times.clone(),
        mean,
        stderr,
    })
}

/// Weighted least squares of efficacy against `γ₁/κ` with weights
/// `1/stderr²`, and a two-sided t-test on the slope with `n − 2` degrees of
/// freedom. When every stderr is zero the points are treated as exact and
/// weighted equally.
pub fn efficacy_regression(sweep: &[(f64, EfficacyResult)]) -> Result<RegressionResult> {
    if sweep.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "efficacy regression needs at least 3 sweep points, got {}",
            sweep.len()
        )));
    }
    let xs: Vec<f64> = sweep.iter().map(|(g, _)| *g).collect();
    let ys: Vec<f64> = sweep.iter().map(|(_, e)| e.mean).collect();
    let all_exact = sweep.iter().all(|(_, e)| e.stderr == 0.0);
    let weights: Option<Vec<f64>> = if all_exact {
        None
    } else {
        let mut w = Vec::with_capacity(sweep.len());
        for (g, e) in sweep {
            if !(e.stderr > 0.0 && e.stderr.is_finite()) {
                return Err(Error::InsufficientData(format!(
                    "sweep point γ₁/κ = {g} has unusable stderr {}",
                    e.stderr
                )));
            }
            w.push(1.0 / (e.stderr * e.stderr));
        }
        Some(w)
    };
    let fit = wls(&xs, &ys, weights.as_deref())?;
    let p_value = slope_p_value(fit.slope, fit.slope_stderr, sweep.len() - 2);
    Ok(RegressionResult {
        intercept: fit.intercept,
        slope: fit.slope,
        slope_stderr: fit.slope_stderr,
        p_value,
        residual_std: fit.residual_std,
    })
}

fn slope_p_value(slope: f64, stderr: f64, dof: usize) -> f64 {
    if stderr == 0.0 {
        return if slope == 0.0 { 1.0 } else { 0.0 };
    }
    let t = (slope / stderr).abs();
    let dist = StudentsT::new(0.0, 1.0, dof as f64).expect("positive degrees of freedom");
    (2.0 * dist.sf(t)).clamp(0.0, 1.0)
}

fn ordered_exp(segments: &[(f64, Operator2)]) -> Operator2 {
    segments
        .iter()
        .fold(Operator2::identity(), |acc, (d, h)| propagator(h, *d) * acc)
}

/// Exhaustive two-point-measurement statistics of the measurement-free
/// protocol, with the backward process built from the time-reversed
/// Hamiltonians of the reversed segment sequence.
pub fn tpm_reference(p: &ProtocolParams, beta: f64) -> Result<TpmDistribution> {
    let h0 = p.hamiltonian_before();
    let h_tau = p.hamiltonian_after();
    let forward_u = ordered_exp(&p.segments(Direction::Forward));
    let backward_segments = p
        .segments(Direction::Backward)
        .map(|(d, h)| (d, h.time_reverse()));
    let backward_u = ordered_exp(&backward_segments);

    let fwd_start = gibbs_state(&h0, beta)?;
    let fwd_end = eigensystem(&h_tau)?;
    let bwd_start = gibbs_state(&h_tau.time_reverse(), beta)?;
    let bwd_end = eigensystem(&h0.time_reverse())?;
    let delta_f = delta_free_energy(p, p.tau, beta)?;

    let amplitude = |u: &Operator2, from: &PureState, to: &PureState| -> f64 {
        let out = u.apply(from);
        let t = to.amplitudes();
        (t[0].conj() * out[0] + t[1].conj() * out[1]).norm_sqr()
    };

    let mut transitions = [TpmTransition {
        n: 0,
        m: 0,
        prob: 0.0,
        work: 0.0,
        backward_prob: 0.0,
        crooks_residual: 0.0,
    }; 4];
    let mut jarzynski = NeumaierSum::default();
    for n in 0..2 {
        for m in 0..2 {
            let prob = fwd_start.populations[n]
                * amplitude(&forward_u, fwd_start.eigen.vector(n), fwd_end.vector(m));
            let backward_prob = bwd_start.populations[m]
                * amplitude(&backward_u, bwd_start.eigen.vector(m), bwd_end.vector(n));
            let work = fwd_end.energy(m) - fwd_start.eigen.energy(n);
            let crooks_residual = prob - backward_prob * (beta * (work - delta_f)).exp();
            jarzynski.add(prob * (-beta * (work - delta_f)).exp());
            transitions[2 * n + m] = TpmTransition {
                n,
                m,
                prob,
                work,
                backward_prob,
                crooks_residual,
            };
        }
    }
    Ok(TpmDistribution {
        beta,
        delta_f,
        transitions,
        jarzynski_sum: jarzynski.total(),
    })
}
