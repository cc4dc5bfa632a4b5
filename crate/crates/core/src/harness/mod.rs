//! Run configuration, deterministic parallel ensembles, and the commands the
//! CLI exposes.
//!
//! Trajectory `k` draws from its own ChaCha8 stream `(master_seed, k)`, so an
//! ensemble is bitwise identical for any thread count and any single
//! trajectory can be replayed in isolation.

mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{
    detailed_ft_points, efficacy, efficacy_regression, entropy_at, final_entropy,
    fraction_near_peaks, histogram_of, tpm_reference, EfficacyResult,
};
use crate::error::{Error, Result};
use crate::homodyne::{MeasurementModel, DEFAULT_STRENGTH_CAP};
use crate::protocol::{angular_to_mhz, mhz_to_angular, ProtocolGrid, ProtocolParams};
use crate::trajectory::{
    backward_log_probability_on_grid, run_on_grid, Integrator, TrajectoryConfig, TrajectoryRecord,
};

pub use output::{
    read_table, verify_manifest, write_endpoints, write_trajectories, ManifestEntry, OutputBundle,
    OutputWriter, Table, MANIFEST_FILE,
};

/// Flat JSON run description. Frequencies are cyclic (MHz), times in µs
/// unless the name says otherwise; `beta_omega0` is `β` in units of `1/ω₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub omega0_mhz: f64,
    pub delta_omega_mhz: f64,
    pub omega_rabi_mhz: f64,
    pub chi_mhz: f64,
    pub kappa_mhz: f64,
    pub nbar: f64,
    pub beta_omega0: f64,
    pub gamma1_over_kappa: f64,
    /// Fixed step; when absent the step is 1 ns or less so that
    /// `δt·Γ_d ≤ dt_gamma_cap`.
    pub dt_ns: Option<f64>,
    pub dt_gamma_cap: f64,
    pub tau_us: f64,
    pub quench_time_us: f64,
    pub trajectories: usize,
    pub record_stride: usize,
    pub integrator: Integrator,
    pub master_seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            omega0_mhz: 4000.0,
            delta_omega_mhz: 400.0,
            omega_rabi_mhz: 1.0,
            chi_mhz: -0.5,
            kappa_mhz: 10.0,
            nbar: 0.4,
            beta_omega0: 1.0,
            gamma1_over_kappa: 0.0,
            dt_ns: None,
            dt_gamma_cap: DEFAULT_STRENGTH_CAP,
            tau_us: 2.4,
            quench_time_us: 1.2,
            trajectories: 1000,
            record_stride: 10,
            integrator: Integrator::PovmUpdate,
            master_seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

const DEFAULT_DT_US: f64 = 1e-3;

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(
            field,
            format!("must be finite and non-negative, got {v}"),
        ))
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(
            field,
            format!("must be finite and positive, got {v}"),
        ))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every field and derives the physical run.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        positive("omega0_mhz", self.omega0_mhz)?;
        non_negative("delta_omega_mhz", self.delta_omega_mhz)?;
        non_negative("omega_rabi_mhz", self.omega_rabi_mhz)?;
        if !self.chi_mhz.is_finite() {
            return Err(Error::config("chi_mhz", "must be finite"));
        }
        positive("kappa_mhz", self.kappa_mhz)?;
        non_negative("nbar", self.nbar)?;
        positive("beta_omega0", self.beta_omega0)?;
        non_negative("gamma1_over_kappa", self.gamma1_over_kappa)?;
        positive("dt_gamma_cap", self.dt_gamma_cap)?;
        positive("tau_us", self.tau_us)?;
        if !(self.quench_time_us > 0.0 && self.quench_time_us < self.tau_us) {
            return Err(Error::config(
                "quench_time_us",
                format!(
                    "must lie strictly inside (0, tau_us), got {}",
                    self.quench_time_us
                ),
            ));
        }
        if self.trajectories == 0 {
            return Err(Error::config("trajectories", "must be at least 1"));
        }
        if self.record_stride == 0 {
            return Err(Error::config("record_stride", "must be at least 1"));
        }

        let protocol = ProtocolParams::from_mhz(
            self.omega0_mhz,
            self.delta_omega_mhz,
            self.omega_rabi_mhz,
            self.tau_us,
            self.quench_time_us,
        )?;
        let chi = mhz_to_angular(self.chi_mhz);
        let kappa = mhz_to_angular(self.kappa_mhz);
        let gamma_d = crate::homodyne::measurement_rate(chi, kappa, self.nbar)?;

        let (dt, steps) = match self.dt_ns {
            Some(dt_ns) => {
                positive("dt_ns", dt_ns)?;
                let dt = dt_ns * 1e-3;
                if dt * gamma_d > self.dt_gamma_cap {
                    return Err(Error::config(
                        "dt_ns",
                        format!(
                            "δt·Γ_d = {:.4} exceeds the cap {} (Γ_d = {gamma_d:.6} rad/µs); \
                             use dt_ns ≤ {:.6} or omit it",
                            dt * gamma_d,
                            self.dt_gamma_cap,
                            1e3 * self.dt_gamma_cap / gamma_d
                        ),
                    ));
                }
                let steps = crate::protocol::steps_for(self.tau_us, dt)
                    .map_err(|e| Error::config("dt_ns", e.to_string()))?;
                if steps % self.record_stride != 0 {
                    return Err(Error::config(
                        "record_stride",
                        format!("{} does not divide the {steps} steps", self.record_stride),
                    ));
                }
                (dt, steps)
            }
            None => {
                let target = if gamma_d > 0.0 {
                    DEFAULT_DT_US.min(self.dt_gamma_cap / gamma_d)
                } else {
                    DEFAULT_DT_US
                };
                let raw = (self.tau_us / target * (1.0 - 1e-12)).ceil() as usize;
                let steps = raw.div_ceil(self.record_stride) * self.record_stride;
                (self.tau_us / steps as f64, steps)
            }
        };

        let model = MeasurementModel::with_cap(chi, kappa, self.nbar, dt, self.dt_gamma_cap)?;
        let grid = ProtocolGrid::from_protocol(&protocol, dt)?;
        let beta = self.beta_omega0 / protocol.omega0;
        let gamma1 = self.gamma1_over_kappa * kappa;
        let trajectory = TrajectoryConfig {
            dt,
            gamma1,
            integrator: self.integrator,
            seed: self.master_seed,
            record_stride: self.record_stride,
        };
        let delta_f = *grid
            .delta_free_energies(beta)?
            .last()
            .expect("grid has samples");
        Ok(ResolvedRun {
            config: self.clone(),
            protocol,
            model,
            grid,
            beta,
            gamma1,
            delta_f,
            steps,
            trajectory,
        })
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg = RunConfig::from_json(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    cfg.resolve()?;
    Ok(cfg)
}

/// A validated configuration with every derived quantity.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub config: RunConfig,
    pub protocol: ProtocolParams,
    pub model: MeasurementModel,
    pub grid: ProtocolGrid,
    pub beta: f64,
    pub gamma1: f64,
    /// `ΔF = F(λ_τ) − F(λ_0)`.
    pub delta_f: f64,
    pub steps: usize,
    pub trajectory: TrajectoryConfig,
}

impl ResolvedRun {
    pub fn dt(&self) -> f64 {
        self.trajectory.dt
    }

    /// Derived quantities echoed into every manifest.
    pub fn derived_json(&self) -> serde_json::Value {
        json!({
            "gamma_d_rad_per_us": self.model.gamma_d,
            "gamma_d_over_2pi_mhz": angular_to_mhz(self.model.gamma_d),
            "measurement_time_us": if self.model.gamma_d > 0.0 {
                Some(self.model.measurement_time())
            } else {
                None
            },
            "dt_us": self.dt(),
            "steps": self.steps,
            "beta": self.beta,
            "gamma1_rad_per_us": self.gamma1,
            "delta_f": self.delta_f,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threads {
    Auto,
    Fixed(usize),
}

impl FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("expected a positive integer or `auto`, got `{s}`")),
            Ok(n) => Ok(Threads::Fixed(n)),
        }
    }
}

impl fmt::Display for Threads {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threads::Auto => f.write_str("auto"),
            Threads::Fixed(n) => write!(f, "{n}"),
        }
    }
}

fn pool(threads: Threads) -> Result<rayon::ThreadPool> {
    let n = match threads {
        Threads::Auto => 0,
        Threads::Fixed(n) => n,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))
}

/// RNG stream of trajectory `index`.
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Runs (or replays) trajectory `index` of the ensemble.
pub fn run_trajectory(run: &ResolvedRun, index: u64) -> Result<TrajectoryRecord> {
    let wrap = |source: Error| Error::Worker {
        index,
        seed: run.config.master_seed,
        source: Box::new(source),
    };
    let mut rng = trajectory_rng(run.config.master_seed, index);
    let mut rec =
        run_on_grid(&run.grid, &run.model, &run.trajectory, run.beta, &mut rng).map_err(wrap)?;
    if run.trajectory.tracks_path_probability() {
        rec.log_pb = Some(
            backward_log_probability_on_grid(&rec, &run.grid, &run.model, run.beta)
                .map_err(wrap)?,
        );
    }
    Ok(rec)
}

/// All trajectories of the ensemble, in index order.
pub fn run_ensemble(run: &ResolvedRun, threads: Threads) -> Result<Vec<TrajectoryRecord>> {
    let n = run.config.trajectories as u64;
    pool(threads)?.install(|| {
        (0..n)
            .into_par_iter()
            .map(|k| run_trajectory(run, k))
            .collect()
    })
}

fn efficacy_json(e: &EfficacyResult) -> serde_json::Value {
    json!({ "mean": e.mean, "stderr": e.stderr, "n": e.n })
}

/// Worst first-law and quench-work residuals over an ensemble, each relative
/// to the energy scale of its trajectory.
pub fn identity_residuals(run: &ResolvedRun, records: &[TrajectoryRecord]) -> (f64, f64) {
    let delta_h = run.protocol.hamiltonian_after() - run.protocol.hamiltonian_before();
    let mut first_law: f64 = 0.0;
    let mut quench: f64 = 0.0;
    for r in records {
        let (w, q) = (r.final_work(), r.final_heat());
        let scale = r.eps_n.abs().max(r.eps_m.abs()).max(w.abs()).max(q.abs());
        first_law = first_law.max((w + q - r.delta_u()).abs() / scale);
        let expected: f64 = r
            .switches
            .iter()
            .map(|s| crate::qstate::expectation(&s.state.to_density(), &delta_h))
            .sum();
        quench = quench.max((w - expected).abs() / scale);
    }
    (first_law, quench)
}

/// `simulate`: trajectories.csv, endpoints.csv, summary.json.
pub fn simulate(
    run: &ResolvedRun,
    threads: Threads,
) -> Result<(Vec<TrajectoryRecord>, OutputBundle)> {
    let records = run_ensemble(run, threads)?;
    let mut out = OutputWriter::create(&run.config.output_dir)?;
    out.write("trajectories.csv", |w| write_trajectories(w, &records))?;
    out.write("endpoints.csv", |w| write_endpoints(w, &records))?;

    let eff = efficacy(&records, run.beta, run.delta_f)?;
    let sigma: Vec<f64> = records
        .iter()
        .map(|r| final_entropy(r, run.beta, run.delta_f))
        .collect();
    let (mean_sigma, se_sigma) = crate::stats::mean_and_stderr(&sigma).expect("non-empty");
    let negative = records
        .iter()
        .filter(|r| r.entropy.iter().any(|&s| s < 0.0))
        .count();
    let (first_law, quench) = identity_residuals(run, &records);
    let clamps: usize = records.iter().map(|r| r.clamp_count).sum();
    out.write_json(
        "summary.json",
        &json!({
            "command": "simulate",
            "trajectories": records.len(),
            "efficacy": efficacy_json(&eff),
            "sigma_final": { "mean": mean_sigma, "stderr": se_sigma },
            "trajectories_with_negative_sigma": negative,
            "max_first_law_residual": first_law,
            "max_quench_work_residual": quench,
            "sme_clamps": clamps,
        }),
    )?;
    let bundle = out.finish(run, "simulate")?;
    Ok((records, bundle))
}

/// `ft-check`: ft_points.csv and the fitted slope.
pub fn ft_check(run: &ResolvedRun, threads: Threads) -> Result<OutputBundle> {
    if !run.trajectory.tracks_path_probability() {
        return Err(Error::config(
            "gamma1_over_kappa",
            "the detailed fluctuation check needs γ₁ = 0 and the povm_update integrator",
        ));
    }
    let records = run_ensemble(run, threads)?;
    let ft = detailed_ft_points(&records, run.beta, run.delta_f)?;
    let mut out = OutputWriter::create(&run.config.output_dir)?;
    out.write("ft_points.csv", |w| output::write_ft_points(w, &ft.points))?;
    out.write_json(
        "summary.json",
        &json!({
            "command": "ft-check",
            "beta": run.beta,
            "delta_f": run.delta_f,
            "fit": ft.fit,
            "slope_over_beta": ft.fit.slope / run.beta,
            "max_identity_residual": ft.max_identity_residual,
        }),
    )?;
    out.finish(run, "ft-check")
}

/// `histogram`: Σ(t) histogram with TPM peak diagnostics.
pub fn histogram(
    run: &ResolvedRun,
    threads: Threads,
    time_us: f64,
    bins: usize,
) -> Result<OutputBundle> {
    let records = run_ensemble(run, threads)?;
    let values = entropy_at(&records, time_us)?;
    let hist = histogram_of(&values, time_us, bins)?;
    let tpm = tpm_reference(&run.protocol, run.beta)?;
    let peaks = tpm.entropy_values();
    let near = fraction_near_peaks(&values, &peaks, 0.05).ok();
    let positive = values.iter().filter(|&&s| s > 0.0).count() as f64 / values.len() as f64;
    let mut out = OutputWriter::create(&run.config.output_dir)?;
    out.write("histogram.csv", |w| output::write_histogram(w, &hist))?;
    out.write_json(
        "summary.json",
        &json!({
            "command": "histogram",
            "nbar": run.config.nbar,
            "time_us": time_us,
            "total": hist.total,
            "cluster_centers": hist.cluster_centers,
            "modes": hist.modes(0.01),
            "tpm_sigma_values": peaks,
            "fraction_near_tpm_values": near,
            "positive_fraction": positive,
        }),
    )?;
    out.finish(run, "histogram")
}

/// One ensemble per damping ratio, sharing the master seed.
pub fn efficacy_points(
    base: &RunConfig,
    ratios: &[f64],
    threads: Threads,
) -> Result<Vec<(f64, EfficacyResult)>> {
    ratios
        .iter()
        .map(|&g| {
            let cfg = RunConfig {
                gamma1_over_kappa: g,
                ..base.clone()
            };
            let run = cfg.resolve()?;
            let records = run_ensemble(&run, threads)?;
            Ok((g, efficacy(&records, run.beta, run.delta_f)?))
        })
        .collect()
}

/// `efficacy-sweep`: efficacy_sweep.csv and the regression.
pub fn efficacy_sweep(run: &ResolvedRun, ratios: &[f64], threads: Threads) -> Result<OutputBundle> {
    let points = efficacy_points(&run.config, ratios, threads)?;
    let regression = efficacy_regression(&points).ok();
    let mut out = OutputWriter::create(&run.config.output_dir)?;
    out.write("efficacy_sweep.csv", |w| output::write_sweep(w, &points))?;
    out.write_json(
        "summary.json",
        &json!({
            "command": "efficacy-sweep",
            "points": points.iter().map(|(g, e)| json!({
                "gamma1_over_kappa": g,
                "efficacy": efficacy_json(e),
            })).collect::<Vec<_>>(),
            "regression": regression,
        }),
    )?;
    out.finish(run, "efficacy-sweep")
}

/// `tpm`: the closed-system two-point-measurement table.
pub fn tpm(run: &ResolvedRun) -> Result<OutputBundle> {
    let t = tpm_reference(&run.protocol, run.beta)?;
    let mut out = OutputWriter::create(&run.config.output_dir)?;
    out.write("tpm.csv", |w| output::write_tpm(w, &t))?;
    out.write_json(
        "summary.json",
        &json!({
            "command": "tpm",
            "beta": t.beta,
            "delta_f": t.delta_f,
            "jarzynski_sum": t.jarzynski_sum,
            "total_probability": t.total_probability(),
            "sigma_values": t.entropy_values(),
        }),
    )?;
    out.finish(run, "tpm")
}
