//! Single-trajectory engine.
//!
//! Each grid step `[t_i, t_{i+1})` first evolves the qubit under `H(t_i)`
//! (exact propagator, or propagator plus amplitude damping when `γ₁ > 0`), then
//! draws a homodyne current from the evolved state and conditions on it. The
//! first-law ledger is kept per step:
//!
//! ```text
//! δW_i = Tr[ρ(t_{i+1}) (H(t_{i+1}) − H(t_i))]
//! δQ_i = U(t_{i+1}) − U(t_i) − δW_i
//! ```
//!
//! so work only accrues where the protocol switches, and heat collects all
//! measurement back-action. A final projective energy measurement closes the
//! trajectory and books the collapse as heat, which makes `W + Q = ε_m − ε_n`.
//!
//! Pure-state runs (`γ₁ = 0`, POVM integrator) also accumulate the forward
//! path log-probability; [`backward_log_probability`] builds the time-reversed
//! chain independently from the stored current record.

use log::warn;
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homodyne::{measurement_update, sample_current, MeasurementModel};
use crate::protocol::{ProtocolGrid, ProtocolParams};
use crate::qstate::{
    eigensystem, expectation, gibbs_state, propagator, BlochVector, DensityMatrix, Eigensystem,
    Evolve, Operator2, PureState, TimeReverse,
};
use crate::stats::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Exact Kraus update with the qubit POVM.
    PovmUpdate,
    /// Explicit Euler step of the Bloch-form stochastic master equation.
    BlochSme,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub gamma1: f64,
    pub integrator: Integrator,
    pub seed: u64,
    pub record_stride: usize,
}

impl TrajectoryConfig {
    pub fn new(dt: f64) -> Self {
        TrajectoryConfig {
            dt,
            gamma1: 0.0,
            integrator: Integrator::PovmUpdate,
            seed: 0,
            record_stride: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Domain {
                name: "dt",
                value: self.dt,
                reason: "time step must be positive",
            });
        }
        if !(self.gamma1.is_finite() && self.gamma1 >= 0.0) {
            return Err(Error::Domain {
                name: "gamma1",
                value: self.gamma1,
                reason: "damping rate must be non-negative",
            });
        }
        if self.record_stride == 0 {
            return Err(Error::Grid("record_stride must be positive".into()));
        }
        Ok(())
    }

    /// Path probabilities exist only for the pure-state POVM chain.
    pub fn tracks_path_probability(&self) -> bool {
        self.gamma1 == 0.0 && self.integrator == Integrator::PovmUpdate
    }
}

/// State snapshot taken just before a Hamiltonian switch at grid index `index`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchSnapshot {
    pub index: usize,
    pub state: BlochVector,
}

/// One realization of the monitored protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub dt: f64,
    pub beta: f64,
    pub gamma1: f64,
    pub integrator: Integrator,
    /// Grid indices of the recorded ledger points (always includes 0 and N).
    pub indices: Vec<usize>,
    pub times: Vec<f64>,
    /// Full-resolution current record; `currents[i]` is read out at `t_{i+1}`.
    pub currents: Vec<f64>,
    pub energy: Vec<f64>,
    pub work: Vec<f64>,
    pub heat: Vec<f64>,
    pub entropy: Vec<f64>,
    pub states: Vec<BlochVector>,
    pub switches: Vec<SwitchSnapshot>,
    /// Initial energy label (0 = lower level of `H(λ_0)`).
    pub n: usize,
    /// Final energy label (0 = lower level of `H(λ_τ)`).
    pub m: usize,
    pub eps_n: f64,
    pub eps_m: f64,
    /// `ΔF = F(λ_τ) − F(λ_0)`.
    pub delta_f: f64,
    /// Heat booked by the final projective energy measurement.
    pub projection_heat: f64,
    pub log_pf: Option<f64>,
    pub log_pb: Option<f64>,
    /// Number of explicit-SME steps that had to be clamped to the Bloch ball.
    pub clamp_count: usize,
}

impl TrajectoryRecord {
    pub fn steps(&self) -> usize {
        self.currents.len()
    }

    pub fn final_work(&self) -> f64 {
        *self.work.last().expect("ledger is never empty")
    }

    pub fn final_heat(&self) -> f64 {
        *self.heat.last().expect("ledger is never empty")
    }

    pub fn sigma_final(&self) -> f64 {
        *self.entropy.last().expect("ledger is never empty")
    }

    /// `ΔU_nm = ε_m(λ_τ) − ε_n(λ_0)`.
    pub fn delta_u(&self) -> f64 {
        self.eps_m - self.eps_n
    }

    /// `log p_F − log p_B` when both are available.
    pub fn log_ratio(&self) -> Option<f64> {
        Some(self.log_pf? - self.log_pb?)
    }

    /// Position of grid index `i` in the recorded series.
    pub fn position_of_index(&self, i: usize) -> Option<usize> {
        self.indices.binary_search(&i).ok()
    }
}

fn beta_check(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "beta",
            value: beta,
            reason: "inverse temperature must be positive and finite",
        })
    }
}

/// Projective energy measurement on the Gibbs state of `H(λ_0)`.
pub fn sample_initial_eigenstate<R: Rng + ?Sized>(
    p: &ProtocolParams,
    beta: f64,
    rng: &mut R,
) -> Result<(usize, PureState)> {
    sample_gibbs_eigenstate(&p.hamiltonian_before(), beta, rng)
}

pub fn sample_gibbs_eigenstate<R: Rng + ?Sized>(
    h: &Operator2,
    beta: f64,
    rng: &mut R,
) -> Result<(usize, PureState)> {
    beta_check(beta)?;
    let g = gibbs_state(h, beta)?;
    let u: f64 = rng.random();
    let n = if u < g.populations[0] { 0 } else { 1 };
    Ok((n, *g.eigen.vector(n)))
}

/// `−i[H, ρ]` for the Bloch components.
fn hamiltonian_drift(h: &Operator2, b: &BlochVector) -> (f64, C64) {
    let rho = b.to_density();
    let l = h
        .commutator(rho.as_operator())
        .scale_complex(C64::new(0.0, -1.0));
    (l.get(0, 0).re, l.get(0, 1))
}

/// One explicit Euler step of the Bloch stochastic master equation driven by
/// the averaged current `current`. Returns the new state and whether it had to
/// be pulled back onto the Bloch sphere.
pub fn step_sme(
    b: &BlochVector,
    h: &Operator2,
    gamma_d: f64,
    current: f64,
    dt: f64,
) -> Result<(BlochVector, bool)> {
    let sg = gamma_d.sqrt();
    let z = b.sigma_z();
    let innovation = current - sg * z;
    let rho01 = b.rho01();
    let (l00, l01) = hamiltonian_drift(h, b);

    let d00 = l00 + 2.0 * sg * b.rho00 * b.rho11() * innovation;
    let d01 = l01 - rho01 * (sg * z * innovation) - rho01 * (0.5 * gamma_d);

    let mut rho00 = b.rho00 + d00 * dt;
    let mut next01 = rho01 + d01 * dt;
    if !(rho00.is_finite() && next01.re.is_finite() && next01.im.is_finite()) {
        return Err(Error::Integrator {
            step: 0,
            reason: "non-finite Bloch vector".into(),
        });
    }
    let zn = 2.0 * rho00 - 1.0;
    let radius = (zn * zn + 4.0 * next01.norm_sqr()).sqrt();
    let clamped = radius > 1.0;
    if clamped {
        rho00 = 0.5 * (1.0 + zn / radius);
        next01 /= radius;
    }
    Ok((
        BlochVector {
            rho00,
            re01: next01.re,
            im01: next01.im,
        },
        clamped,
    ))
}

/// Amplitude-damping channel with jump probability `γ₁·dt`, written in Kraus
/// form so that positivity survives the first-order step.
fn amplitude_damping(rho: &DensityMatrix, gamma1: f64, dt: f64) -> Result<DensityMatrix> {
    let p = gamma1 * dt;
    if p > 1.0 {
        return Err(Error::Integrator {
            step: 0,
            reason: format!("damping probability γ₁·dt = {p} exceeds one"),
        });
    }
    // σ₋ = |1⟩⟨0| lowers σ_z; level 0 decays
    let rho00 = rho.rho00() * (1.0 - p);
    let rho01 = rho.rho01() * (1.0 - p).sqrt();
    Ok(DensityMatrix::from_components(rho00, rho01))
}

/// One step of `ρ̇ = −i[H,ρ] + γ₁(σ₋ρσ₊ − ½{σ₊σ₋, ρ})`: exact propagator for the
/// Hamiltonian part, then a first-order dissipator step.
pub fn lindblad_step(
    rho: &DensityMatrix,
    h: &Operator2,
    gamma1: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    lindblad_step_with(rho, &propagator(h, dt), gamma1, dt)
}

fn lindblad_step_with(
    rho: &DensityMatrix,
    u: &Operator2,
    gamma1: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    if !(gamma1.is_finite() && gamma1 >= 0.0) {
        return Err(Error::Domain {
            name: "gamma1",
            value: gamma1,
            reason: "damping rate must be non-negative",
        });
    }
    let evolved = rho.transform(u);
    if gamma1 == 0.0 {
        return Ok(evolved);
    }
    let out = amplitude_damping(&evolved, gamma1, dt)?;
    out.validate().map_err(|e| Error::Integrator {
        step: 0,
        reason: e.to_string(),
    })?;
    Ok(out)
}

/// Born-rule energy measurement in the eigenbasis of `h_tau`.
///
/// Returns the outcome label, the heat `ε_m − U(τ⁻)` booked by the collapse,
/// and the post-measurement eigenstate.
pub fn final_projection<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    h_tau: &Operator2,
    rng: &mut R,
) -> Result<(usize, f64, PureState)> {
    let eig = eigensystem(h_tau)?;
    let (m, _) = project(rho, &eig, rng);
    let heat = eig.energy(m) - expectation(rho, h_tau);
    Ok((m, heat, *eig.vector(m)))
}

fn project<R: Rng + ?Sized>(rho: &DensityMatrix, eig: &Eigensystem, rng: &mut R) -> (usize, f64) {
    let pops = eig.populations(rho);
    let total = pops[0] + pops[1];
    let u: f64 = rng.random();
    if u * total < pops[0] {
        (0, pops[0] / total)
    } else {
        (1, pops[1] / total)
    }
}

enum Working {
    Pure(PureState),
    Mixed(DensityMatrix),
    Bloch(BlochVector),
}

impl Working {
    fn density(&self) -> DensityMatrix {
        match self {
            Working::Pure(psi) => psi.to_density(),
            Working::Mixed(rho) => *rho,
            Working::Bloch(b) => b.to_density(),
        }
    }

    fn energy(&self, h: &Operator2) -> f64 {
        match self {
            Working::Pure(psi) => psi.expectation(h),
            Working::Mixed(rho) => expectation(rho, h),
            Working::Bloch(b) => expectation(&b.to_density(), h),
        }
    }
}

fn at_step(e: Error, step: usize) -> Error {
    match e {
        Error::Integrator { reason, .. } => Error::Integrator { step, reason },
        other => other,
    }
}

/// Runs one forward trajectory of the quench protocol.
pub fn run_forward<R: Rng + ?Sized>(
    p: &ProtocolParams,
    m: &MeasurementModel,
    c: &TrajectoryConfig,
    beta: f64,
    rng: &mut R,
) -> Result<TrajectoryRecord> {
    let grid = ProtocolGrid::from_protocol(p, c.dt)?;
    run_on_grid(&grid, m, c, beta, rng)
}

/// Ratio `‖H‖·dt` above which the explicit SME step is meaningless.
pub const SME_MAX_PHASE_PER_STEP: f64 = 0.2;

/// Runs one forward trajectory on an arbitrary sampled protocol.
pub fn run_on_grid<R: Rng + ?Sized>(
    grid: &ProtocolGrid,
    m: &MeasurementModel,
    c: &TrajectoryConfig,
    beta: f64,
    rng: &mut R,
) -> Result<TrajectoryRecord> {
    c.validate()?;
    beta_check(beta)?;
    let dt = grid.dt();
    if (m.dt - dt).abs() > 1e-12 * dt || (c.dt - dt).abs() > 1e-12 * dt {
        return Err(Error::Grid(format!(
            "measurement dt {} / trajectory dt {} do not match protocol grid dt {}",
            m.dt, c.dt, dt
        )));
    }
    let steps = grid.steps();
    if c.integrator == Integrator::BlochSme {
        for i in 0..steps {
            let (_, hx, hy, hz) = grid.hamiltonian(i).pauli_components();
            let phase = (hx * hx + hy * hy + hz * hz).sqrt() * dt;
            if phase > SME_MAX_PHASE_PER_STEP {
                return Err(Error::Grid(format!(
                    "explicit SME needs ‖H‖·dt ≤ {SME_MAX_PHASE_PER_STEP}, got {phase:.3} at step {i}"
                )));
            }
        }
    }
    let delta_f = grid.delta_free_energies(beta)?;
    let init_gibbs = gibbs_state(grid.initial(), beta)?;
    let (n, psi0) = sample_gibbs_eigenstate(grid.initial(), beta, rng)?;
    let eps_n = init_gibbs.eigen.energy(n);

    let track_path = c.tracks_path_probability();
    let mut log_pf = NeumaierSum::default();
    if track_path {
        log_pf.add(init_gibbs.populations[n].ln());
    }

    let mut state = match (c.integrator, c.gamma1 > 0.0) {
        (Integrator::PovmUpdate, false) => Working::Pure(psi0),
        (Integrator::PovmUpdate, true) => Working::Mixed(psi0.to_density()),
        (Integrator::BlochSme, _) => Working::Bloch(BlochVector::from(&psi0.to_density())),
    };

    let capacity = steps / c.record_stride + 2;
    let mut rec = TrajectoryRecord {
        dt,
        beta,
        gamma1: c.gamma1,
        integrator: c.integrator,
        indices: Vec::with_capacity(capacity),
        times: Vec::with_capacity(capacity),
        currents: Vec::with_capacity(steps),
        energy: Vec::with_capacity(capacity),
        work: Vec::with_capacity(capacity),
        heat: Vec::with_capacity(capacity),
        entropy: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        switches: Vec::new(),
        n,
        m: 0,
        eps_n,
        eps_m: 0.0,
        delta_f: delta_f[steps],
        projection_heat: 0.0,
        log_pf: None,
        log_pb: None,
        clamp_count: 0,
    };

    let mut energy = state.energy(grid.initial());
    let mut work = 0.0;
    let mut heat = 0.0;
    let push = |rec: &mut TrajectoryRecord, i: usize, u: f64, w: f64, q: f64, st: &Working| {
        rec.indices.push(i);
        rec.times.push(grid.time(i));
        rec.energy.push(u);
        rec.work.push(w);
        rec.heat.push(q);
        rec.entropy.push(beta * (w + q - delta_f[i]));
        rec.states.push(BlochVector::from(&st.density()));
    };
    push(&mut rec, 0, energy, work, heat, &state);

    let mut cached: Option<(Operator2, Operator2)> = None;
    for i in 0..steps {
        let h = grid.hamiltonian(i);
        let u = match cached {
            Some((ch, u)) if ch == *h => u,
            _ => {
                let u = propagator(h, dt);
                cached = Some((*h, u));
                u
            }
        };

        let x;
        state = match state {
            Working::Pure(psi) => {
                let evolved = psi.transform(&u);
                x = sample_current(m, &evolved, rng).x;
                let (next, log_w) = measurement_update(&evolved, m, x)?;
                log_pf.add(log_w);
                Working::Pure(next)
            }
            Working::Mixed(rho) => {
                let evolved =
                    lindblad_step_with(&rho, &u, c.gamma1, dt).map_err(|e| at_step(e, i))?;
                x = sample_current(m, &evolved, rng).x;
                let (next, _) = measurement_update(&evolved, m, x)?;
                Working::Mixed(next)
            }
            Working::Bloch(b) => {
                x = sample_current(m, &b.to_density(), rng).x;
                let (mut next, clamped) =
                    step_sme(&b, h, m.gamma_d, x, dt).map_err(|e| at_step(e, i))?;
                if clamped {
                    rec.clamp_count += 1;
                }
                if c.gamma1 > 0.0 {
                    let damped = amplitude_damping(&next.to_density(), c.gamma1, dt)
                        .map_err(|e| at_step(e, i))?;
                    next = BlochVector::from(&damped);
                }
                Working::Bloch(next)
            }
        };
        rec.currents.push(x);

        let h_next = grid.hamiltonian(i + 1);
        let next_energy = state.energy(h_next);
        let d_work = if grid.switches_after(i) {
            let snapshot = BlochVector::from(&state.density());
            rec.switches.push(SwitchSnapshot {
                index: i + 1,
                state: snapshot,
            });
            state.energy(&(*h_next - *h))
        } else {
            0.0
        };
        heat += next_energy - energy - d_work;
        work += d_work;
        energy = next_energy;

        if (i + 1) % c.record_stride == 0 || i + 1 == steps {
            push(&mut rec, i + 1, energy, work, heat, &state);
        }
    }
    if rec.clamp_count > 0 {
        warn!(
            "explicit SME left the Bloch ball on {} of {} steps",
            rec.clamp_count, steps
        );
    }

    // closing energy measurement in the eigenbasis of H(λ_τ)
    let rho_end = state.density();
    let eig = eigensystem(grid.last())?;
    let (m_label, prob) = project(&rho_end, &eig, rng);
    let eps_m = eig.energy(m_label);
    let projection_heat = eps_m - energy;
    heat += projection_heat;
    if track_path {
        log_pf.add(prob.ln());
        rec.log_pf = Some(log_pf.total());
    }
    rec.m = m_label;
    rec.eps_m = eps_m;
    rec.projection_heat = projection_heat;

    let last = rec.indices.len() - 1;
    rec.energy[last] = eps_m;
    rec.heat[last] = heat;
    rec.entropy[last] = beta * (work + heat - delta_f[steps]);
    rec.states[last] = BlochVector::from(&eig.vector(m_label).to_density());
    Ok(rec)
}

/// Log-probability of the time-reversed trajectory.
///
/// Starts from `Θ|m⟩` weighted by the Gibbs population of `H(λ_τ)`, applies
/// the time-reversed POVM of the reversed current record followed by the
/// time-reversed adjoint of each forward step propagator, and ends with the
/// overlap on `Θ|n⟩`.
pub fn backward_log_probability(
    rec: &TrajectoryRecord,
    p: &ProtocolParams,
    m: &MeasurementModel,
    beta: f64,
) -> Result<f64> {
    let grid = ProtocolGrid::from_protocol(p, rec.dt)?;
    backward_log_probability_on_grid(rec, &grid, m, beta)
}

pub fn backward_log_probability_on_grid(
    rec: &TrajectoryRecord,
    grid: &ProtocolGrid,
    m: &MeasurementModel,
    beta: f64,
) -> Result<f64> {
    beta_check(beta)?;
    if rec.gamma1 != 0.0 || rec.integrator != Integrator::PovmUpdate {
        return Err(Error::Grid(
            "backward probability needs a pure-state POVM record (γ₁ = 0)".into(),
        ));
    }
    let steps = grid.steps();
    if rec.currents.len() != steps {
        return Err(Error::Grid(format!(
            "record holds {} currents but the protocol has {} steps",
            rec.currents.len(),
            steps
        )));
    }
    if (m.dt - grid.dt()).abs() > 1e-12 * grid.dt() {
        return Err(Error::Grid(
            "measurement dt does not match the protocol grid".into(),
        ));
    }

    let final_gibbs = gibbs_state(grid.last(), beta)?;
    let start = final_gibbs.eigen.vector(rec.m).time_reverse();
    let mut log_pb = NeumaierSum::default();
    log_pb.add(final_gibbs.populations[rec.m].ln());

    let mut psi = start;
    let mut cached: Option<(Operator2, Operator2)> = None;
    for k in 0..steps {
        let i = steps - 1 - k;
        let x = rec.currents[i];

        // M̃ = Θ M† Θ†, applied in scaled form to keep the weights in log space
        let [l0, l1] = m.log_likelihoods(x);
        let lmax = l0.max(l1);
        let scaled = Operator2::diagonal((0.5 * (l0 - lmax)).exp(), (0.5 * (l1 - lmax)).exp());
        let reversed_kraus = scaled.adjoint().time_reverse();
        let phi = reversed_kraus.apply(&psi);
        let w = phi[0].norm_sqr() + phi[1].norm_sqr();
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Underflow { x });
        }
        log_pb.add(lmax + w.ln());
        let s = w.sqrt();

        let h = grid.hamiltonian(i);
        let u_rev = match cached {
            Some((ch, u)) if ch == *h => u,
            _ => {
                let u = propagator(h, grid.dt()).adjoint().time_reverse();
                cached = Some((*h, u));
                u
            }
        };
        psi = PureState::from_normalized(
            u_rev.apply(&PureState::from_normalized([phi[0] / s, phi[1] / s])),
        );
    }

    let target = gibbs_state(grid.initial(), beta)?
        .eigen
        .vector(rec.n)
        .time_reverse();
    let overlap = target.inner(&psi).norm_sqr();
    log_pb.add(overlap.ln());
    Ok(log_pb.total())
}

/// Evolves `rho0` under the POVM integrator with currents drawn from the
/// conditioned state, without the closing energy measurement.
pub fn evolve_conditioned<R: Rng + ?Sized>(
    rho0: &DensityMatrix,
    grid: &ProtocolGrid,
    m: &MeasurementModel,
    gamma1: f64,
    rng: &mut R,
) -> Result<(DensityMatrix, Vec<f64>)> {
    let mut rho = *rho0;
    let mut currents = Vec::with_capacity(grid.steps());
    for i in 0..grid.steps() {
        let evolved = lindblad_step(&rho, grid.hamiltonian(i), gamma1, grid.dt())
            .map_err(|e| at_step(e, i))?;
        let x = sample_current(m, &evolved, rng).x;
        rho = measurement_update(&evolved, m, x)?.0;
        currents.push(x);
    }
    Ok((rho, currents))
}

/// Replays a fixed current record with the POVM integrator.
pub fn replay_povm(
    rho0: &DensityMatrix,
    grid: &ProtocolGrid,
    m: &MeasurementModel,
    currents: &[f64],
) -> Result<DensityMatrix> {
    check_record_len(grid, currents)?;
    let mut rho = *rho0;
    for (i, &x) in currents.iter().enumerate() {
        let evolved = rho.transform(&propagator(grid.hamiltonian(i), grid.dt()));
        rho = measurement_update(&evolved, m, x)?.0;
    }
    Ok(rho)
}

/// Replays a fixed current record with the explicit Bloch SME; also returns
/// the number of clamped steps.
pub fn replay_sme(
    b0: &BlochVector,
    grid: &ProtocolGrid,
    m: &MeasurementModel,
    currents: &[f64],
) -> Result<(BlochVector, usize)> {
    check_record_len(grid, currents)?;
    let mut b = *b0;
    let mut clamps = 0;
    for (i, &x) in currents.iter().enumerate() {
        let (next, clamped) = step_sme(&b, grid.hamiltonian(i), m.gamma_d, x, grid.dt())
            .map_err(|e| at_step(e, i))?;
        clamps += clamped as usize;
        b = next;
    }
    Ok((b, clamps))
}

fn check_record_len(grid: &ProtocolGrid, currents: &[f64]) -> Result<()> {
    if currents.len() != grid.steps() {
        return Err(Error::Grid(format!(
            "{} currents for a {}-step protocol",
            currents.len(),
            grid.steps()
        )));
    }
    Ok(())
}

/// Averages a fine current record pairwise, giving the record a detector
/// with twice the integration window would have produced.
pub fn coarsen_record(currents: &[f64]) -> Vec<f64> {
    currents
        .chunks_exact(2)
        .map(|pair| 0.5 * (pair[0] + pair[1]))
        .collect()
}
