//! Force protocol of the driven transmon: a simultaneous quench of the qubit
//! frequency and of the drive amplitude.
//!
//! All frequencies are angular (rad/µs) and times are in µs. Hamiltonians are
//! written in the energy-evaluation frame with the drive phase gauged away,
//! which leaves them real:
//!
//! ```text
//! t <  t_q :  H = ω₀ σz / 2
//! t >= t_q :  H = (ω₀ + Δω) σz / 2 + Ω₀ σx
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{gibbs_state, Operator2};

pub const TWO_PI: f64 = 2.0 * PI;

/// Ordinary frequency in MHz to angular frequency in rad/µs.
#[inline]
pub fn mhz_to_angular(f_mhz: f64) -> f64 {
    TWO_PI * f_mhz
}

#[inline]
pub fn angular_to_mhz(w: f64) -> f64 {
    w / TWO_PI
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub omega0: f64,
    pub delta_omega: f64,
    pub omega_drive_amp: f64,
    pub tau: f64,
    pub quench_time: f64,
    pub drive_frequency: f64,
    /// Time-reversal parity ε_λ of the Hamiltonian family.
    pub parity: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl ProtocolParams {
    pub fn quench(
        omega0: f64,
        delta_omega: f64,
        omega_drive_amp: f64,
        tau: f64,
        quench_time: f64,
    ) -> Result<Self> {
        for (name, value) in [
            ("omega0", omega0),
            ("delta_omega", delta_omega),
            ("omega_drive_amp", omega_drive_amp),
        ] {
            if !value.is_finite() {
                return Err(Error::Domain {
                    name,
                    value,
                    reason: "must be finite",
                });
            }
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::Domain {
                name: "tau",
                value: tau,
                reason: "protocol duration must be positive",
            });
        }
        if !(quench_time > 0.0 && quench_time < tau) {
            return Err(Error::Domain {
                name: "quench_time",
                value: quench_time,
                reason: "quench must happen strictly inside (0, tau)",
            });
        }
        Ok(ProtocolParams {
            omega0,
            delta_omega,
            omega_drive_amp,
            tau,
            quench_time,
            drive_frequency: omega0 + delta_omega,
            parity: 1,
        })
    }

    /// Same as [`ProtocolParams::quench`] with frequencies given in MHz.
    pub fn from_mhz(
        omega0_mhz: f64,
        delta_omega_mhz: f64,
        rabi_mhz: f64,
        tau_us: f64,
        quench_time_us: f64,
    ) -> Result<Self> {
        Self::quench(
            mhz_to_angular(omega0_mhz),
            mhz_to_angular(delta_omega_mhz),
            mhz_to_angular(rabi_mhz),
            tau_us,
            quench_time_us,
        )
    }

    /// Transmon parameters: ω₀/2π = 4 GHz, Δω/2π = 400 MHz, Ω₀/2π = 1 MHz,
    /// τ = 2.4 µs with the quench at τ/2.
    pub fn transmon() -> Self {
        Self::from_mhz(4000.0, 400.0, 1.0, 2.4, 1.2).expect("valid default protocol")
    }

    pub fn hamiltonian_before(&self) -> Operator2 {
        Operator2::sigma_z().scale(0.5 * self.omega0)
    }

    pub fn hamiltonian_after(&self) -> Operator2 {
        Operator2::from_pauli(
            0.0,
            self.omega_drive_amp,
            0.0,
            0.5 * (self.omega0 + self.delta_omega),
        )
    }

    /// Piecewise-constant segments `(duration, H)` in the order they act.
    pub fn segments(&self, dir: Direction) -> [(f64, Operator2); 2] {
        let first = (self.quench_time, self.hamiltonian_before());
        let second = (self.tau - self.quench_time, self.hamiltonian_after());
        match dir {
            Direction::Forward => [first, second],
            Direction::Backward => [second, first],
        }
    }
}

pub fn hamiltonian_at(p: &ProtocolParams, t: f64, dir: Direction) -> Result<Operator2> {
    if !(0.0..=p.tau).contains(&t) {
        return Err(Error::TimeOutOfRange { t, tau: p.tau });
    }
    Ok(match dir {
        Direction::Forward if t < p.quench_time => p.hamiltonian_before(),
        Direction::Forward => p.hamiltonian_after(),
        Direction::Backward => hamiltonian_at(p, p.tau - t, Direction::Forward)?,
    })
}

fn check_beta(beta: f64) -> Result<()> {
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

/// Equilibrium free energy `−log Z(λ_t)/β` of the Hamiltonian at `t`.
pub fn free_energy(p: &ProtocolParams, t: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let h = hamiltonian_at(p, t, Direction::Forward)?;
    free_energy_of(&h, beta)
}

/// `ΔF(t) = F(λ_t) − F(λ_0)`.
pub fn delta_free_energy(p: &ProtocolParams, t: f64, beta: f64) -> Result<f64> {
    Ok(free_energy(p, t, beta)? - free_energy(p, 0.0, beta)?)
}

pub fn free_energy_of(h: &Operator2, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(-gibbs_state(h, beta)?.log_z / beta)
}

/// The protocol sampled on a uniform grid `t_i = i·dt`, `i = 0..=N`.
///
/// Step `i` evolves under `H(t_i)` over `[t_i, t_{i+1})`; the Hamiltonian
/// switches to `H(t_{i+1})` at the end of the step.
#[derive(Debug, Clone)]
pub struct ProtocolGrid {
    dt: f64,
    hamiltonians: Vec<Operator2>,
}

impl ProtocolGrid {
    /// Samples the quench protocol; `τ/dt` must be an integer and the quench
    /// is snapped to the nearest grid point.
    pub fn from_protocol(p: &ProtocolParams, dt: f64) -> Result<Self> {
        let steps = steps_for(p.tau, dt)?;
        let q = ((p.quench_time / dt).round() as usize).clamp(1, steps.max(1));
        let before = p.hamiltonian_before();
        let after = p.hamiltonian_after();
        let hamiltonians = (0..=steps)
            .map(|i| if i < q { before } else { after })
            .collect();
        Ok(ProtocolGrid { dt, hamiltonians })
    }

    /// Arbitrary sampled protocol `H(t_0), …, H(t_N)`.
    pub fn from_samples(dt: f64, hamiltonians: Vec<Operator2>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Domain {
                name: "dt",
                value: dt,
                reason: "time step must be positive",
            });
        }
        if hamiltonians.is_empty() {
            return Err(Error::Empty("protocol samples"));
        }
        for h in &hamiltonians {
            h.require_hermitian()?;
        }
        Ok(ProtocolGrid { dt, hamiltonians })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.hamiltonians.len() - 1
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.steps() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.dt * i as f64
    }

    pub fn hamiltonian(&self, i: usize) -> &Operator2 {
        &self.hamiltonians[i]
    }

    pub fn initial(&self) -> &Operator2 {
        &self.hamiltonians[0]
    }

    pub fn last(&self) -> &Operator2 {
        &self.hamiltonians[self.steps()]
    }

    /// True when the Hamiltonian changes at the end of step `i`.
    pub fn switches_after(&self, i: usize) -> bool {
        self.hamiltonians[i] != self.hamiltonians[i + 1]
    }

    /// Grid with the time-reversed sampling `H̃(t_i) = H(τ − t_i)`.
    pub fn reversed(&self) -> Self {
        let mut hamiltonians = self.hamiltonians.clone();
        hamiltonians.reverse();
        ProtocolGrid {
            dt: self.dt,
            hamiltonians,
        }
    }

    /// `ΔF` at every grid point relative to `t = 0`.
    pub fn delta_free_energies(&self, beta: f64) -> Result<Vec<f64>> {
        let f0 = free_energy_of(self.initial(), beta)?;
        let mut out = Vec::with_capacity(self.hamiltonians.len());
        let mut cache: Option<(Operator2, f64)> = None;
        for h in &self.hamiltonians {
            let f = match cache {
                Some((ch, f)) if ch == *h => f,
                _ => free_energy_of(h, beta)?,
            };
            cache = Some((*h, f));
            out.push(f - f0);
        }
        Ok(out)
    }
}

/// Number of steps of size `dt` in `tau`, requiring an integral ratio.
pub fn steps_for(tau: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Domain {
            name: "dt",
            value: dt,
            reason: "time step must be positive",
        });
    }
    let ratio = tau / dt;
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) || steps < 1.0 {
        return Err(Error::Grid(format!(
            "tau = {tau} µs is not an integer multiple of dt = {dt} µs"
        )));
    }
    Ok(steps as usize)
}
