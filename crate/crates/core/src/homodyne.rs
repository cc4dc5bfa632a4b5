//! Continuous homodyne monitoring of the qubit through the dispersively
//! coupled resonator.
//!
//! Over one step `δt` the averaged current `x` has the per-level densities
//!
//! ```text
//! P_j(x) = sqrt(δt/2π) · exp(−(δt/2)(x − s_j √Γ_d)²),   s_j = (−1)^j
//! ```
//!
//! and the qubit POVM is `M_x = √P₀(x)|0⟩⟨0| + √P₁(x)|1⟩⟨1|`. Everything below
//! works with `log P_j` so that strong measurements cannot underflow.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{DensityMatrix, Operator2, PureState};

/// Default cap on the per-step measurement strength `δt·Γ_d`.
pub const DEFAULT_STRENGTH_CAP: f64 = 0.05;

/// `Γ_d = 16 χ² n̄ / κ`.
pub fn measurement_rate(chi: f64, kappa: f64, nbar: f64) -> Result<f64> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::Domain {
            name: "kappa",
            value: kappa,
            reason: "resonator linewidth must be positive",
        });
    }
    if !(nbar.is_finite() && nbar >= 0.0) {
        return Err(Error::Domain {
            name: "nbar",
            value: nbar,
            reason: "mean photon number must be non-negative",
        });
    }
    if !chi.is_finite() {
        return Err(Error::Domain {
            name: "chi",
            value: chi,
            reason: "dispersive shift must be finite",
        });
    }
    Ok(16.0 * chi * chi * nbar / kappa)
}

/// Dispersive coupling `χ = g²/Δ`.
pub fn derive_chi(g: f64, detuning: f64) -> f64 {
    g * g / detuning
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    pub chi: f64,
    pub kappa: f64,
    pub nbar: f64,
    pub gamma_d: f64,
    pub dt: f64,
}

impl MeasurementModel {
    pub fn new(chi: f64, kappa: f64, nbar: f64, dt: f64) -> Result<Self> {
        Self::with_cap(chi, kappa, nbar, dt, DEFAULT_STRENGTH_CAP)
    }

    pub fn with_cap(chi: f64, kappa: f64, nbar: f64, dt: f64, cap: f64) -> Result<Self> {
        let gamma_d = measurement_rate(chi, kappa, nbar)?;
        let m = MeasurementModel {
            chi,
            kappa,
            nbar,
            gamma_d,
            dt,
        };
        m.check(cap)?;
        Ok(m)
    }

    /// Model specified directly by its measurement rate; the resonator
    /// parameters are left at placeholder values (`χ = 0`, `κ = 1`).
    pub fn from_rate(gamma_d: f64, dt: f64) -> Result<Self> {
        if !(gamma_d.is_finite() && gamma_d >= 0.0) {
            return Err(Error::Domain {
                name: "gamma_d",
                value: gamma_d,
                reason: "measurement rate must be non-negative",
            });
        }
        let m = MeasurementModel {
            chi: 0.0,
            kappa: 1.0,
            nbar: 0.0,
            gamma_d,
            dt,
        };
        m.check(DEFAULT_STRENGTH_CAP)?;
        Ok(m)
    }

    fn check(&self, cap: f64) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Domain {
                name: "dt",
                value: self.dt,
                reason: "time step must be positive",
            });
        }
        if self.dt * self.gamma_d > cap {
            return Err(Error::Domain {
                name: "dt",
                value: self.dt,
                reason: "per-step measurement strength dt·Γ_d exceeds the weak-measurement cap",
            });
        }
        Ok(())
    }

    /// Same detector at a different step size.
    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        let m = MeasurementModel { dt, ..*self };
        m.check(DEFAULT_STRENGTH_CAP)?;
        Ok(m)
    }

    #[inline]
    pub fn sqrt_gamma(&self) -> f64 {
        self.gamma_d.sqrt()
    }

    /// `t_m = 1/(2Γ_d)`.
    pub fn measurement_time(&self) -> f64 {
        1.0 / (2.0 * self.gamma_d)
    }

    /// `[log P₀(x), log P₁(x)]`.
    #[inline]
    pub fn log_likelihoods(&self, x: f64) -> [f64; 2] {
        let norm = 0.5 * (self.dt / (2.0 * PI)).ln();
        let g = self.sqrt_gamma();
        let d0 = x - g;
        let d1 = x + g;
        [
            norm - 0.5 * self.dt * d0 * d0,
            norm - 0.5 * self.dt * d1 * d1,
        ]
    }

    pub fn likelihoods(&self, x: f64) -> [f64; 2] {
        let [a, b] = self.log_likelihoods(x);
        [a.exp(), b.exp()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentSample {
    pub x: f64,
}

/// States that can be conditioned on a homodyne outcome.
pub trait Measurable: Sized {
    /// Populations `ρ₀₀, ρ₁₁` in the measurement basis.
    fn populations(&self) -> [f64; 2];

    /// Applies the diagonal Kraus operator `diag(√P₀, √P₁)` given `log P_j`
    /// and renormalizes; returns the new state and `log Tr[MρM†]`.
    fn condition(&self, log_p: [f64; 2]) -> Option<(Self, f64)>;
}

#[inline]
fn scaled_weights(pop: [f64; 2], log_p: [f64; 2]) -> (f64, [f64; 2], f64) {
    let lmax = log_p[0].max(log_p[1]);
    let r = [(log_p[0] - lmax).exp(), (log_p[1] - lmax).exp()];
    let w = pop[0] * r[0] + pop[1] * r[1];
    (lmax, r, w)
}

impl Measurable for DensityMatrix {
    fn populations(&self) -> [f64; 2] {
        [self.rho00(), self.rho11()]
    }

    fn condition(&self, log_p: [f64; 2]) -> Option<(Self, f64)> {
        let (lmax, r, w) = scaled_weights(self.populations(), log_p);
        if !(w > 0.0 && w.is_finite()) {
            return None;
        }
        let rho00 = self.rho00() * r[0] / w;
        let rho01 = self.rho01() * ((r[0] * r[1]).sqrt() / w);
        Some((DensityMatrix::from_components(rho00, rho01), lmax + w.ln()))
    }
}

impl Measurable for PureState {
    fn populations(&self) -> [f64; 2] {
        [self.population(0), self.population(1)]
    }

    fn condition(&self, log_p: [f64; 2]) -> Option<(Self, f64)> {
        let (lmax, r, w) = scaled_weights(self.populations(), log_p);
        if !(w > 0.0 && w.is_finite()) {
            return None;
        }
        let s = w.sqrt();
        let c = self.amplitudes();
        let out = PureState::from_normalized([c[0] * (r[0].sqrt() / s), c[1] * (r[1].sqrt() / s)]);
        Some((out, lmax + w.ln()))
    }
}

/// Born density of outcome `x`: `ρ₀₀P₀(x) + ρ₁₁P₁(x)`.
pub fn outcome_density<S: Measurable>(m: &MeasurementModel, state: &S, x: f64) -> f64 {
    log_outcome_density(m, state, x).exp()
}

pub fn log_outcome_density<S: Measurable>(m: &MeasurementModel, state: &S, x: f64) -> f64 {
    let (lmax, _, w) = scaled_weights(state.populations(), m.log_likelihoods(x));
    lmax + w.ln()
}

/// Draws a level `j` with probability `ρ_jj`, then `x ~ N(s_j √Γ_d, 1/√δt)`.
pub fn sample_current<S: Measurable, R: Rng + ?Sized>(
    m: &MeasurementModel,
    state: &S,
    rng: &mut R,
) -> CurrentSample {
    let u: f64 = rng.random();
    let sign = if u < state.populations()[0] {
        1.0
    } else {
        -1.0
    };
    let z: f64 = rng.sample(StandardNormal);
    CurrentSample {
        x: sign * m.sqrt_gamma() + z / m.dt.sqrt(),
    }
}

pub fn povm_element(m: &MeasurementModel, x: f64) -> Operator2 {
    let [p0, p1] = m.likelihoods(x);
    Operator2::diagonal(p0.sqrt(), p1.sqrt())
}

/// `M_x ρ M_x† / w` with `w = Tr[M_x ρ M_x†]`; returns `(ρ′, log w)`.
pub fn measurement_update<S: Measurable>(
    state: &S,
    m: &MeasurementModel,
    x: f64,
) -> Result<(S, f64)> {
    state
        .condition(m.log_likelihoods(x))
        .ok_or(Error::Underflow { x })
}

/// Ratio `ρ′₀₁/ρ₀₁ = √(P₀P₁)/(ρ₀₀P₀ + ρ₁₁P₁)` of a measurement update.
pub fn coherence_factor(m: &MeasurementModel, pop: [f64; 2], x: f64) -> f64 {
    let (_, r, w) = scaled_weights(pop, m.log_likelihoods(x));
    (r[0] * r[1]).sqrt() / w
}
