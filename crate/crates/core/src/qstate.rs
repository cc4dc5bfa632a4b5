//! Exact 2×2 complex linear algebra for a single qubit.
//!
//! Basis convention: index `j ∈ {0, 1}` is the σ_z eigenstate with eigenvalue
//! `s_j = (-1)^j`, so `|0⟩` is σ_z = +1. Every Hermitian operator is handled
//! through its Pauli decomposition `h0·1 + hx·σx + hy·σy + hz·σz`, which gives
//! closed-form eigensystems and exact exponentials.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Relative tolerance for the Hermiticity contract.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A 2×2 complex operator.
///
/// `hermitian` records whether the operator is known to be Hermitian; it is set
/// by the constructors that guarantee it and by [`Operator2::into_hermitian`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operator2 {
    m: [[C64; 2]; 2],
    hermitian: bool,
}

impl Operator2 {
    pub fn new(a00: C64, a01: C64, a10: C64, a11: C64) -> Self {
        Operator2 {
            m: [[a00, a01], [a10, a11]],
            hermitian: false,
        }
    }

    /// `h0·1 + hx·σx + hy·σy + hz·σz`.
    pub fn from_pauli(h0: f64, hx: f64, hy: f64, hz: f64) -> Self {
        Operator2 {
            m: [
                [C64::new(h0 + hz, 0.0), C64::new(hx, -hy)],
                [C64::new(hx, hy), C64::new(h0 - hz, 0.0)],
            ],
            hermitian: true,
        }
    }

    pub fn real_symmetric(a00: f64, a01: f64, a11: f64) -> Self {
        Operator2 {
            m: [
                [C64::new(a00, 0.0), C64::new(a01, 0.0)],
                [C64::new(a01, 0.0), C64::new(a11, 0.0)],
            ],
            hermitian: true,
        }
    }

    pub fn diagonal(a00: f64, a11: f64) -> Self {
        Self::real_symmetric(a00, 0.0, a11)
    }

    pub fn zero() -> Self {
        Self::from_pauli(0.0, 0.0, 0.0, 0.0)
    }

    pub fn identity() -> Self {
        Self::from_pauli(1.0, 0.0, 0.0, 0.0)
    }

    pub fn sigma_x() -> Self {
        Self::from_pauli(0.0, 1.0, 0.0, 0.0)
    }

    pub fn sigma_y() -> Self {
        Self::from_pauli(0.0, 0.0, 1.0, 0.0)
    }

    pub fn sigma_z() -> Self {
        Self::from_pauli(0.0, 0.0, 0.0, 1.0)
    }

    /// σ₊ = |0⟩⟨1| raises σ_z from −1 to +1.
    pub fn sigma_plus() -> Self {
        Self::new(ZERO, ONE, ZERO, ZERO)
    }

    /// σ₋ = |1⟩⟨0|.
    pub fn sigma_minus() -> Self {
        Self::new(ZERO, ZERO, ONE, ZERO)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[i][j]
    }

    pub fn is_flagged_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Largest violation of `a01 = conj(a10)` and real diagonal.
    pub fn hermiticity_deviation(&self) -> f64 {
        let off = (self.m[0][1] - self.m[1][0].conj()).norm();
        off.max(self.m[0][0].im.abs()).max(self.m[1][1].im.abs())
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() <= HERMITIAN_TOL * self.norm().max(1.0)
    }

    /// Checks the Hermiticity contract and sets the flag.
    pub fn into_hermitian(mut self) -> Result<Self> {
        if self.hermitian {
            return Ok(self);
        }
        let deviation = self.hermiticity_deviation();
        if deviation > HERMITIAN_TOL * self.norm().max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        self.hermitian = true;
        Ok(self)
    }

    pub(crate) fn require_hermitian(&self) -> Result<()> {
        if self.hermitian || self.is_hermitian() {
            Ok(())
        } else {
            Err(Error::NotHermitian {
                deviation: self.hermiticity_deviation(),
            })
        }
    }

    /// `(h0, hx, hy, hz)`, reading the Hermitian part of the operator.
    pub fn pauli_components(&self) -> (f64, f64, f64, f64) {
        let h0 = 0.5 * (self.m[0][0].re + self.m[1][1].re);
        let hz = 0.5 * (self.m[0][0].re - self.m[1][1].re);
        let lower = 0.5 * (self.m[1][0] + self.m[0][1].conj());
        (h0, lower.re, lower.im, hz)
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Operator2 {
            m: [
                [m[0][0].conj(), m[1][0].conj()],
                [m[0][1].conj(), m[1][1].conj()],
            ],
            hermitian: self.hermitian,
        }
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for z in out.m.iter_mut().flatten() {
            *z *= s;
        }
        out
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        let mut out = *self;
        for z in out.m.iter_mut().flatten() {
            *z *= s;
        }
        out.hermitian = self.hermitian && s.im == 0.0;
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        let mut c = (*self * *other) - (*other * *self);
        c.hermitian = false;
        c
    }

    pub fn apply(&self, psi: &PureState) -> [C64; 2] {
        [
            self.m[0][0] * psi.c[0] + self.m[0][1] * psi.c[1],
            self.m[1][0] * psi.c[0] + self.m[1][1] * psi.c[1],
        ]
    }

    /// `A ρ A†` without normalization.
    pub fn sandwich(&self, rho: &Self) -> Self {
        let mut out = *self * *rho * self.adjoint();
        out.hermitian = rho.hermitian;
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Add for Operator2 {
    type Output = Operator2;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] += rhs.m[i][j];
            }
        }
        out.hermitian = self.hermitian && rhs.hermitian;
        out
    }
}

impl Sub for Operator2 {
    type Output = Operator2;
    fn sub(self, rhs: Self) -> Self {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] -= rhs.m[i][j];
            }
        }
        out.hermitian = self.hermitian && rhs.hermitian;
        out
    }
}

impl Mul for Operator2 {
    type Output = Operator2;
    fn mul(self, rhs: Self) -> Self {
        let a = &self.m;
        let b = &rhs.m;
        Operator2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// Normalized qubit state vector `c0|0⟩ + c1|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    c: [C64; 2],
}

impl PureState {
    /// Normalizes the amplitudes; fails on a zero vector.
    pub fn new(c0: C64, c1: C64) -> Result<Self> {
        let n = (c0.norm_sqr() + c1.norm_sqr()).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidState(format!(
                "cannot normalize amplitudes ({c0}, {c1})"
            )));
        }
        Ok(PureState {
            c: [c0 / n, c1 / n],
        })
    }

    pub fn basis(j: usize) -> Self {
        assert!(j < 2, "qubit basis index must be 0 or 1");
        let mut c = [ZERO; 2];
        c[j] = ONE;
        PureState { c }
    }

    pub(crate) fn from_normalized(c: [C64; 2]) -> Self {
        PureState { c }
    }

    #[inline]
    pub fn amplitude(&self, j: usize) -> C64 {
        self.c[j]
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        self.c
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c[0].norm_sqr() + self.c[1].norm_sqr()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.c[0].conj() * other.c[0] + self.c[1].conj() * other.c[1]
    }

    pub fn population(&self, j: usize) -> f64 {
        self.c[j].norm_sqr()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    pub fn projector(&self) -> Operator2 {
        let [a, b] = self.c;
        let mut p = Operator2::new(a * a.conj(), a * b.conj(), b * a.conj(), b * b.conj());
        p.hermitian = true;
        p
    }

    /// `⟨ψ|A|ψ⟩` for Hermitian A.
    pub fn expectation(&self, a: &Operator2) -> f64 {
        let v = a.apply(self);
        (self.c[0].conj() * v[0] + self.c[1].conj() * v[1]).re
    }

    /// Global-phase–insensitive distance `1 − |⟨a|b⟩|²`.
    pub fn infidelity(&self, other: &PureState) -> f64 {
        1.0 - self.inner(other).norm_sqr()
    }

    /// Fixes the global phase so the first amplitude above `1e-14` is real positive.
    pub fn with_canonical_phase(self) -> Self {
        let pivot = if self.c[0].norm() > 1e-14 {
            self.c[0]
        } else {
            self.c[1]
        };
        let phase = pivot.conj() / pivot.norm();
        PureState {
            c: [self.c[0] * phase, self.c[1] * phase],
        }
    }
}

/// Qubit density matrix (Hermitian, unit trace, positive semidefinite).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    op: Operator2,
}

/// Tolerances of the density-matrix invariants.
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_DET_TOL: f64 = 1e-10;
pub const PSD_DIAG_TOL: f64 = 1e-12;

impl DensityMatrix {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(op: Operator2) -> Result<Self> {
        let op = op
            .into_hermitian()
            .map_err(|_| Error::InvalidState("density matrix is not Hermitian".into()))?;
        let rho = DensityMatrix { op };
        rho.validate()?;
        Ok(rho)
    }

    pub fn from_pure(psi: &PureState) -> Self {
        DensityMatrix {
            op: psi.projector(),
        }
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix {
            op: Operator2::identity().scale(0.5),
        }
    }

    pub fn basis(j: usize) -> Self {
        Self::from_pure(&PureState::basis(j))
    }

    /// `(1 + r·σ)/2`; requires `|r| ≤ 1`.
    pub fn from_bloch(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(Operator2::from_pauli(0.5, 0.5 * x, 0.5 * y, 0.5 * z))
    }

    pub(crate) fn from_components(rho00: f64, rho01: C64) -> Self {
        let mut op = Operator2::new(
            C64::new(rho00, 0.0),
            rho01,
            rho01.conj(),
            C64::new(1.0 - rho00, 0.0),
        );
        op.hermitian = true;
        DensityMatrix { op }
    }

    pub(crate) fn from_operator_unchecked(op: Operator2) -> Self {
        let mut op = op;
        // symmetrize away rounding so downstream reads stay Hermitian
        let off = 0.5 * (op.m[0][1] + op.m[1][0].conj());
        op.m[0][1] = off;
        op.m[1][0] = off.conj();
        op.m[0][0].im = 0.0;
        op.m[1][1].im = 0.0;
        op.hermitian = true;
        DensityMatrix { op }
    }

    pub fn validate(&self) -> Result<()> {
        let tr = self.op.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        if self.op.hermiticity_deviation() > HERMITIAN_TOL {
            return Err(Error::InvalidState(
                "density matrix is not Hermitian".into(),
            ));
        }
        let det = self.op.det().re;
        if det < -PSD_DET_TOL || self.rho00() < -PSD_DIAG_TOL || self.rho11() < -PSD_DIAG_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix is not positive semidefinite (det {det:e})"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn rho00(&self) -> f64 {
        self.op.m[0][0].re
    }

    #[inline]
    pub fn rho11(&self) -> f64 {
        self.op.m[1][1].re
    }

    #[inline]
    pub fn rho01(&self) -> C64 {
        self.op.m[0][1]
    }

    pub fn population(&self, j: usize) -> f64 {
        self.op.m[j][j].re
    }

    pub fn as_operator(&self) -> &Operator2 {
        &self.op
    }

    /// Bloch vector `(x, y, z)` with `ρ = (1 + r·σ)/2`.
    pub fn bloch(&self) -> [f64; 3] {
        let r01 = self.rho01();
        [2.0 * r01.re, -2.0 * r01.im, self.rho00() - self.rho11()]
    }

    pub fn purity(&self) -> f64 {
        (self.op * self.op).trace().re
    }

    /// `½‖ρ − σ‖₁`, which for qubits is half the Bloch-vector distance.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let a = self.bloch();
        let b = other.bloch();
        0.5 * ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }
}

/// Closed-form eigendecomposition of a Hermitian 2×2 operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigensystem {
    pub eps_minus: f64,
    pub eps_plus: f64,
    pub v_minus: PureState,
    pub v_plus: PureState,
}

impl Eigensystem {
    /// Energy with label `k`: 0 is the lower level, 1 the upper.
    pub fn energy(&self, k: usize) -> f64 {
        match k {
            0 => self.eps_minus,
            1 => self.eps_plus,
            _ => panic!("eigen-label must be 0 or 1"),
        }
    }

    pub fn vector(&self, k: usize) -> &PureState {
        match k {
            0 => &self.v_minus,
            1 => &self.v_plus,
            _ => panic!("eigen-label must be 0 or 1"),
        }
    }

    pub fn projector(&self, k: usize) -> Operator2 {
        self.vector(k).projector()
    }

    /// Populations `⟨k|ρ|k⟩` in the eigenbasis.
    pub fn populations(&self, rho: &DensityMatrix) -> [f64; 2] {
        [
            expectation(rho, &self.projector(0)),
            expectation(rho, &self.projector(1)),
        ]
    }

    pub fn reconstruct(&self) -> Operator2 {
        self.projector(0).scale(self.eps_minus) + self.projector(1).scale(self.eps_plus)
    }
}

pub fn eigensystem(h: &Operator2) -> Result<Eigensystem> {
    h.require_hermitian()?;
    let (h0, hx, hy, hz) = h.pauli_components();
    let r = (hx * hx + hy * hy + hz * hz).sqrt();
    let (v_plus, v_minus) = if r == 0.0 {
        (PureState::basis(0), PureState::basis(1))
    } else {
        let raw = if hz >= 0.0 {
            [C64::new(hz + r, 0.0), C64::new(hx, hy)]
        } else {
            [C64::new(hx, -hy), C64::new(r - hz, 0.0)]
        };
        let plus = PureState::new(raw[0], raw[1])?;
        let [a, b] = plus.amplitudes();
        let minus = PureState::from_normalized([-b.conj(), a.conj()]);
        (plus.with_canonical_phase(), minus.with_canonical_phase())
    };
    Ok(Eigensystem {
        eps_minus: h0 - r,
        eps_plus: h0 + r,
        v_minus,
        v_plus,
    })
}

/// Thermal state `e^{−βH}/Z` together with its partition function.
#[derive(Debug, Clone, Copy)]
pub struct GibbsState {
    pub rho: DensityMatrix,
    pub log_z: f64,
    /// Populations of the eigen-labels (0 = lower level).
    pub populations: [f64; 2],
    pub eigen: Eigensystem,
}

pub fn gibbs_state(h: &Operator2, beta: f64) -> Result<GibbsState> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::Domain {
            name: "beta",
            value: beta,
            reason: "inverse temperature must be finite and non-negative",
        });
    }
    let eigen = eigensystem(h)?;
    let gap = eigen.eps_plus - eigen.eps_minus;
    let boltzmann = (-beta * gap).exp();
    let p_upper = boltzmann / (1.0 + boltzmann);
    let p_lower = 1.0 / (1.0 + boltzmann);
    let log_z = -beta * eigen.eps_minus + boltzmann.ln_1p();
    let op = eigen.projector(0).scale(p_lower) + eigen.projector(1).scale(p_upper);
    Ok(GibbsState {
        rho: DensityMatrix::from_operator_unchecked(op),
        log_z,
        populations: [p_lower, p_upper],
        eigen,
    })
}

/// Exact propagator `e^{−iH·dt}` of a constant Hermitian generator.
pub fn propagator(h: &Operator2, dt: f64) -> Operator2 {
    let (h0, hx, hy, hz) = h.pauli_components();
    let r = (hx * hx + hy * hy + hz * hz).sqrt();
    let global = C64::from_polar(1.0, -h0 * dt);
    if r == 0.0 {
        return Operator2::identity().scale_complex(global);
    }
    let (s, c) = (r * dt).sin_cos();
    let k = s / r;
    // cos(r dt)·1 − i sin(r dt)/r · (h·σ)
    let u = Operator2::new(
        C64::new(c, -k * hz),
        -I * k * C64::new(hx, -hy),
        -I * k * C64::new(hx, hy),
        C64::new(c, k * hz),
    );
    u.scale_complex(global)
}

/// States that can be carried through a unitary.
pub trait Evolve: Sized {
    fn transform(&self, u: &Operator2) -> Self;
}

impl Evolve for PureState {
    fn transform(&self, u: &Operator2) -> Self {
        PureState::from_normalized(u.apply(self))
    }
}

impl Evolve for DensityMatrix {
    fn transform(&self, u: &Operator2) -> Self {
        DensityMatrix::from_operator_unchecked(u.sandwich(&self.op))
    }
}

/// Applies `e^{−iH·dt}` exactly.
pub fn unitary_step<S: Evolve>(state: &S, h: &Operator2, dt: f64) -> S {
    debug_assert!(h.is_flagged_hermitian() || h.is_hermitian());
    state.transform(&propagator(h, dt))
}

/// `Tr[ρA]`.
pub fn expectation(rho: &DensityMatrix, a: &Operator2) -> f64 {
    (rho.op * *a).trace().re
}

/// Antiunitary time reversal Θ = K (complex conjugation in the σ_z basis).
pub trait TimeReverse {
    fn time_reverse(&self) -> Self;
}

impl TimeReverse for PureState {
    fn time_reverse(&self) -> Self {
        PureState::from_normalized([self.c[0].conj(), self.c[1].conj()])
    }
}

impl TimeReverse for Operator2 {
    fn time_reverse(&self) -> Self {
        let mut out = *self;
        for z in out.m.iter_mut().flatten() {
            *z = z.conj();
        }
        out
    }
}

impl TimeReverse for DensityMatrix {
    fn time_reverse(&self) -> Self {
        DensityMatrix {
            op: self.op.time_reverse(),
        }
    }
}

/// Compact real parametrization of a qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub rho00: f64,
    pub re01: f64,
    pub im01: f64,
}

impl BlochVector {
    pub fn rho11(&self) -> f64 {
        1.0 - self.rho00
    }

    pub fn rho01(&self) -> C64 {
        C64::new(self.re01, self.im01)
    }

    pub fn sigma_z(&self) -> f64 {
        2.0 * self.rho00 - 1.0
    }

    /// Length of `r` in `ρ = (1 + r·σ)/2`.
    pub fn radius(&self) -> f64 {
        let z = self.sigma_z();
        (z * z + 4.0 * (self.re01 * self.re01 + self.im01 * self.im01)).sqrt()
    }

    pub fn is_physical(&self) -> bool {
        (0.0..=1.0).contains(&self.rho00)
            && self.re01 * self.re01 + self.im01 * self.im01 <= self.rho00 * self.rho11() + 1e-9
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_components(self.rho00, self.rho01())
    }
}

impl From<&DensityMatrix> for BlochVector {
    fn from(rho: &DensityMatrix) -> Self {
        let r01 = rho.rho01();
        BlochVector {
            rho00: rho.rho00(),
            re01: r01.re,
            im01: r01.im,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn two_pi() -> f64 {
        2.0 * PI
    }

    #[test]
    fn gibbs_infinite_temperature_is_maximally_mixed() {
        let h = Operator2::from_pauli(0.3, 1.2, -0.4, 2.0);
        let g = gibbs_state(&h, 0.0).unwrap();
        assert!(
            g.rho
                .as_operator()
                .max_abs_diff(&DensityMatrix::maximally_mixed().op)
                < 1e-15
        );
        assert!((g.log_z - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn gibbs_two_level_populations() {
        let omega0 = two_pi() * 4000.0;
        let h = Operator2::sigma_z().scale(omega0 / 2.0);
        for (beta_w, expected) in [(1.0, 1.0 / (1.0 + E)), (2.0, 1.0 / (1.0 + E * E))] {
            let g = gibbs_state(&h, beta_w / omega0).unwrap();
            // σ_z = +1 is basis state 0, the upper level here
            assert!((g.rho.rho00() - expected).abs() < 1e-14);
            assert!((g.populations[1] - expected).abs() < 1e-14);
        }
        assert!((1.0 / (1.0 + E) - 0.26894).abs() < 1e-5);
        assert!((1.0 / (1.0 + E * E) - 0.11920).abs() < 1e-5);
    }

    #[test]
    fn gibbs_rejects_non_hermitian() {
        let h = Operator2::new(ONE, ONE, ZERO, ONE);
        assert!(matches!(
            gibbs_state(&h, 1.0),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn eigensystem_of_paulis() {
        let z = eigensystem(&Operator2::sigma_z()).unwrap();
        assert_eq!((z.eps_minus, z.eps_plus), (-1.0, 1.0));
        assert!(z.v_minus.infidelity(&PureState::basis(1)) < 1e-15);
        assert!(z.v_plus.infidelity(&PureState::basis(0)) < 1e-15);

        let x = eigensystem(&Operator2::sigma_x()).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((x.v_plus.amplitude(0) - C64::new(s, 0.0)).norm() < 1e-15);
        assert!((x.v_plus.amplitude(1) - C64::new(s, 0.0)).norm() < 1e-15);
        assert!((x.v_minus.amplitude(0) - C64::new(s, 0.0)).norm() < 1e-15);
        assert!((x.v_minus.amplitude(1) - C64::new(-s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eigensystem_post_quench_hamiltonian() {
        let tp = two_pi();
        let h = Operator2::real_symmetric(tp * 2200.0, tp * 1.0, -tp * 2200.0);
        let e = eigensystem(&h).unwrap();
        let expected = tp * (2200f64.powi(2) + 1.0).sqrt();
        assert!((e.eps_plus - expected).abs() < 1e-10 * expected);
        assert!((e.eps_minus + expected).abs() < 1e-10 * expected);
        assert!((e.eps_plus / tp - 2200.00023).abs() < 1e-5);
    }

    #[test]
    fn unitary_rabi_flip_and_precession() {
        let omega = 3.7;
        let flipped = unitary_step(
            &PureState::basis(0),
            &Operator2::sigma_x().scale(omega),
            PI / (2.0 * omega),
        );
        assert!(flipped.population(1) > 1.0 - 1e-15);

        let w = 2.5;
        let dt = 0.31;
        let rho = DensityMatrix::from_bloch(0.6, 0.2, 0.3).unwrap();
        let out = unitary_step(&rho, &Operator2::sigma_z().scale(w / 2.0), dt);
        assert!((out.rho00() - rho.rho00()).abs() < 1e-15);
        let expect = rho.rho01() * C64::from_polar(1.0, -w * dt);
        assert!((out.rho01() - expect).norm() < 1e-15);

        let same = unitary_step(&rho, &Operator2::zero(), 1.0);
        assert!(same.as_operator().max_abs_diff(rho.as_operator()) < 1e-16);
    }

    #[test]
    fn expectation_reads_bloch_components() {
        let rho = DensityMatrix::from_bloch(0.3, -0.5, 0.1).unwrap();
        assert!((expectation(&rho, &Operator2::sigma_x()) - 0.3).abs() < 1e-15);
        assert!((expectation(&rho, &Operator2::sigma_y()) + 0.5).abs() < 1e-15);
        assert_eq!(
            expectation(&DensityMatrix::maximally_mixed(), &Operator2::sigma_z()),
            0.0
        );
        assert_eq!(
            expectation(&DensityMatrix::basis(0), &Operator2::sigma_z()),
            1.0
        );
    }

    #[test]
    fn time_reversal_conjugates() {
        let s = 1.0 / 2f64.sqrt();
        let v = PureState::new(C64::new(s, 0.0), C64::new(0.0, s)).unwrap();
        let tv = v.time_reverse();
        assert!((tv.amplitude(1) - C64::new(0.0, -s)).norm() < 1e-15);
        let m = Operator2::diagonal(0.7, 0.2);
        assert_eq!(m.time_reverse(), m);
    }

    #[test]
    fn density_validation_rejects_unphysical() {
        assert!(DensityMatrix::from_bloch(0.9, 0.9, 0.0).is_err());
        assert!(DensityMatrix::new(Operator2::identity()).is_err());
        assert!(DensityMatrix::new(Operator2::diagonal(0.5, 0.5)).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn hermitian() -> impl Strategy<Value = Operator2> {
            (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64)
                .prop_map(|(a, b, c, d)| Operator2::from_pauli(a, b, c, d))
        }

        fn state() -> impl Strategy<Value = PureState> {
            (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
                .prop_filter("nonzero", |(a, b, c, d)| {
                    a * a + b * b + c * c + d * d > 1e-3
                })
                .prop_map(|(a, b, c, d)| PureState::new(C64::new(a, b), C64::new(c, d)).unwrap())
        }

        proptest! {
            #[test]
            fn eigensystem_reconstructs(h in hermitian()) {
                let e = eigensystem(&h).unwrap();
                let scale = h.norm().max(1e-300);
                prop_assert!(e.reconstruct().max_abs_diff(&h) <= 1e-10 * scale);
                prop_assert!(e.v_minus.inner(&e.v_plus).norm() < 1e-10);
                for k in 0..2 {
                    let v = e.vector(k);
                    let hv = h.apply(v);
                    let res = ((hv[0] - v.amplitude(0) * e.energy(k)).norm_sqr()
                        + (hv[1] - v.amplitude(1) * e.energy(k)).norm_sqr()).sqrt();
                    prop_assert!(res <= 1e-10 * scale);
                }
            }

            #[test]
            fn unitary_steps_compose(h in hermitian(), psi in state(), a in 0.0..2.0f64, b in 0.0..2.0f64) {
                let rho = psi.to_density();
                let two = unitary_step(&unitary_step(&rho, &h, a), &h, b);
                let one = unitary_step(&rho, &h, a + b);
                prop_assert!(two.as_operator().max_abs_diff(one.as_operator()) < 1e-10);
                prop_assert!((two.purity() - 1.0).abs() < 1e-12);
                prop_assert!(two.validate().is_ok());
            }

            #[test]
            fn gibbs_commutes_with_hamiltonian(h in hermitian(), beta in 0.0..3.0f64) {
                let g = gibbs_state(&h, beta).unwrap();
                prop_assert!(g.rho.validate().is_ok());
                let c = g.rho.as_operator().commutator(&h);
                prop_assert!(c.norm() <= 1e-10 * h.norm().max(1.0));
            }

            #[test]
            fn time_reversal_is_involutive(psi in state(), h in hermitian()) {
                prop_assert_eq!(psi.time_reverse().time_reverse(), psi);
                prop_assert_eq!(h.time_reverse().time_reverse(), h);
            }
        }
    }
}
