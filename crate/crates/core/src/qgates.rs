//! Coherent-state qubits `|0⟩_L = |−α⟩`, `|1⟩_L = |α⟩` and a universal gate
//! set built from linear optics, cat resources and photon counting.
//!
//! Multi-qubit registers are read out in the computational basis with qubit
//! `encs[0]` as the most significant bit.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::cstate::{coherent_overlap, CoherentSuperposition, CoherentTerm};
use crate::error::{Error, Result};
use crate::measure::{bell_measurement_resolved, bell_outcomes, cat_projection, BellClass, Outcome};
use crate::optics::{beamsplitter, bell_cat_resource, displace, phase_shift, BeamSplitterSpec};

/// Give up on repeat-until-success loops after this many attempts.
pub const RUS_LIMIT: usize = 64;
/// `gate_rz` records a warning above this value of `θ²α²`.
pub const RZ_WARN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitEncoding {
    pub alpha: f64,
    pub mode: usize,
}

impl QubitEncoding {
    pub fn new(alpha: f64, mode: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("qubit amplitude must be positive, got {alpha}")));
        }
        Ok(QubitEncoding { alpha, mode })
    }

    /// Coherent amplitude of logical `bit`.
    pub fn amplitude(&self, bit: bool) -> Complex64 {
        Complex64::new(if bit { self.alpha } else { -self.alpha }, 0.0)
    }
}

/// Residual Pauli left by a teleportation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Identity,
    Z,
    Failed,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Identity => "identity",
            Branch::Z => "Z",
            Branch::Failed => "failed",
        })
    }
}

/// How the Bell measurement inside a teleportation treats input that has
/// drifted out of the code space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TeleportModel {
    /// Each coherent component is first replaced by its overlap with the
    /// nearest code state, `c|γ⟩ → c⟨±α|γ⟩|±α⟩`, treating `|±α⟩` as
    /// orthogonal. The code-space teleport that follows is exact.
    #[default]
    Orthogonal,
    /// Number-resolving detection on the raw input. Exact, but for inputs
    /// outside the code space the output depends on the individual counts.
    PhotonCounting,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    Projected { mode: usize, weight: f64 },
    Teleported { mode: usize, class: BellClass, branch: Branch, probability: f64 },
    Displaced { mode: usize, beta: Complex64 },
    BeamSplitter { a: usize, b: usize, theta: f64 },
    CatProjection { mode: usize, sign: f64, probability: f64 },
    PauliX { mode: usize },
    Warning(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateOutcome {
    pub state: CoherentSuperposition,
    pub success: bool,
    pub applied: Branch,
    /// Product of the probabilities of every sampled branch.
    pub probability: f64,
    /// Product of the norms lost to code-space projections.
    pub amplitude: f64,
    /// Teleportations performed.
    pub repetitions: usize,
    pub trace: Vec<TraceEvent>,
}

impl GateOutcome {
    fn start(state: CoherentSuperposition) -> Self {
        GateOutcome { state, success: true, applied: Branch::Identity, probability: 1.0, amplitude: 1.0, repetitions: 0, trace: Vec::new() }
    }

    fn absorb(&mut self, next: GateOutcome) {
        self.state = next.state;
        self.success = next.success;
        self.applied = next.applied;
        self.probability *= next.probability;
        self.amplitude *= next.amplitude;
        self.repetitions += next.repetitions;
        self.trace.extend(next.trace);
    }
}

/// Normalized `μ|−α⟩ + ν|α⟩` on a single mode.
pub fn encode(mu: Complex64, nu: Complex64, enc: QubitEncoding) -> Result<CoherentSuperposition> {
    encode_register(&[mu, nu], &[QubitEncoding { mode: 0, ..enc }])
}

/// Normalized register state with the given computational amplitudes.
/// Qubit `i` lives in mode `encs[i].mode`.
pub fn encode_register(amps: &[Complex64], encs: &[QubitEncoding]) -> Result<CoherentSuperposition> {
    check_register(encs, encs.len())?;
    let n = encs.len();
    if amps.len() != 1 << n {
        return Err(Error::InvalidParameter(format!("{} amplitudes for {n} qubits", amps.len())));
    }
    if amps.iter().all(|a| a.norm_sqr() == 0.0) {
        return Err(Error::ZeroNorm(0.0));
    }
    let terms =
        amps.iter().enumerate().filter(|(_, a)| a.norm_sqr() > 0.0).map(|(k, &a)| CoherentTerm::new(a, register_amps(k, encs))).collect();
    CoherentSuperposition::new(n, terms)?.normalize()
}

fn bit(k: usize, i: usize, n: usize) -> bool {
    (k >> (n - 1 - i)) & 1 == 1
}

fn register_amps(k: usize, encs: &[QubitEncoding]) -> Vec<Complex64> {
    let n = encs.len();
    let mut amps = vec![Complex64::new(0.0, 0.0); n];
    for (i, e) in encs.iter().enumerate() {
        amps[e.mode] = e.amplitude(bit(k, i, n));
    }
    amps
}

fn check_register(encs: &[QubitEncoding], modes: usize) -> Result<()> {
    if encs.len() != modes {
        return Err(Error::ModeMismatch(encs.len(), modes));
    }
    for (i, e) in encs.iter().enumerate() {
        if e.mode >= modes {
            return Err(Error::InvalidMode { index: e.mode, modes });
        }
        if encs[..i].iter().any(|o| o.mode == e.mode) {
            return Err(Error::SameMode(e.mode));
        }
    }
    Ok(())
}

/// Coefficients of a single-mode state in the `{|−α⟩, |α⟩}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoded {
    pub mu: Complex64,
    pub nu: Complex64,
    /// Weight outside `span{|±α⟩}`.
    pub leakage: f64,
}

impl Decoded {
    /// `(μ, ν)` rescaled to unit Euclidean norm.
    pub fn logical(&self) -> [Complex64; 2] {
        let n = (self.mu.norm_sqr() + self.nu.norm_sqr()).sqrt();
        [self.mu / n, self.nu / n]
    }

    /// `arg(ν/μ)`.
    pub fn relative_phase(&self) -> f64 {
        (self.nu / self.mu).arg()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedRegister {
    pub amplitudes: DVector<Complex64>,
    pub leakage: f64,
}

impl DecodedRegister {
    pub fn logical(&self) -> DVector<Complex64> {
        let n = self.amplitudes.norm();
        &self.amplitudes / Complex64::new(n, 0.0)
    }

    pub fn density(&self) -> DMatrix<Complex64> {
        let v = self.logical();
        &v * v.adjoint()
    }
}

pub fn decode(s: &CoherentSuperposition, enc: QubitEncoding) -> Result<Decoded> {
    let r = decode_register(s, &[enc])?;
    Ok(Decoded { mu: r.amplitudes[0], nu: r.amplitudes[1], leakage: r.leakage })
}

/// Least-squares coefficients in the nonorthogonal product basis, from the
/// Gram system `G c = r` with `r_k = ⟨k|s⟩`.
pub fn decode_register(s: &CoherentSuperposition, encs: &[QubitEncoding]) -> Result<DecodedRegister> {
    check_register(encs, s.modes())?;
    let n = encs.len();
    let dim = 1usize << n;
    let mut gram = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for e in encs {
        let g = coherent_overlap(e.amplitude(false), e.amplitude(true));
        let one = Complex64::new(1.0, 0.0);
        let block = DMatrix::from_row_slice(2, 2, &[one, g, g.conj(), one]);
        gram = gram.kronecker(&block);
    }
    let basis: Vec<Vec<Complex64>> = (0..dim).map(|k| register_amps(k, encs)).collect();
    let r = DVector::from_iterator(
        dim,
        basis.iter().map(|b| {
            s.terms()
                .iter()
                .map(|t| t.coeff * b.iter().zip(&t.amps).map(|(&x, &y)| coherent_overlap(x, y)).product::<Complex64>())
                .sum::<Complex64>()
        }),
    );
    let min_sep = encs.iter().map(|e| 1.0 - (-4.0 * e.alpha * e.alpha).exp()).fold(1.0, f64::min);
    let chol = if min_sep > 1e-12 { gram.cholesky() } else { None };
    let chol = chol.ok_or_else(|| Error::InvalidParameter("Gram system singular: qubit amplitude too small".into()))?;
    let c = chol.solve(&r);
    let captured = r.dotc(&c).re;
    let leakage = (1.0 - captured / s.norm_sqr()).clamp(0.0, 1.0);
    Ok(DecodedRegister { amplitudes: c, leakage })
}

/// `X = P(π)`: swaps `|±α⟩`.
pub fn gate_x(s: &CoherentSuperposition, enc: QubitEncoding) -> Result<CoherentSuperposition> {
    phase_shift(s, enc.mode, PI)
}

/// Replaces every component of `enc.mode` by its overlap with the nearest
/// code state; returns the normalized result and the norm it kept.
pub fn project_code(s: &CoherentSuperposition, enc: QubitEncoding) -> Result<(CoherentSuperposition, f64)> {
    s.check_mode(enc.mode)?;
    let (plus, minus) = (enc.amplitude(true), enc.amplitude(false));
    let before = s.norm_sqr();
    let p = s
        .map_terms(|t| {
            let g = t.amps[enc.mode];
            let near = if (g - plus).norm() <= (g - minus).norm() { plus } else { minus };
            t.coeff *= coherent_overlap(near, g);
            t.amps[enc.mode] = near;
        })
        .merged();
    let weight = (p.norm_sqr() / before).sqrt();
    Ok((p.normalize()?, weight))
}

/// One possible result of teleporting a code-space qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct TeleportBranch {
    pub class: BellClass,
    pub branch: Branch,
    pub probability: f64,
    /// Output with the X correction applied and the qubit back in `enc.mode`.
    pub state: Option<CoherentSuperposition>,
}

/// Every outcome of teleporting `enc.mode` through a fresh Bell-cat pair, in
/// the order I, II, III, IV, FAIL. The FAIL entry keeps its conditioned
/// state. Requires `enc.mode` to be in the code space.
pub fn teleport_branches(s: &CoherentSuperposition, enc: QubitEncoding) -> Result<Vec<TeleportBranch>> {
    let m = s.modes();
    let joint = s.tensor(&bell_cat_resource(enc.alpha)?);
    let recs = bell_outcomes(&joint, enc.mode, m, true)?;
    recs.into_iter()
        .map(|rec| {
            let class = match rec.outcome {
                Outcome::Bell(c) => c,
                _ => unreachable!("Bell measurement returns Bell outcomes"),
            };
            let state = match rec.conditioned {
                Some(c) => Some(place_output(c, m, class, enc)?),
                None => None,
            };
            Ok(TeleportBranch { class, branch: branch_of(class), probability: rec.probability, state })
        })
        .collect()
}

fn branch_of(class: BellClass) -> Branch {
    match class {
        BellClass::I | BellClass::III => Branch::Identity,
        BellClass::II | BellClass::IV => Branch::Z,
        BellClass::Fail | BellClass::Ambiguous => Branch::Failed,
    }
}

/// Moves the surviving resource mode into `enc.mode` and undoes the bit
/// flip that classes III and IV leave behind.
fn place_output(c: CoherentSuperposition, m: usize, class: BellClass, enc: QubitEncoding) -> Result<CoherentSuperposition> {
    let moved = c.move_mode(m - 1, enc.mode)?;
    match class {
        BellClass::III | BellClass::IV => gate_x(&moved, enc),
        _ => Ok(moved),
    }
}

/// Teleports the qubit in `enc.mode` with the default projection model.
pub fn teleport<R: Rng + ?Sized>(s: &CoherentSuperposition, enc: QubitEncoding, rng: &mut R) -> Result<GateOutcome> {
    teleport_with(s, enc, TeleportModel::Orthogonal, rng)
}

/// Teleportation through a Bell-cat pair. Success leaves either the input
/// or `Z` applied to it, each with probability close to 1/2. A FAIL
/// outcome returns `success = false` with the zero-count conditioned state.
pub fn teleport_with<R: Rng + ?Sized>(
    s: &CoherentSuperposition,
    enc: QubitEncoding,
    model: TeleportModel,
    rng: &mut R,
) -> Result<GateOutcome> {
    let mut out = GateOutcome::start(s.clone());
    out.repetitions = 1;
    match model {
        TeleportModel::Orthogonal => {
            let (p, weight) = project_code(s, enc)?;
            out.amplitude = weight;
            out.trace.push(TraceEvent::Projected { mode: enc.mode, weight });
            let branches = teleport_branches(&p, enc)?;
            let total: f64 = branches.iter().map(|b| b.probability).sum();
            let mut u = rng.gen::<f64>() * total;
            let mut pick = branches.iter().rposition(|b| b.probability > 0.0).expect("some branch is possible");
            for (i, b) in branches.iter().enumerate() {
                if u < b.probability {
                    pick = i;
                    break;
                }
                u -= b.probability;
            }
            let b = branches.into_iter().nth(pick).unwrap();
            out.state = b.state.expect("sampled branch has a state");
            out.probability = b.probability;
            out.applied = b.branch;
            out.success = b.branch != Branch::Failed;
            out.trace.push(TraceEvent::Teleported { mode: enc.mode, class: b.class, branch: b.branch, probability: b.probability });
        }
        TeleportModel::PhotonCounting => {
            let m = s.modes();
            let joint = s.tensor(&bell_cat_resource(enc.alpha)?);
            let rec = bell_measurement_resolved(&joint, enc.mode, m, rng)?;
            let class = match rec.outcome {
                Outcome::Bell(c) => c,
                _ => unreachable!("Bell measurement returns Bell outcomes"),
            };
            let cond = rec.conditioned.expect("sampled branch has a state");
            out.state = place_output(cond, m, class, enc)?;
            out.probability = rec.probability;
            out.applied = branch_of(class);
            out.success = out.applied != Branch::Failed;
            out.trace.push(TraceEvent::Teleported { mode: enc.mode, class, branch: out.applied, probability: rec.probability });
        }
    }
    Ok(out)
}

/// `Z`, by teleporting until the Z branch lands.
pub fn gate_z<R: Rng + ?Sized>(s: &CoherentSuperposition, enc: QubitEncoding, rng: &mut R) -> Result<GateOutcome> {
    gate_z_with(s, enc, TeleportModel::Orthogonal, rng)
}

pub fn gate_z_with<R: Rng + ?Sized>(
    s: &CoherentSuperposition,
    enc: QubitEncoding,
    model: TeleportModel,
    rng: &mut R,
) -> Result<GateOutcome> {
    let mut acc = GateOutcome::start(s.clone());
    for _ in 0..RUS_LIMIT {
        let step = teleport_with(&acc.state, enc, model, rng)?;
        if !step.success {
            return Err(Error::BellFailure);
        }
        let done = step.applied == Branch::Z;
        acc.absorb(step);
        if done {
            return Ok(acc);
        }
    }
    Err(Error::RetryLimit(RUS_LIMIT))
}

/// Teleports and, if the Z branch landed, undoes it with [`gate_z_with`].
fn teleport_clean<R: Rng + ?Sized>(acc: &mut GateOutcome, enc: QubitEncoding, model: TeleportModel, rng: &mut R) -> Result<()> {
    let step = teleport_with(&acc.state, enc, model, rng)?;
    if !step.success {
        return Err(Error::BellFailure);
    }
    let z = step.applied == Branch::Z;
    acc.absorb(step);
    if z {
        let fix = gate_z_with(&acc.state, enc, model, rng)?;
        acc.absorb(fix);
        acc.applied = Branch::Identity;
    }
    Ok(())
}

/// `Rz(4θα²)` up to global phase: displace by `iαθ`, then teleport back
/// into the code space.
pub fn gate_rz<R: Rng + ?Sized>(s: &CoherentSuperposition, enc: QubitEncoding, theta: f64, rng: &mut R) -> Result<GateOutcome> {
    gate_rz_with(s, enc, theta, TeleportModel::Orthogonal, rng)
}

pub fn gate_rz_with<R: Rng + ?Sized>(
    s: &CoherentSuperposition,
    enc: QubitEncoding,
    theta: f64,
    model: TeleportModel,
    rng: &mut R,
) -> Result<GateOutcome> {
    if !theta.is_finite() {
        return Err(Error::InvalidParameter(format!("rotation parameter {theta}")));
    }
    let mut acc = GateOutcome::start(s.clone());
    let strength = theta * theta * enc.alpha * enc.alpha;
    if strength > RZ_WARN {
        acc.trace.push(TraceEvent::Warning(format!("θ²α² = {strength:.3} exceeds {RZ_WARN}; the gate is far from deterministic")));
    }
    let beta = Complex64::new(0.0, enc.alpha * theta);
    acc.state = displace(s, enc.mode, beta)?;
    acc.trace.push(TraceEvent::Displaced { mode: enc.mode, beta });
    teleport_clean(&mut acc, enc, model, rng)?;
    Ok(acc)
}

/// Beam-splitter angle `θ` that makes [`gate_rx_pi2`] a quarter turn.
pub fn rx_theta(alpha: f64) -> f64 {
    PI / (4.0 * alpha * alpha)
}

/// One heralded outcome of the `Rx(π/2)` construction before the Z correction.
#[derive(Debug, Clone, PartialEq)]
pub struct RxBranch {
    pub sign_a: f64,
    pub sign_b: f64,
    pub probability: f64,
    /// Output in `enc.mode`, X correction already applied.
    pub state: Option<CoherentSuperposition>,
    pub needs_z: bool,
}

/// The four cat-projection outcomes of [`gate_rx_pi2`]. Their probabilities
/// fall short of one by the weight that leaves the cat span.
pub fn rx_pi2_branches(s: &CoherentSuperposition, enc: QubitEncoding, theta: f64) -> Result<Vec<RxBranch>> {
    let m = s.modes();
    let joint = s.tensor(&bell_cat_resource(enc.alpha)?);
    let mixed = beamsplitter(&joint, BeamSplitterSpec::new(enc.mode, m, theta / 2.0))?;
    let mut out = Vec::with_capacity(4);
    for sign_a in [1.0, -1.0] {
        let ra = cat_projection(&mixed, enc.mode, enc.alpha, sign_a)?;
        for sign_b in [1.0, -1.0] {
            let (a_odd, b_odd) = (sign_a < 0.0, sign_b < 0.0);
            let mut branch = RxBranch { sign_a, sign_b, probability: 0.0, state: None, needs_z: a_odd ^ b_odd };
            if let Some(rest) = &ra.conditioned {
                let rb = cat_projection(rest, m - 1, enc.alpha, sign_b)?;
                branch.probability = ra.probability * rb.probability;
                if let Some(c) = rb.conditioned {
                    let moved = c.move_mode(m - 1, enc.mode)?;
                    branch.state = Some(if a_odd { gate_x(&moved, enc)? } else { moved });
                }
            }
            out.push(branch);
        }
    }
    Ok(out)
}

/// `Rx(π/2)` up to global phase when `2θα² = π/2`.
///
/// The qubit meets one half of a Bell-cat pair on a beam splitter of angle
/// `θ/2`; both ports are then projected onto even or odd cats. An odd
/// result on the qubit port leaves `Y·Rx`, an odd result on the ancilla
/// port leaves `Z·Rx`, and the matching Paulis are undone. The small-angle
/// form of the phase is used, so the rotation is `4α²sin(θ/2)` rather than
/// exactly `2θα²`.
///
/// The cat projections are heralded: with probability about
/// `1 − e^{−α²θ²/2}` neither port lands in the cat span and the call
/// returns [`Error::ProjectionFailure`].
pub fn gate_rx_pi2<R: Rng + ?Sized>(s: &CoherentSuperposition, enc: QubitEncoding, theta: f64, rng: &mut R) -> Result<GateOutcome> {
    let branches = rx_pi2_branches(s, enc, theta)?;
    let mut u = rng.gen::<f64>();
    let mut pick = None;
    for b in &branches {
        if u < b.probability {
            pick = Some(b.clone());
            break;
        }
        u -= b.probability;
    }
    let b = pick.ok_or(Error::ProjectionFailure)?;
    let mut acc = GateOutcome::start(b.state.clone().expect("sampled branch has a state"));
    acc.probability = b.probability;
    acc.trace.push(TraceEvent::BeamSplitter { a: enc.mode, b: s.modes(), theta: theta / 2.0 });
    acc.trace.push(TraceEvent::CatProjection { mode: enc.mode, sign: b.sign_a, probability: b.probability });
    acc.trace.push(TraceEvent::CatProjection { mode: s.modes(), sign: b.sign_b, probability: b.probability });
    if b.sign_a < 0.0 {
        acc.trace.push(TraceEvent::PauliX { mode: enc.mode });
    }
    if b.needs_z {
        let fix = gate_z(&acc.state, enc, rng)?;
        let p = acc.probability;
        acc.absorb(fix);
        acc.probability *= p;
    }
    Ok(acc)
}

/// One step of the two-qubit phase gate: a beam splitter of angle `θ/2`
/// between the qubits, then both are teleported back. To first order this
/// is `exp(iθα² Z⊗Z)`.
pub fn entangling_gate<R: Rng + ?Sized>(
    s: &CoherentSuperposition,
    enc_a: QubitEncoding,
    enc_b: QubitEncoding,
    theta: f64,
    rng: &mut R,
) -> Result<GateOutcome> {
    entangling_gate_with(s, enc_a, enc_b, theta, TeleportModel::Orthogonal, rng)
}

pub fn entangling_gate_with<R: Rng + ?Sized>(
    s: &CoherentSuperposition,
    enc_a: QubitEncoding,
    enc_b: QubitEncoding,
    theta: f64,
    model: TeleportModel,
    rng: &mut R,
) -> Result<GateOutcome> {
    let mut acc = GateOutcome::start(beamsplitter(s, BeamSplitterSpec::new(enc_a.mode, enc_b.mode, theta / 2.0))?);
    acc.trace.push(TraceEvent::BeamSplitter { a: enc_a.mode, b: enc_b.mode, theta: theta / 2.0 });
    teleport_clean(&mut acc, enc_a, model, rng)?;
    teleport_clean(&mut acc, enc_b, model, rng)?;
    Ok(acc)
}

/// Per-step `θ` so that `steps` entangling steps accumulate `exp(iπ/4 Z⊗Z)`.
pub fn zz_step_theta(alpha: f64, steps: usize) -> f64 {
    FRAC_PI_4 / (alpha * alpha * steps as f64)
}

/// Ideal gates in the computational basis.
pub mod ideal {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    pub fn identity(d: usize) -> DMatrix<Complex64> {
        DMatrix::identity(d, d)
    }

    pub fn pauli_x() -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    pub fn pauli_z() -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]))
    }

    pub fn hadamard() -> DMatrix<Complex64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        DMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)])
    }

    pub fn s_gate() -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]))
    }

    /// `exp(−iφZ/2)`.
    pub fn rz(phi: f64) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&DVector::from_vec(vec![Complex64::from_polar(1.0, -phi / 2.0), Complex64::from_polar(1.0, phi / 2.0)]))
    }

    /// `exp(−iφX/2)`.
    pub fn rx(phi: f64) -> DMatrix<Complex64> {
        let (co, si) = ((phi / 2.0).cos(), (phi / 2.0).sin());
        DMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(0.0, -si), c(0.0, -si), c(co, 0.0)])
    }

    /// `exp(iφ Z⊗Z)`.
    pub fn zz(phi: f64) -> DMatrix<Complex64> {
        let d: Vec<Complex64> = [1.0, -1.0, -1.0, 1.0].iter().map(|&z| Complex64::from_polar(1.0, phi * z)).collect();
        DMatrix::from_diagonal(&DVector::from_vec(d))
    }

    pub fn cnot() -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(4, 4);
        for (r, col) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            m[(r, col)] = c(1.0, 0.0);
        }
        m
    }

    /// Local gates around `exp(iπ/4 Z⊗Z)` that give CNOT up to global phase:
    /// `CNOT ∝ post · exp(iπ/4 Z⊗Z) · pre`.
    pub fn cnot_dressing() -> (DMatrix<Complex64>, DMatrix<Complex64>) {
        let ih = identity(2).kronecker(&hadamard());
        let ss = s_gate().kronecker(&s_gate());
        (ih.clone(), &ih * ss)
    }
}

/// Product inputs `|0⟩, |1⟩, |+⟩, |+i⟩` on each of `qubits` qubits.
pub fn standard_inputs(qubits: usize) -> Vec<DVector<Complex64>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let single = [
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
        [Complex64::new(h, 0.0), Complex64::new(0.0, h)],
    ];
    let mut out = vec![DVector::from_element(1, Complex64::new(1.0, 0.0))];
    for _ in 0..qubits {
        out = out.iter().flat_map(|v| single.iter().map(move |s| v.kronecker(&DVector::from_row_slice(s)))).collect();
    }
    out
}

fn vectorize(m: &DMatrix<Complex64>) -> DVector<Complex64> {
    DVector::from_column_slice(m.as_slice())
}

/// Process fidelity `Tr(S_U† S)/d²` of the superoperator `S` reconstructed
/// from input and output density matrices against the unitary `target`.
pub fn process_fidelity(inputs: &[DMatrix<Complex64>], outputs: &[DMatrix<Complex64>], target: &DMatrix<Complex64>) -> Result<f64> {
    let d = target.nrows();
    let needed = d * d;
    if inputs.len() != outputs.len() {
        return Err(Error::ModeMismatch(inputs.len(), outputs.len()));
    }
    let cols_in: Vec<DVector<Complex64>> = inputs.iter().map(vectorize).collect();
    let cols_out: Vec<DVector<Complex64>> = outputs.iter().map(vectorize).collect();
    if cols_in.iter().chain(&cols_out).any(|v| v.len() != needed) {
        return Err(Error::InvalidParameter(format!("density matrices must be {d}×{d}")));
    }
    if cols_in.is_empty() {
        return Err(Error::NotSpanning { rank: 0, needed });
    }
    let rho_in = DMatrix::from_columns(&cols_in);
    let rho_out = DMatrix::from_columns(&cols_out);
    let svd = rho_in.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&x| x > 1e-10 * smax).count();
    if rank < needed {
        return Err(Error::NotSpanning { rank, needed });
    }
    let pinv = svd.pseudo_inverse(1e-10 * smax).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let sup = rho_out * pinv;
    let sup_u = target.map(|x| x.conj()).kronecker(target);
    let f = (sup_u.adjoint() * sup).trace().re / (needed as f64);
    Ok(f.clamp(0.0, 1.0))
}

/// Runs `channel` on every [`standard_inputs`] state and compares with `target`.
pub fn channel_process_fidelity<F>(qubits: usize, target: &DMatrix<Complex64>, mut channel: F) -> Result<f64>
where
    F: FnMut(&DVector<Complex64>) -> Result<DMatrix<Complex64>>,
{
    let inputs = standard_inputs(qubits);
    let rho_in: Vec<DMatrix<Complex64>> = inputs.iter().map(|v| v * v.adjoint()).collect();
    let rho_out: Vec<DMatrix<Complex64>> = inputs.iter().map(&mut channel).collect::<Result<_>>()?;
    process_fidelity(&rho_in, &rho_out, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cstate::fidelity;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn enc(alpha: f64) -> QubitEncoding {
        QubitEncoding::new(alpha, 0).unwrap()
    }

    fn logical_fidelity(d: &Decoded, mu: Complex64, nu: Complex64) -> f64 {
        let [a, b] = d.logical();
        let n = (mu.norm_sqr() + nu.norm_sqr()).sqrt();
        ((a.conj() * mu + b.conj() * nu) / n).norm_sqr()
    }

    #[test]
    fn encoding_rejects_bad_input() {
        assert!(QubitEncoding::new(0.0, 0).is_err());
        assert!(matches!(encode(c(0.0, 0.0), c(0.0, 0.0), enc(1.0)), Err(Error::ZeroNorm(_))));
    }

    #[test]
    fn encode_basis_and_cat() {
        let e = enc(2.0);
        let zero = encode(c(1.0, 0.0), c(0.0, 0.0), e).unwrap();
        assert!((fidelity(&zero, &CoherentSuperposition::coherent(&[c(-2.0, 0.0)])).unwrap() - 1.0).abs() < 1e-15);
        let cat = encode(c(1.0, 0.0), c(1.0, 0.0), e).unwrap();
        let expect = 1.0 / (2.0 + 2.0 * (-8.0f64).exp()).sqrt();
        assert!(cat.terms().iter().all(|t| (t.coeff.re - expect).abs() < 1e-15));
    }

    #[test]
    fn decode_round_trip() {
        let e = enc(1.3);
        let (mu, nu) = (c(0.3, -0.4), c(-0.7, 0.2));
        let d = decode(&encode(mu, nu, e).unwrap(), e).unwrap();
        assert!(d.leakage < 1e-12);
        assert!((logical_fidelity(&d, mu, nu) - 1.0).abs() < 1e-13);
        assert!(((d.nu / d.mu) - nu / mu).norm() < 1e-13);
    }

    #[test]
    fn vacuum_leakage_closed_form() {
        let e = enc(2.0);
        let d = decode(&CoherentSuperposition::vacuum(1), e).unwrap();
        let x = (-4.0f64).exp();
        let expect = 1.0 - 2.0 * x / (1.0 + x * x);
        assert!((d.leakage - expect).abs() < 1e-14);
    }

    #[test]
    fn displacement_leaks_less_as_theta_shrinks() {
        let e = enc(2.0);
        let s = encode(c(1.0, 0.0), c(0.5, 0.5), e).unwrap();
        let mut last = f64::INFINITY;
        for theta in [0.1, 0.05, 0.02, 0.01] {
            let d = displace(&s, 0, c(0.0, 2.0 * theta)).unwrap();
            let l = decode(&d, e).unwrap().leakage;
            assert!(l > 0.0 && l < last);
            last = l;
        }
    }

    #[test]
    fn tiny_amplitude_is_singular() {
        let e = QubitEncoding::new(1e-8, 0).unwrap();
        assert!(decode(&CoherentSuperposition::vacuum(1), e).is_err());
    }

    #[test]
    fn x_gate_algebra() {
        let e = enc(2.0);
        let s = encode(c(0.8, 0.0), c(0.0, 0.6), e).unwrap();
        let xx = gate_x(&gate_x(&s, e).unwrap(), e).unwrap();
        assert!((fidelity(&s, &xx).unwrap() - 1.0).abs() < 1e-14);
        let flipped = gate_x(&encode(c(1.0, 0.0), c(0.0, 0.0), e).unwrap(), e).unwrap();
        assert!((fidelity(&flipped, &CoherentSuperposition::coherent(&[c(2.0, 0.0)])).unwrap() - 1.0).abs() < 1e-14);
        let cat = CoherentSuperposition::even_cat(2.0);
        assert!((fidelity(&cat, &gate_x(&cat, e).unwrap()).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn teleport_branch_probabilities_sum_to_one() {
        for alpha in [1.0, 1.5, 2.0] {
            let e = enc(alpha);
            let s = encode(c(0.6, 0.1), c(-0.2, 0.77), e).unwrap();
            let branches = teleport_branches(&s, e).unwrap();
            let total: f64 = branches.iter().map(|b| b.probability).sum();
            assert!((total - 1.0).abs() < 1e-10);
            for b in branches.iter().filter(|b| b.branch != Branch::Failed) {
                let d = decode(b.state.as_ref().unwrap(), e).unwrap();
                let nu = if b.branch == Branch::Z { c(0.2, -0.77) } else { c(-0.2, 0.77) };
                assert!((logical_fidelity(&d, c(0.6, 0.1), nu) - 1.0).abs() < 1e-12, "{:?}", b.class);
            }
        }
    }

    #[test]
    fn z_gate_and_its_square() {
        let e = enc(2.0);
        let (mu, nu) = (c(0.6, 0.0), c(0.0, 0.8));
        let s = encode(mu, nu, e).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = gate_z(&s, e, &mut rng).unwrap();
        let target = encode(mu, -nu, e).unwrap();
        assert!(fidelity(&z.state, &target).unwrap() >= 1.0 - 1e-10);
        let zz = gate_z(&z.state, e, &mut rng).unwrap();
        assert!(fidelity(&zz.state, &s).unwrap() >= 1.0 - 1e-10);
        assert!(z.repetitions >= 1);
    }

    #[test]
    fn rz_phase_matches_four_theta_alpha_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for alpha in [1.5, 2.0, 3.0] {
            let e = enc(alpha);
            let theta = 0.01 / (alpha * alpha);
            let s = encode(c(1.0, 0.0), c(1.0, 0.0), e).unwrap();
            let out = gate_rz(&s, e, theta, &mut rng).unwrap();
            let d = decode(&out.state, e).unwrap();
            assert!((d.relative_phase() - 4.0 * theta * alpha * alpha).abs() < 1e-6);
            let basis = encode(c(1.0, 0.0), c(0.0, 0.0), e).unwrap();
            let out = gate_rz(&basis, e, theta, &mut rng).unwrap();
            assert!((out.amplitude - (-theta * theta * alpha * alpha / 2.0).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn rz_zero_is_plain_teleport() {
        let e = enc(2.0);
        let s = encode(c(0.3, 0.0), c(0.0, 0.9), e).unwrap();
        let out = gate_rz(&s, e, 0.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(fidelity(&out.state, &s).unwrap() > 1.0 - 1e-12);
        assert!((out.amplitude - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rz_warns_outside_small_angle_regime() {
        let e = enc(2.0);
        let s = encode(c(1.0, 0.0), c(1.0, 0.0), e).unwrap();
        let out = gate_rz(&s, e, 0.2, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert!(out.trace.iter().any(|t| matches!(t, TraceEvent::Warning(_))));
    }

    #[test]
    fn rx_on_basis_state() {
        let alpha = 2.0;
        let e = enc(alpha);
        let theta = rx_theta(alpha);
        let s = encode(c(1.0, 0.0), c(0.0, 0.0), e).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..8 {
            let out = loop {
                match gate_rx_pi2(&s, e, theta, &mut rng) {
                    Err(Error::ProjectionFailure) => continue,
                    other => break other.unwrap(),
                }
            };
            let d = decode(&out.state, e).unwrap();
            // e^{iπ/4}|−α⟩ + e^{−iπ/4}|α⟩ up to global phase
            let f = logical_fidelity(&d, Complex64::from_polar(1.0, FRAC_PI_4), Complex64::from_polar(1.0, -FRAC_PI_4));
            assert!(f > 0.999, "{f}");
        }
    }

    #[test]
    fn rx_branches_are_subnormalized() {
        let e = enc(2.0);
        let s = encode(c(0.4, 0.0), c(0.0, 0.9), e).unwrap();
        let total: f64 = rx_pi2_branches(&s, e, rx_theta(2.0)).unwrap().iter().map(|b| b.probability).sum();
        assert!(total <= 1.0 + 1e-12 && total > 0.9);
    }

    #[test]
    fn entangling_zero_is_identity() {
        let (a, b) = (QubitEncoding::new(2.0, 0).unwrap(), QubitEncoding::new(2.0, 1).unwrap());
        let amps = [c(0.5, 0.0), c(0.1, 0.5), c(-0.5, 0.0), c(0.3, 0.3)];
        let s = encode_register(&amps, &[a, b]).unwrap();
        let out = entangling_gate(&s, a, b, 0.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert!(fidelity(&out.state, &s).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn entangling_phase_pattern() {
        let alpha = 2.0;
        let (a, b) = (QubitEncoding::new(alpha, 0).unwrap(), QubitEncoding::new(alpha, 1).unwrap());
        let theta = 0.01 / (alpha * alpha);
        let amps = [c(0.5, 0.0); 4];
        let s = encode_register(&amps, &[a, b]).unwrap();
        let out = entangling_gate(&s, a, b, theta, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let d = decode_register(&out.state, &[a, b]).unwrap();
        let phase = |k: usize| (d.amplitudes[k] / d.amplitudes[0]).arg();
        let step = 2.0 * theta * alpha * alpha;
        assert!((phase(1) + step).abs() < 1e-6);
        assert!((phase(2) + step).abs() < 1e-6);
        assert!(phase(3).abs() < 1e-6);
    }

    #[test]
    fn process_fidelity_of_exact_gates() {
        let x = ideal::pauli_x();
        let f = channel_process_fidelity(1, &x, |v| {
            let w = &x * v;
            Ok(&w * w.adjoint())
        })
        .unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        let e = enc(2.0);
        let f = channel_process_fidelity(1, &x, |v| {
            let s = encode(v[0], v[1], e)?;
            Ok(decode_register(&gate_x(&s, e)?, &[e])?.density())
        })
        .unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        let wrong = channel_process_fidelity(1, &ideal::pauli_z(), |v| Ok(v * v.adjoint())).unwrap();
        assert!(wrong < 1e-12);
    }

    #[test]
    fn too_few_inputs_do_not_span() {
        let v = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let rho = &v * v.adjoint();
        let err = process_fidelity(std::slice::from_ref(&rho), std::slice::from_ref(&rho), &ideal::identity(2)).unwrap_err();
        assert_eq!(err, Error::NotSpanning { rank: 1, needed: 4 });
    }

    #[test]
    fn dressing_turns_zz_into_cnot() {
        let (pre, post) = ideal::cnot_dressing();
        let u = post * ideal::zz(FRAC_PI_4) * pre;
        let overlap = (ideal::cnot().adjoint() * u).trace().norm() / 4.0;
        assert!((overlap - 1.0).abs() < 1e-14);
    }
}
