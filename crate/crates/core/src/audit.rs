//! Cross-checks of the coherent-state operations against the Fock oracle.
//!
//! Each check returns an agreement score `1 − max(1 − F, |Δp|)` where `F` is
//! a state fidelity and `Δp` a probability (or density) difference. A case
//! passes when the score is at least `1 − AUDIT_TOL`.

use num_complex::Complex64;
use rand::Rng;

use crate::cstate::{CoherentSuperposition, CoherentTerm};
use crate::error::{Error, Result};
use crate::fockoracle::{
    fock_beamsplitter, fock_displace, fock_fidelity, fock_inner, fock_phase, fock_project_number, fock_quadrature_condition, to_fock,
    FockVector,
};
use crate::measure::{bell_outcomes, homodyne_condition, homodyne_pdf, parity_projection, project_photon_number, BellClass, Outcome};
use crate::optics::{beamsplitter, displace, phase_shift, BeamSplitterSpec};

pub const AUDIT_TOL: f64 = 1e-8;

/// Conditioned states are compared only for branches at least this likely.
/// Below it the truncated oracle's relative error swamps the comparison,
/// and the absolute probability check alone applies.
pub const CONDITION_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    BeamSplitter,
    PhaseShift,
    Displace,
    PhotonNumber,
    Homodyne,
    Parity,
    Bell,
}

impl CheckKind {
    pub const ALL: [CheckKind; 7] = [
        CheckKind::BeamSplitter,
        CheckKind::PhaseShift,
        CheckKind::Displace,
        CheckKind::PhotonNumber,
        CheckKind::Homodyne,
        CheckKind::Parity,
        CheckKind::Bell,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::BeamSplitter => "beamsplitter",
            CheckKind::PhaseShift => "phase_shift",
            CheckKind::Displace => "displace",
            CheckKind::PhotonNumber => "photon_number",
            CheckKind::Homodyne => "homodyne",
            CheckKind::Parity => "parity",
            CheckKind::Bell => "bell",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AuditOp {
    BeamSplitter { a: usize, b: usize, theta: f64 },
    PhaseShift { mode: usize, theta: f64 },
    Displace { mode: usize, beta: Complex64 },
    PhotonNumber { mode: usize, n: usize },
    Homodyne { mode: usize, x: f64 },
    Parity { mode: usize },
    Bell { a: usize, b: usize },
}

impl AuditOp {
    pub fn kind(&self) -> CheckKind {
        match self {
            AuditOp::BeamSplitter { .. } => CheckKind::BeamSplitter,
            AuditOp::PhaseShift { .. } => CheckKind::PhaseShift,
            AuditOp::Displace { .. } => CheckKind::Displace,
            AuditOp::PhotonNumber { .. } => CheckKind::PhotonNumber,
            AuditOp::Homodyne { .. } => CheckKind::Homodyne,
            AuditOp::Parity { .. } => CheckKind::Parity,
            AuditOp::Bell { .. } => CheckKind::Bell,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditCase {
    pub state: CoherentSuperposition,
    pub op: AuditOp,
}

/// Poisson tail mass left above the cutoff. Quadrature amplitudes are linear
/// in the dropped tail amplitude, so its square root must sit well below
/// `AUDIT_TOL`.
pub const TAIL_MASS: f64 = 1e-22;

/// Smallest cutoff whose Poisson tail at mean `amp²` is below `TAIL_MASS`.
pub fn audit_cutoff(amp: f64) -> usize {
    let mean = amp * amp;
    let mut pmf = (-mean).exp();
    let mut n = 0;
    // past the mode the tail is geometric-bounded by p(n+1)·(n+1)/(n+1-mean)
    loop {
        n += 1;
        pmf *= mean / n as f64;
        let next = n as f64 + 1.0;
        if next > mean + 1.0 && pmf * mean / (next - mean) < TAIL_MASS {
            return n.max(4);
        }
    }
}

fn disk<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Complex64 {
    let r = radius * rng.gen::<f64>().sqrt();
    Complex64::from_polar(r, rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
}

fn coeff<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Normalized random superposition with amplitudes in the disk `|γ| ≤ alpha_max`.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, alpha_max: f64, modes: usize, terms: usize) -> CoherentSuperposition {
    loop {
        let ts = (0..terms).map(|_| CoherentTerm::new(coeff(rng), (0..modes).map(|_| disk(rng, alpha_max)).collect())).collect();
        if let Ok(s) = CoherentSuperposition::new(modes, ts).and_then(|s| s.normalize()) {
            return s;
        }
    }
}

/// Random state whose listed modes only carry `±a_m`; modes in `shared`
/// all use the same `a`.
pub fn random_signed_state<R: Rng + ?Sized>(
    rng: &mut R,
    alpha_max: f64,
    modes: usize,
    terms: usize,
    shared: &[usize],
) -> CoherentSuperposition {
    loop {
        let mut base: Vec<Complex64> = (0..modes).map(|_| disk(rng, alpha_max)).collect();
        let common = base[shared.first().copied().unwrap_or(0)];
        for &m in shared {
            base[m] = common;
        }
        let ts = (0..terms)
            .map(|_| {
                let amps = base.iter().map(|&a| if rng.gen::<bool>() { a } else { -a }).collect();
                CoherentTerm::new(coeff(rng), amps)
            })
            .collect();
        if let Ok(s) = CoherentSuperposition::new(modes, ts).and_then(|s| s.merged().normalize()) {
            if base.iter().all(|a| a.norm() > 1e-3) {
                return s;
            }
        }
    }
}

/// Draws a case for `kind` with `1..=3` modes and `1..=8` terms.
pub fn random_case<R: Rng + ?Sized>(rng: &mut R, kind: CheckKind, alpha_max: f64) -> AuditCase {
    let min_modes = if matches!(kind, CheckKind::BeamSplitter | CheckKind::Bell) { 2 } else { 1 };
    let modes = rng.gen_range(min_modes..=3);
    let terms = rng.gen_range(1..=8);
    let mode = rng.gen_range(0..modes);
    let pair = || {
        let a = mode;
        let b = (a + 1) % modes;
        (a, b)
    };
    match kind {
        CheckKind::BeamSplitter => {
            let (a, b) = pair();
            AuditCase {
                state: random_state(rng, alpha_max, modes, terms),
                op: AuditOp::BeamSplitter { a, b, theta: rng.gen_range(-3.2..3.2) },
            }
        }
        CheckKind::PhaseShift => AuditCase {
            state: random_state(rng, alpha_max, modes, terms),
            op: AuditOp::PhaseShift { mode, theta: rng.gen_range(-3.2..3.2) },
        },
        CheckKind::Displace => {
            AuditCase { state: random_state(rng, alpha_max, modes, terms), op: AuditOp::Displace { mode, beta: disk(rng, 1.0) } }
        }
        CheckKind::PhotonNumber => {
            let n = rng.gen_range(0..=((alpha_max * alpha_max + 2.0 * alpha_max).ceil() as usize));
            AuditCase { state: random_state(rng, alpha_max, modes, terms), op: AuditOp::PhotonNumber { mode, n } }
        }
        CheckKind::Homodyne => {
            let reach = alpha_max * std::f64::consts::SQRT_2 + 2.0;
            AuditCase { state: random_state(rng, alpha_max, modes, terms), op: AuditOp::Homodyne { mode, x: rng.gen_range(-reach..reach) } }
        }
        CheckKind::Parity => AuditCase { state: random_signed_state(rng, alpha_max, modes, terms, &[]), op: AuditOp::Parity { mode } },
        CheckKind::Bell => {
            let (a, b) = pair();
            AuditCase { state: random_signed_state(rng, alpha_max, modes, terms, &[a, b]), op: AuditOp::Bell { a, b } }
        }
    }
}

fn score(fid_loss: f64, dp: f64) -> f64 {
    1.0 - fid_loss.max(dp.abs())
}

/// Oracle fidelity of a pure conditioned state against the oracle's
/// unnormalized branches `ψ_n` that make up the same outcome class:
/// `Σ_n |⟨ours|ψ_n⟩|² / Σ_n ‖ψ_n‖²`.
fn class_fidelity(ours: &FockVector, branches: &[FockVector]) -> Result<(f64, f64)> {
    let p: f64 = branches.iter().map(FockVector::norm_sqr).sum();
    let mut hit = 0.0;
    for b in branches {
        hit += fock_inner(ours, b)?.norm_sqr();
    }
    let f = if p > 0.0 { hit / (p * ours.norm_sqr()) } else { 1.0 };
    Ok((p, f))
}

/// Agreement score for one case.
pub fn check(case: &AuditCase) -> Result<f64> {
    let s = &case.state;
    let amp = s.max_amplitude();
    match case.op {
        AuditOp::BeamSplitter { a, b, theta } => {
            let n = audit_cutoff(amp * std::f64::consts::SQRT_2);
            let ours = beamsplitter(s, BeamSplitterSpec::new(a, b, theta))?;
            let oracle = fock_beamsplitter(&to_fock(s, n), a, b, theta)?;
            Ok(score(1.0 - fock_fidelity(&to_fock(&ours, n), &oracle)?, 0.0))
        }
        AuditOp::PhaseShift { mode, theta } => {
            let n = audit_cutoff(amp);
            let ours = phase_shift(s, mode, theta)?;
            let oracle = fock_phase(&to_fock(s, n), mode, theta)?;
            Ok(score(1.0 - fock_fidelity(&to_fock(&ours, n), &oracle)?, 0.0))
        }
        AuditOp::Displace { mode, beta } => {
            let n = audit_cutoff(amp + beta.norm());
            let ours = displace(s, mode, beta)?;
            let oracle = fock_displace(&to_fock(s, n), mode, beta)?;
            // the coherent-state phase convention is checked too: compare
            // the raw overlap, not only its modulus
            let ip = fock_inner(&to_fock(&ours, n), &oracle)?;
            let loss = (1.0 - ip.re).abs().max(1.0 - fock_fidelity(&to_fock(&ours, n), &oracle)?);
            Ok(score(loss, 0.0))
        }
        AuditOp::PhotonNumber { mode, n: count } => {
            let n = audit_cutoff(amp).max(count + 10);
            let branch = fock_project_number(&to_fock(s, n), mode, count)?;
            let p_oracle = branch.norm_sqr();
            match project_photon_number(s, mode, count) {
                Ok(rec) => {
                    let ours = to_fock(rec.conditioned.as_ref().expect("conditioned state"), n);
                    let f = if p_oracle > CONDITION_FLOOR { fock_fidelity(&ours, &branch)? } else { 1.0 };
                    Ok(score(1.0 - f, rec.probability - p_oracle))
                }
                Err(Error::ZeroProbability(_)) => Ok(score(0.0, p_oracle)),
                Err(e) => Err(e),
            }
        }
        AuditOp::Homodyne { mode, x } => {
            let n = audit_cutoff(amp);
            let branch = fock_quadrature_condition(&to_fock(s, n), mode, x)?;
            let pdf = homodyne_pdf(s, mode, x)?;
            let dp = pdf - branch.norm_sqr();
            if branch.norm_sqr() < CONDITION_FLOOR {
                return Ok(score(0.0, dp));
            }
            let rec = homodyne_condition(s, mode, x)?;
            let ours = to_fock(rec.conditioned.as_ref().expect("conditioned state"), n);
            Ok(score(1.0 - fock_fidelity(&ours, &branch)?, dp))
        }
        AuditOp::Parity { mode } => {
            let n = audit_cutoff(amp);
            let v = to_fock(s, n);
            let recs = parity_projection(s, mode)?;
            let mut worst: f64 = 1.0;
            for (idx, rec) in recs.iter().enumerate() {
                let levels: Vec<usize> = match idx {
                    0 => vec![0],
                    1 => (2..=n).step_by(2).collect(),
                    _ => (1..=n).step_by(2).collect(),
                };
                let branches: Vec<FockVector> = levels.iter().map(|&k| fock_project_number(&v, mode, k)).collect::<Result<_>>()?;
                let (p, f) = match &rec.conditioned {
                    Some(c) => class_fidelity(&to_fock(c, n), &branches)?,
                    None => (branches.iter().map(FockVector::norm_sqr).sum(), 1.0),
                };
                let f = if p > CONDITION_FLOOR { f } else { 1.0 };
                worst = worst.min(score(1.0 - f, rec.probability - p));
            }
            Ok(worst)
        }
        AuditOp::Bell { a, b } => {
            let n = audit_cutoff(amp * std::f64::consts::SQRT_2);
            let v = fock_beamsplitter(&fock_phase(&to_fock(s, n), b, std::f64::consts::FRAC_PI_2)?, a, b, -std::f64::consts::FRAC_PI_4)?;
            let recs = bell_outcomes(s, a, b, true)?;
            let b_after = if b > a { b - 1 } else { b };
            let mut branches: Vec<(BellClass, FockVector)> = Vec::new();
            for m in 0..=n {
                let first = fock_project_number(&v, a, m)?;
                if first.norm_sqr() < 1e-30 {
                    continue;
                }
                for k in 0..=n {
                    let second = fock_project_number(&first, b_after, k)?;
                    if second.norm_sqr() > 1e-30 {
                        branches.push((BellClass::from_counts(m, k), second));
                    }
                }
            }
            let ambiguous: f64 = branches.iter().filter(|(c, _)| *c == BellClass::Ambiguous).map(|(_, v)| v.norm_sqr()).sum();
            let mut worst = score(0.0, ambiguous);
            for rec in &recs {
                let class = match rec.outcome {
                    Outcome::Bell(c) => c,
                    _ => unreachable!("Bell measurement returns Bell outcomes"),
                };
                let mine: Vec<FockVector> = branches.iter().filter(|(c, _)| *c == class).map(|(_, v)| v.clone()).collect();
                let (p, f) = match &rec.conditioned {
                    Some(c) => class_fidelity(&to_fock(c, n), &mine)?,
                    None => (mine.iter().map(FockVector::norm_sqr).sum(), 1.0),
                };
                let f = if p > CONDITION_FLOOR { f } else { 1.0 };
                worst = worst.min(score(1.0 - f, rec.probability - p));
            }
            Ok(worst)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub check: &'static str,
    pub case: usize,
    pub modes: usize,
    pub terms: usize,
    pub agreement: f64,
    pub pass: bool,
}

pub fn audit_row(index: usize, case: &AuditCase) -> Result<AuditRow> {
    let agreement = check(case)?;
    Ok(AuditRow {
        check: case.op.kind().name(),
        case: index,
        modes: case.state.modes(),
        terms: case.state.len(),
        agreement,
        pass: agreement >= 1.0 - AUDIT_TOL,
    })
}
