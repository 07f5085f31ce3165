//! Beam splitters, phase shifters and displacements acting on coherent
//! superpositions. Every element maps coherent states to coherent states, so
//! each operation only rewrites amplitudes (and, for displacements, phases).

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;

use crate::cstate::{CoherentSuperposition, CoherentTerm};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSplitterSpec {
    pub mode_a: usize,
    pub mode_b: usize,
    pub theta: f64,
}

impl BeamSplitterSpec {
    pub fn new(mode_a: usize, mode_b: usize, theta: f64) -> Self {
        BeamSplitterSpec { mode_a, mode_b, theta }
    }

    fn validate(&self, modes: usize) -> Result<()> {
        for m in [self.mode_a, self.mode_b] {
            if m >= modes {
                return Err(Error::InvalidMode { index: m, modes });
            }
        }
        if self.mode_a == self.mode_b {
            return Err(Error::SameMode(self.mode_a));
        }
        Ok(())
    }
}

/// `B(θ) = exp[iθ(ab† + a†b)]`: `|γ⟩_a|β⟩_b → |γcosθ + iβsinθ⟩_a |βcosθ + iγsinθ⟩_b`.
pub fn beamsplitter(s: &CoherentSuperposition, spec: BeamSplitterSpec) -> Result<CoherentSuperposition> {
    spec.validate(s.modes())?;
    let (c, sn) = (spec.theta.cos(), spec.theta.sin());
    let i = Complex64::i();
    Ok(s.map_terms(|t| {
        let (g, b) = (t.amps[spec.mode_a], t.amps[spec.mode_b]);
        t.amps[spec.mode_a] = g * c + i * b * sn;
        t.amps[spec.mode_b] = b * c + i * g * sn;
    }))
}

/// `P(θ)|α⟩ = |e^{iθ}α⟩`.
pub fn phase_shift(s: &CoherentSuperposition, mode: usize, theta: f64) -> Result<CoherentSuperposition> {
    s.check_mode(mode)?;
    let rot = Complex64::from_polar(1.0, theta);
    Ok(s.map_terms(|t| t.amps[mode] *= rot))
}

/// `D(β)|α⟩ = exp[(βα* − β*α)/2] |α + β⟩`.
pub fn displace(s: &CoherentSuperposition, mode: usize, beta: Complex64) -> Result<CoherentSuperposition> {
    s.check_mode(mode)?;
    Ok(s.map_terms(|t| {
        let a = t.amps[mode];
        t.coeff *= (0.5 * (beta * a.conj() - beta.conj() * a)).exp();
        t.amps[mode] = a + beta;
    }))
}

/// Displacement built from a weak beam splitter and a strong coherent ancilla.
///
/// The ancilla starts in `|A⟩` with `|A| = strong_amp` and phase chosen so
/// that the reflected part `iA sinθ` points along `beta`; θ = |β|/strong_amp.
/// Afterwards the ancilla is projected onto its nominal output `|A cosθ⟩`
/// and the state renormalized. Approaches [`displace`] as `strong_amp → ∞`.
pub fn displace_physical(s: &CoherentSuperposition, mode: usize, beta: Complex64, strong_amp: f64) -> Result<CoherentSuperposition> {
    s.check_mode(mode)?;
    if !(strong_amp > 0.0) {
        return Err(Error::InvalidParameter(format!("strong_amp must be positive, got {strong_amp}")));
    }
    if beta.norm() == 0.0 {
        return Ok(s.clone());
    }
    let theta = beta.norm() / strong_amp;
    let ancilla = Complex64::from_polar(strong_amp, beta.arg() - std::f64::consts::FRAC_PI_2);
    let anc_mode = s.modes();
    let joint = s.tensor(&CoherentSuperposition::coherent(&[ancilla]));
    let mixed = beamsplitter(&joint, BeamSplitterSpec::new(mode, anc_mode, theta))?;
    let nominal = CoherentSuperposition::coherent(&[ancilla * theta.cos()]);
    mixed.contract_with(&[anc_mode], &nominal)?.normalize()
}

/// Symmetric N-port splitter fed in `mode`, with N−1 vacuum ports appended
/// as new trailing modes. Each term's amplitude `α` becomes `α/√N` in the
/// source mode and in every new mode; the splitter's internal phases are
/// taken as already compensated.
pub fn nport_split(s: &CoherentSuperposition, mode: usize, n: usize) -> Result<CoherentSuperposition> {
    s.check_mode(mode)?;
    if n < 1 {
        return Err(Error::InvalidParameter("N-port splitter needs N >= 1".into()));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let terms = s
        .terms()
        .iter()
        .map(|t| {
            let mut amps = t.amps.clone();
            let a = amps[mode] * scale;
            amps[mode] = a;
            amps.extend(std::iter::repeat_n(a, n - 1));
            CoherentTerm::new(t.coeff, amps)
        })
        .collect();
    CoherentSuperposition::new(s.modes() + n - 1, terms)
}

/// Inverse of [`nport_split`] on the GHZ subspace: recombines `modes[0]` and
/// the modes listed after it into `modes[0]`, leaving vacuum behind.
pub fn nport_combine(s: &CoherentSuperposition, modes: &[usize]) -> Result<CoherentSuperposition> {
    if modes.is_empty() {
        return Err(Error::InvalidParameter("nothing to combine".into()));
    }
    for &m in modes {
        s.check_mode(m)?;
    }
    let scale = 1.0 / (modes.len() as f64).sqrt();
    Ok(s.map_terms(|t| {
        let total: Complex64 = modes.iter().map(|&m| t.amps[m]).sum();
        for &m in modes {
            t.amps[m] = Complex64::new(0.0, 0.0);
        }
        t.amps[modes[0]] = total * scale;
    }))
}

/// Two-mode Bell-cat resource `(|α,α⟩ + |−α,−α⟩)/√N̄`, made by splitting
/// `|√2α⟩ + |−√2α⟩` against vacuum on a 50/50 beam splitter and removing the
/// `i` picked up by the second port with a −π/2 phase shift.
pub fn bell_cat_resource(alpha: f64) -> Result<CoherentSuperposition> {
    let cat = CoherentSuperposition::even_cat(std::f64::consts::SQRT_2 * alpha);
    let joint = cat.tensor(&CoherentSuperposition::vacuum(1));
    let split = beamsplitter(&joint, BeamSplitterSpec::new(0, 1, FRAC_PI_4))?;
    phase_shift(&split, 1, -std::f64::consts::FRAC_PI_2)
}

/// N-mode GHZ-like cat `(|α/√N,…⟩ + |−α/√N,…⟩)/√2·(norm)`.
pub fn ghz_cat(alpha: f64, n: usize) -> Result<CoherentSuperposition> {
    nport_split(&CoherentSuperposition::even_cat(alpha), 0, n)
}

/// Runs Bell-cat creation backwards on modes `a`, `b`: a +π/2 phase on `b`
/// followed by `B(−π/4)`. Maps `|±α,±α⟩ → |±√2α, 0⟩` and
/// `|±α,∓α⟩ → |0, ∓i√2α⟩`.
pub fn bell_disentangle(s: &CoherentSuperposition, a: usize, b: usize) -> Result<CoherentSuperposition> {
    let shifted = phase_shift(s, b, std::f64::consts::FRAC_PI_2)?;
    beamsplitter(&shifted, BeamSplitterSpec::new(a, b, -FRAC_PI_4))
}
