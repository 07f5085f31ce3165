//! Finite superpositions of multimode coherent states.
//!
//! A state is `Σ_k c_k |α_k1, …, α_kM⟩`. The terms are not orthogonal, so
//! every norm and inner product goes through the full Gram sum of pairwise
//! coherent overlaps.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Amplitudes closer than this (max-norm) are treated as the same coherent state.
pub const MERGE_TOL: f64 = 1e-12;
/// Terms smaller than this fraction of the largest coefficient are dropped.
pub const DROP_REL: f64 = 1e-14;

/// `⟨a|b⟩ = exp(−|a|²/2 − |b|²/2 + a*·b)`.
#[inline]
pub fn coherent_overlap(a: Complex64, b: Complex64) -> Complex64 {
    (-0.5 * a.norm_sqr() - 0.5 * b.norm_sqr() + a.conj() * b).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherentTerm {
    pub coeff: Complex64,
    pub amps: Vec<Complex64>,
}

impl CoherentTerm {
    pub fn new(coeff: Complex64, amps: Vec<Complex64>) -> Self {
        CoherentTerm { coeff, amps }
    }

    /// Product of single-mode overlaps between two amplitude vectors.
    fn amp_overlap(&self, other: &CoherentTerm) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(&a, &b)| coherent_overlap(a, b)).product()
    }
}

/// A pure state on `modes` bosonic modes written as a finite sum of
/// coherent product states.
///
/// A zero-mode state is a plain complex number; it shows up when the last
/// mode of a state is measured.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentSuperposition {
    modes: usize,
    terms: Vec<CoherentTerm>,
}

impl CoherentSuperposition {
    pub fn new(modes: usize, terms: Vec<CoherentTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("a state needs at least one term".into()));
        }
        for t in &terms {
            if t.amps.len() != modes {
                return Err(Error::ModeMismatch(modes, t.amps.len()));
            }
            let finite = t.coeff.re.is_finite() && t.coeff.im.is_finite() && t.amps.iter().all(|a| a.re.is_finite() && a.im.is_finite());
            if !finite {
                return Err(Error::InvalidParameter("non-finite coefficient or amplitude".into()));
            }
        }
        Ok(CoherentSuperposition { modes, terms })
    }

    /// Builds a state from `(coeff, amps)` pairs, panicking on malformed input.
    /// Intended for literals in tests and constructors.
    pub fn from_pairs(modes: usize, pairs: &[(Complex64, &[Complex64])]) -> Self {
        let terms = pairs.iter().map(|(c, a)| CoherentTerm::new(*c, a.to_vec())).collect();
        Self::new(modes, terms).expect("malformed state literal")
    }

    /// The product coherent state `|a_0, …, a_{M−1}⟩`.
    pub fn coherent(amps: &[Complex64]) -> Self {
        CoherentSuperposition { modes: amps.len(), terms: vec![CoherentTerm::new(Complex64::new(1.0, 0.0), amps.to_vec())] }
    }

    pub fn vacuum(modes: usize) -> Self {
        Self::coherent(&vec![Complex64::new(0.0, 0.0); modes])
    }

    /// `|α⟩ + sign·|−α⟩`, normalized.
    pub fn cat(alpha: Complex64, sign: f64) -> Self {
        let s = CoherentSuperposition {
            modes: 1,
            terms: vec![
                CoherentTerm::new(Complex64::new(1.0, 0.0), vec![alpha]),
                CoherentTerm::new(Complex64::new(sign, 0.0), vec![-alpha]),
            ],
        };
        s.normalize().expect("cat state with zero norm")
    }

    pub fn even_cat(alpha: f64) -> Self {
        Self::cat(Complex64::new(alpha, 0.0), 1.0)
    }

    pub fn odd_cat(alpha: f64) -> Self {
        Self::cat(Complex64::new(alpha, 0.0), -1.0)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn terms(&self) -> &[CoherentTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn into_terms(self) -> Vec<CoherentTerm> {
        self.terms
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes {
            Err(Error::InvalidMode { index: mode, modes: self.modes })
        } else {
            Ok(())
        }
    }

    /// Largest amplitude magnitude over all terms and modes.
    pub fn max_amplitude(&self) -> f64 {
        self.terms.iter().flat_map(|t| t.amps.iter()).map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn gram_matrix(&self) -> DMatrix<Complex64> {
        let k = self.terms.len();
        DMatrix::from_fn(k, k, |i, j| self.terms[i].amp_overlap(&self.terms[j]))
    }

    pub fn norm_sqr(&self) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for x in &self.terms {
            for y in &self.terms {
                acc += x.coeff.conj() * y.coeff * x.amp_overlap(y);
            }
        }
        acc.re
    }

    pub fn normalize(&self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if !(n2 > 1e-300) {
            return Err(Error::ZeroNorm(n2));
        }
        Ok(self.scale(Complex64::new(1.0 / n2.sqrt(), 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        CoherentSuperposition {
            modes: self.modes,
            terms: self.terms.iter().map(|t| CoherentTerm::new(t.coeff * factor, t.amps.clone())).collect(),
        }
    }

    /// Concatenates the term lists of two states on the same modes.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.modes != other.modes {
            return Err(Error::ModeMismatch(self.modes, other.modes));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(CoherentSuperposition { modes: self.modes, terms })
    }

    /// `self ⊗ other`, with `other`'s modes appended after ours.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for x in &self.terms {
            for y in &other.terms {
                let mut amps = x.amps.clone();
                amps.extend_from_slice(&y.amps);
                terms.push(CoherentTerm::new(x.coeff * y.coeff, amps));
            }
        }
        CoherentSuperposition { modes: self.modes + other.modes, terms }
    }

    /// Applies `f` to every term's amplitude vector and coefficient.
    pub fn map_terms<F>(&self, mut f: F) -> Self
    where
        F: FnMut(&mut CoherentTerm),
    {
        let mut out = self.clone();
        for t in &mut out.terms {
            f(t);
        }
        out
    }

    /// Removes `mode`, multiplying each coefficient by `bra(amp_mode)`.
    ///
    /// This is the contraction `(⟨φ|_mode ⊗ I)|ψ⟩` for any single-mode bra
    /// whose overlap with a coherent state is `bra(α) = ⟨φ|α⟩`. The result is
    /// unnormalized.
    pub fn contract_mode<F>(&self, mode: usize, bra: F) -> Result<Self>
    where
        F: Fn(Complex64) -> Complex64,
    {
        self.check_mode(mode)?;
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut amps = t.amps.clone();
                let a = amps.remove(mode);
                CoherentTerm::new(t.coeff * bra(a), amps)
            })
            .collect();
        Ok(CoherentSuperposition { modes: self.modes - 1, terms })
    }

    /// Contracts `modes` (in order) against a coherent-superposition bra
    /// `⟨φ|` defined on `modes.len()` modes. Unnormalized.
    pub fn contract_with(&self, modes: &[usize], bra: &Self) -> Result<Self> {
        if bra.modes != modes.len() {
            return Err(Error::ModeMismatch(bra.modes, modes.len()));
        }
        for (i, &m) in modes.iter().enumerate() {
            self.check_mode(m)?;
            if modes[..i].contains(&m) {
                return Err(Error::SameMode(m));
            }
        }
        let mut terms = Vec::with_capacity(self.terms.len() * bra.terms.len());
        for t in &self.terms {
            let kept: Vec<Complex64> = (0..self.modes).filter(|m| !modes.contains(m)).map(|m| t.amps[m]).collect();
            for b in &bra.terms {
                let ov: Complex64 = modes.iter().zip(&b.amps).map(|(&m, &ba)| coherent_overlap(ba, t.amps[m])).product();
                terms.push(CoherentTerm::new(b.coeff.conj() * t.coeff * ov, kept.clone()));
            }
        }
        Ok(CoherentSuperposition { modes: self.modes - modes.len(), terms })
    }

    /// Keeps only the listed modes, in the given order. Only meaningful when
    /// the dropped modes carry identical amplitudes in every term.
    pub fn select_modes(&self, keep: &[usize]) -> Result<Self> {
        for &m in keep {
            self.check_mode(m)?;
        }
        Ok(self.map_modes(keep))
    }

    fn map_modes(&self, keep: &[usize]) -> Self {
        CoherentSuperposition {
            modes: keep.len(),
            terms: self.terms.iter().map(|t| CoherentTerm::new(t.coeff, keep.iter().map(|&m| t.amps[m]).collect())).collect(),
        }
    }

    /// Moves `mode` to position `to`, shifting the others.
    pub fn move_mode(&self, mode: usize, to: usize) -> Result<Self> {
        self.check_mode(mode)?;
        self.check_mode(to)?;
        let mut order: Vec<usize> = (0..self.modes).filter(|&m| m != mode).collect();
        order.insert(to, mode);
        Ok(self.map_modes(&order))
    }

    /// Combines terms whose amplitude vectors agree within `tol` (max-norm)
    /// and drops terms below the relative coefficient threshold.
    pub fn merge_terms(&self, tol: f64) -> Self {
        let mut merged: Vec<CoherentTerm> = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let hit =
                merged.iter_mut().find(|m| m.amps.iter().zip(&t.amps).all(|(a, b)| (a - b).re.abs() <= tol && (a - b).im.abs() <= tol));
            match hit {
                Some(m) => m.coeff += t.coeff,
                None => merged.push(t.clone()),
            }
        }
        let cmax = merged.iter().map(|t| t.coeff.norm()).fold(0.0, f64::max);
        let mut kept: Vec<CoherentTerm> = merged.iter().filter(|t| t.coeff.norm() > DROP_REL * cmax).cloned().collect();
        if kept.is_empty() {
            // everything cancelled; keep one zero term so the value stays a state
            kept.push(CoherentTerm::new(Complex64::new(0.0, 0.0), self.terms[0].amps.clone()));
        }
        CoherentSuperposition { modes: self.modes, terms: kept }
    }

    pub fn merged(&self) -> Self {
        self.merge_terms(MERGE_TOL)
    }

    /// Plain-text record: a `modes` line, a `terms` line, then one line per
    /// term with `coeff_re coeff_im` followed by `amp_re amp_im` per mode.
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        writeln!(s, "modes {}", self.modes).unwrap();
        writeln!(s, "terms {}", self.terms.len()).unwrap();
        for t in &self.terms {
            write!(s, "{:e} {:e}", t.coeff.re, t.coeff.im).unwrap();
            for a in &t.amps {
                write!(s, " {:e} {:e}", a.re, a.im).unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn from_record(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let header = |entry: Option<(usize, &str)>, key: &str| -> Result<usize> {
            let (i, l) = entry.ok_or(Error::Parse { line: 0, msg: format!("missing `{key}` line") })?;
            let mut it = l.split_whitespace();
            if it.next() != Some(key) {
                return Err(Error::Parse { line: i + 1, msg: format!("expected `{key}`") });
            }
            it.next().and_then(|v| v.parse().ok()).ok_or(Error::Parse { line: i + 1, msg: format!("bad `{key}` value") })
        };
        let modes = header(lines.next(), "modes")?;
        let count = header(lines.next(), "terms")?;
        let mut terms = Vec::with_capacity(count);
        for _ in 0..count {
            let (i, l) = lines.next().ok_or(Error::Parse { line: 0, msg: "missing term line".into() })?;
            let vals: Vec<f64> = l
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
            if vals.len() != 2 + 2 * modes {
                return Err(Error::Parse { line: i + 1, msg: format!("expected {} numbers, found {}", 2 + 2 * modes, vals.len()) });
            }
            let amps = vals[2..].chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
            terms.push(CoherentTerm::new(Complex64::new(vals[0], vals[1]), amps));
        }
        Self::new(modes, terms)
    }
}

pub fn inner_product(x: &CoherentSuperposition, y: &CoherentSuperposition) -> Result<Complex64> {
    if x.modes != y.modes {
        return Err(Error::ModeMismatch(x.modes, y.modes));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for a in &x.terms {
        for b in &y.terms {
            acc += a.coeff.conj() * b.coeff * a.amp_overlap(b);
        }
    }
    Ok(acc)
}

/// `|⟨x|y⟩|²` for normalized inputs.
pub fn fidelity(x: &CoherentSuperposition, y: &CoherentSuperposition) -> Result<f64> {
    Ok(inner_product(x, y)?.norm_sqr())
}
