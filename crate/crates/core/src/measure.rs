//! Photon counting, parity classes, homodyne detection and the Bell-cat
//! measurement.
//!
//! Each detector is modelled as a bra contracted against one mode. Since the
//! overlap of a number state or a quadrature eigenstate with `|α⟩` is known
//! in closed form, the conditioned state of the remaining modes is again a
//! coherent superposition.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use num_complex::Complex64;
use rand::Rng;

use crate::cstate::{CoherentSuperposition, MERGE_TOL};
use crate::error::{Error, Result};
use crate::optics::bell_disentangle;

/// Branches below this probability are treated as impossible.
pub const MIN_PROBABILITY: f64 = 1e-300;
/// Points in the inverse-CDF grid used by [`homodyne_sample`].
pub const HOMODYNE_GRID: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityClass {
    Zero,
    EvenNonzero,
    Odd,
}

/// Joint photon-count classes after the Bell disentangler:
/// I = (even>0, 0), II = (odd, 0), III = (0, even>0), IV = (0, odd).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellClass {
    I,
    II,
    III,
    IV,
    Fail,
    /// Photons in both outputs; impossible for inputs in the `{|±α⟩}⊗2`
    /// subspace, but reachable from states that have left it.
    Ambiguous,
}

impl BellClass {
    pub const SUCCESS: [BellClass; 4] = [BellClass::I, BellClass::II, BellClass::III, BellClass::IV];

    pub fn from_counts(m: usize, n: usize) -> Self {
        match (m, n) {
            (0, 0) => BellClass::Fail,
            (m, 0) if m % 2 == 0 => BellClass::I,
            (_, 0) => BellClass::II,
            (0, n) if n % 2 == 0 => BellClass::III,
            (0, _) => BellClass::IV,
            _ => BellClass::Ambiguous,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BellClass::I => "I",
            BellClass::II => "II",
            BellClass::III => "III",
            BellClass::IV => "IV",
            BellClass::Fail => "FAIL",
            BellClass::Ambiguous => "AMBIGUOUS",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    PhotonCount(usize),
    Parity(ParityClass),
    Homodyne(f64),
    Bell(BellClass),
}

impl Outcome {
    pub fn kind(&self) -> &'static str {
        match self {
            Outcome::PhotonCount(_) => "photon_count",
            Outcome::Parity(_) => "parity",
            Outcome::Homodyne(_) => "homodyne",
            Outcome::Bell(_) => "bell",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::PhotonCount(n) => write!(f, "{n}"),
            Outcome::Parity(ParityClass::Zero) => f.write_str("zero"),
            Outcome::Parity(ParityClass::EvenNonzero) => f.write_str("even_nonzero"),
            Outcome::Parity(ParityClass::Odd) => f.write_str("odd"),
            Outcome::Homodyne(x) => write!(f, "{x:.16e}"),
            Outcome::Bell(c) => f.write_str(c.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub modes: Vec<usize>,
    pub outcome: Outcome,
    /// Probability, or probability density for homodyne outcomes.
    pub probability: f64,
    /// Normalized state of the unmeasured modes; `None` for impossible
    /// branches and, unless requested, for a failed Bell measurement.
    pub conditioned: Option<CoherentSuperposition>,
    /// Raw photon counts when the detector resolved them.
    pub counts: Vec<usize>,
}

impl MeasurementRecord {
    fn new(modes: Vec<usize>, outcome: Outcome, probability: f64, conditioned: Option<CoherentSuperposition>) -> Self {
        MeasurementRecord { modes, outcome, probability, conditioned, counts: Vec::new() }
    }

    /// `outcome_kind,outcome_value,probability` with 17 significant digits.
    pub fn to_row(&self) -> String {
        format!("{},{},{:.16e}", self.outcome.kind(), self.outcome, self.probability)
    }

    pub const ROW_HEADER: &'static str = "outcome_kind,outcome_value,probability";
}

/// `⟨n|α⟩ = e^{−|α|²/2} αⁿ/√n!`, by forward recursion.
pub fn number_amplitude(alpha: Complex64, n: usize) -> Complex64 {
    let mut amp = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for k in 1..=n {
        amp = amp * alpha / (k as f64).sqrt();
    }
    amp
}

/// `⟨x|α⟩` for `x̂ = (a + a†)/√2`.
pub fn quadrature_amplitude(x: f64, alpha: Complex64) -> Complex64 {
    let arg = -0.5 * x * x + SQRT_2 * alpha * x - 0.5 * alpha * alpha - 0.5 * alpha.norm_sqr();
    PI.powf(-0.25) * arg.exp()
}

/// Default photon-number cutoff for a mode of `s`.
pub fn default_n_max(s: &CoherentSuperposition, mode: usize) -> usize {
    let a = s.terms().iter().map(|t| t.amps[mode].norm()).fold(0.0, f64::max);
    crate::default_cutoff(a)
}

/// `P(n)` for `n = 0..=n_max` on one mode.
pub fn photon_statistics(s: &CoherentSuperposition, mode: usize, n_max: usize) -> Result<Vec<f64>> {
    s.check_mode(mode)?;
    (0..=n_max).map(|n| Ok(s.contract_mode(mode, |a| number_amplitude(a, n))?.norm_sqr())).collect()
}

pub fn project_photon_number(s: &CoherentSuperposition, mode: usize, n: usize) -> Result<MeasurementRecord> {
    let branch = s.contract_mode(mode, |a| number_amplitude(a, n))?;
    let p = branch.norm_sqr();
    if !(p >= MIN_PROBABILITY) {
        return Err(Error::ZeroProbability(p));
    }
    let mut rec = MeasurementRecord::new(vec![mode], Outcome::PhotonCount(n), p, Some(branch.normalize()?));
    rec.counts = vec![n];
    Ok(rec)
}

/// Draws a photon count for `mode` and conditions on it.
pub fn sample_photon_number<R: Rng + ?Sized>(s: &CoherentSuperposition, mode: usize, rng: &mut R) -> Result<MeasurementRecord> {
    let stats = photon_statistics(s, mode, default_n_max(s, mode))?;
    let total: f64 = stats.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    let mut pick = stats.len() - 1;
    for (n, p) in stats.iter().enumerate() {
        if u < *p {
            pick = n;
            break;
        }
        u -= p;
    }
    project_photon_number(s, mode, pick)
}

/// Amplitude support of one mode: every term sits at `0` or `±a`.
struct ParitySupport {
    a: Complex64,
    signs: Vec<i8>,
}

fn parity_support(s: &CoherentSuperposition, mode: usize, allow_zero: bool) -> Result<ParitySupport> {
    let tol = MERGE_TOL * (1.0 + s.max_amplitude());
    let near = |x: Complex64, y: Complex64| (x - y).norm() <= tol;
    let a = s.terms().iter().map(|t| t.amps[mode]).find(|x| x.norm() > tol).unwrap_or(Complex64::new(0.0, 0.0));
    let mut signs = Vec::with_capacity(s.len());
    for t in s.terms() {
        let x = t.amps[mode];
        let sign = if a.norm() > tol && near(x, a) {
            1
        } else if a.norm() > tol && near(x, -a) {
            -1
        } else if x.norm() <= tol && (allow_zero || a.norm() <= tol) {
            0
        } else {
            return Err(Error::Unsupported(format!("mode {mode} amplitude {x} is not in {{+a, -a}} for a = {a}")));
        };
        signs.push(sign);
    }
    Ok(ParitySupport { a, signs })
}

/// `e^{−x}(cosh x − 1)` and `e^{−x} sinh x` without overflow.
fn parity_weights(x: f64) -> (f64, f64) {
    let e1 = (-x).exp();
    let e2 = (-2.0 * x).exp();
    (0.5 * (1.0 + e2) - e1, 0.5 * (1.0 - e2))
}

fn parity_records(s: &CoherentSuperposition, mode: usize, allow_zero: bool) -> Result<[MeasurementRecord; 3]> {
    s.check_mode(mode)?;
    let sup = parity_support(s, mode, allow_zero)?;
    let zero_branch = s.contract_mode(mode, |x| Complex64::new((-0.5 * x.norm_sqr()).exp(), 0.0))?;
    let with_sign = |odd: bool| -> Result<CoherentSuperposition> {
        let mut i = 0;
        let signs = &sup.signs;
        let st = s.map_terms(|t| {
            let sg = signs[i] as f64;
            t.coeff *= if odd { sg } else { sg * sg };
            i += 1;
        });
        st.contract_mode(mode, |_| Complex64::new(1.0, 0.0))
    };
    let even_vec = with_sign(false)?;
    let odd_vec = with_sign(true)?;
    let (w_even, w_odd) = parity_weights(sup.a.norm_sqr());
    let build = |class: ParityClass, p: f64, v: CoherentSuperposition| -> MeasurementRecord {
        let cond = if p >= MIN_PROBABILITY { v.merged().normalize().ok() } else { None };
        MeasurementRecord::new(vec![mode], Outcome::Parity(class), if cond.is_some() { p } else { p.max(0.0) }, cond)
    };
    let p_zero = zero_branch.norm_sqr();
    let p_even = if w_even > 0.0 { w_even * even_vec.norm_sqr() } else { 0.0 };
    let p_odd = if w_odd > 0.0 { w_odd * odd_vec.norm_sqr() } else { 0.0 };
    Ok([
        build(ParityClass::Zero, p_zero, zero_branch),
        build(ParityClass::EvenNonzero, p_even, even_vec),
        build(ParityClass::Odd, p_odd, odd_vec),
    ])
}

/// Splits photon counting on `mode` into zero / even>0 / odd classes.
///
/// Requires every term's amplitude in `mode` to be `+a` or `−a` for one
/// common `a`. Then `⟨n|−a⟩ = (−1)ⁿ⟨n|a⟩` makes the state of the other
/// modes the same ray for every `n` inside a class, so each class has a
/// pure conditioned state.
pub fn parity_projection(s: &CoherentSuperposition, mode: usize) -> Result<[MeasurementRecord; 3]> {
    parity_records(s, mode, false)
}

/// Projects `mode` onto the normalized cat `|α⟩ + sign·|−α⟩`.
///
/// Unlike [`parity_projection`] this works for any amplitudes in `mode`; it
/// is the heralded "cat state projection" used by gate constructions. The
/// record's outcome is `EvenNonzero` for `sign > 0` and `Odd` otherwise.
pub fn cat_projection(s: &CoherentSuperposition, mode: usize, alpha: f64, sign: f64) -> Result<MeasurementRecord> {
    let cat = CoherentSuperposition::cat(Complex64::new(alpha, 0.0), sign).normalize()?;
    let branch = s.contract_with(&[mode], &cat)?;
    let p = branch.norm_sqr();
    let class = if sign > 0.0 { ParityClass::EvenNonzero } else { ParityClass::Odd };
    let cond = if p >= MIN_PROBABILITY { Some(branch.merged().normalize()?) } else { None };
    Ok(MeasurementRecord::new(vec![mode], Outcome::Parity(class), p, cond))
}

/// `⟨(−1)^{a†a}⟩` on `mode`, using `(−1)^{a†a}|γ⟩ = |−γ⟩`.
pub fn parity_expectation(s: &CoherentSuperposition, mode: usize) -> Result<f64> {
    s.check_mode(mode)?;
    let flipped = s.map_terms(|t| t.amps[mode] = -t.amps[mode]);
    Ok(crate::cstate::inner_product(s, &flipped)?.re / s.norm_sqr())
}

/// Marginal density of `x̂ = (a + a†)/√2` on `mode` at `x`.
pub fn homodyne_pdf(s: &CoherentSuperposition, mode: usize, x: f64) -> Result<f64> {
    Ok(s.contract_mode(mode, |a| quadrature_amplitude(x, a))?.norm_sqr())
}

pub fn homodyne_condition(s: &CoherentSuperposition, mode: usize, x: f64) -> Result<MeasurementRecord> {
    let branch = s.contract_mode(mode, |a| quadrature_amplitude(x, a))?;
    let p = branch.norm_sqr();
    if !(p >= MIN_PROBABILITY) {
        return Err(Error::ZeroProbability(p));
    }
    Ok(MeasurementRecord::new(vec![mode], Outcome::Homodyne(x), p, Some(branch.normalize()?)))
}

/// Sampling grid `[−(a√2 + 8), a√2 + 8]` for the largest amplitude `a` in `mode`.
pub fn homodyne_grid(s: &CoherentSuperposition, mode: usize) -> Vec<f64> {
    let a = s.terms().iter().map(|t| t.amps[mode].norm()).fold(0.0, f64::max);
    let half = a * SQRT_2 + 8.0;
    let step = 2.0 * half / (HOMODYNE_GRID - 1) as f64;
    (0..HOMODYNE_GRID).map(|i| -half + step * i as f64).collect()
}

/// Draws a quadrature value by inverse CDF on [`homodyne_grid`] and conditions on it.
pub fn homodyne_sample<R: Rng + ?Sized>(s: &CoherentSuperposition, mode: usize, rng: &mut R) -> Result<MeasurementRecord> {
    s.check_mode(mode)?;
    let grid = homodyne_grid(s, mode);
    let pdf: Vec<f64> = grid.iter().map(|&x| homodyne_pdf(s, mode, x)).collect::<Result<_>>()?;
    let mut cdf = Vec::with_capacity(grid.len());
    cdf.push(0.0);
    for i in 1..grid.len() {
        let area = 0.5 * (pdf[i] + pdf[i - 1]) * (grid[i] - grid[i - 1]);
        cdf.push(cdf[i - 1] + area);
    }
    let total = *cdf.last().unwrap();
    let u = rng.gen::<f64>() * total;
    let i = cdf.partition_point(|&c| c < u).clamp(1, grid.len() - 1);
    let span = cdf[i] - cdf[i - 1];
    let frac = if span > 0.0 { (u - cdf[i - 1]) / span } else { 0.5 };
    let x = grid[i - 1] + frac * (grid[i] - grid[i - 1]);
    homodyne_condition(s, mode, x)
}

/// Normalized Bell-cat state that the analyzer assigns to `class`:
/// I = |α,α⟩+|−α,−α⟩, II = |α,α⟩−|−α,−α⟩, III = |α,−α⟩+|−α,α⟩,
/// IV = |α,−α⟩−|−α,α⟩.
pub fn bell_cat(alpha: f64, class: BellClass) -> Result<CoherentSuperposition> {
    let a = Complex64::new(alpha, 0.0);
    let (second, sign) = match class {
        BellClass::I => (a, 1.0),
        BellClass::II => (a, -1.0),
        BellClass::III => (-a, 1.0),
        BellClass::IV => (-a, -1.0),
        other => return Err(Error::InvalidParameter(format!("no Bell-cat state for class {}", other.name()))),
    };
    CoherentSuperposition::from_pairs(2, &[(Complex64::new(1.0, 0.0), &[a, second]), (Complex64::new(sign, 0.0), &[-a, -second])])
        .normalize()
}

/// All five Bell-cat outcomes for modes `a`, `b` with their probabilities
/// and conditioned states, in the order I, II, III, IV, FAIL.
///
/// Both modes must carry amplitudes `±α` for a common `α`. The FAIL
/// record only carries its zero-photon conditioned state when
/// `keep_failure` is set.
pub fn bell_outcomes(s: &CoherentSuperposition, a: usize, b: usize, keep_failure: bool) -> Result<Vec<MeasurementRecord>> {
    s.check_mode(a)?;
    s.check_mode(b)?;
    if a == b {
        return Err(Error::SameMode(a));
    }
    let sa = parity_support(s, a, false)?;
    let sb = parity_support(s, b, false)?;
    let tol = 1e-10 * (1.0 + sa.a.norm());
    if (sa.a - sb.a).norm() > tol && (sa.a + sb.a).norm() > tol {
        return Err(Error::Unsupported("Bell measurement needs the same |±α⟩ support on both modes".into()));
    }
    let out = bell_disentangle(s, a, b)?.merged();
    let [a_zero, a_even, a_odd] = parity_records(&out, a, true)?;
    let b_after = if b > a { b - 1 } else { b };
    let mut records = Vec::with_capacity(5);
    let modes = vec![a, b];
    let finish = |rec: MeasurementRecord, class: BellClass| -> Result<MeasurementRecord> {
        // the other output mode is left in vacuum for classes I and II
        let cond = match rec.conditioned {
            Some(c) => Some(c.contract_mode(b_after, |x| Complex64::new((-0.5 * x.norm_sqr()).exp(), 0.0))?.normalize()?),
            None => None,
        };
        Ok(MeasurementRecord::new(modes.clone(), Outcome::Bell(class), rec.probability, cond))
    };
    records.push(finish(a_even, BellClass::I)?);
    records.push(finish(a_odd, BellClass::II)?);
    match a_zero.conditioned {
        Some(rest) => {
            let [b_zero, b_even, b_odd] = parity_records(&rest, b_after, true)?;
            for (rec, class) in [(b_even, BellClass::III), (b_odd, BellClass::IV)] {
                records.push(MeasurementRecord::new(
                    modes.clone(),
                    Outcome::Bell(class),
                    a_zero.probability * rec.probability,
                    rec.conditioned,
                ));
            }
            let cond = if keep_failure { b_zero.conditioned } else { None };
            records.push(MeasurementRecord::new(
                modes.clone(),
                Outcome::Bell(BellClass::Fail),
                a_zero.probability * b_zero.probability,
                cond,
            ));
        }
        None => {
            for class in [BellClass::III, BellClass::IV, BellClass::Fail] {
                records.push(MeasurementRecord::new(modes.clone(), Outcome::Bell(class), 0.0, None));
            }
        }
    }
    Ok(records)
}

/// Samples one Bell-cat outcome; see [`bell_outcomes`].
pub fn bell_measurement<R: Rng + ?Sized>(s: &CoherentSuperposition, a: usize, b: usize, rng: &mut R) -> Result<MeasurementRecord> {
    let recs = bell_outcomes(s, a, b, false)?;
    let total: f64 = recs.iter().map(|r| r.probability).sum();
    let mut u = rng.gen::<f64>() * total;
    for r in &recs {
        if u < r.probability {
            return Ok(r.clone());
        }
        u -= r.probability;
    }
    Ok(recs.into_iter().rev().find(|r| r.probability > 0.0).expect("no Bell outcome with positive probability"))
}

/// Bell-cat measurement with number-resolving detectors on arbitrary input.
///
/// Disentangles `a`, `b`, then samples photon counts `m` on `a` and `n` on
/// `b` and conditions on both. Unlike [`bell_outcomes`] this accepts states
/// outside the `{|±α⟩}⊗2` subspace, where the conditioned state depends on
/// the individual counts and not only on the class.
pub fn bell_measurement_resolved<R: Rng + ?Sized>(s: &CoherentSuperposition, a: usize, b: usize, rng: &mut R) -> Result<MeasurementRecord> {
    if a == b {
        return Err(Error::SameMode(a));
    }
    let out = bell_disentangle(s, a, b)?.merged();
    let first = sample_photon_number(&out, a, rng)?;
    let rest = first.conditioned.clone().expect("sampled branch has a state");
    let b_after = if b > a { b - 1 } else { b };
    let second = sample_photon_number(&rest, b_after, rng)?;
    let (m, n) = (first.counts[0], second.counts[0]);
    let class = BellClass::from_counts(m, n);
    let mut rec = MeasurementRecord::new(vec![a, b], Outcome::Bell(class), first.probability * second.probability, second.conditioned);
    rec.counts = vec![m, n];
    Ok(rec)
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

    fn bell_cat(alpha: f64, same: bool, sign: f64) -> CoherentSuperposition {
        let (x, y) = if same { (alpha, alpha) } else { (-alpha, alpha) };
        CoherentSuperposition::from_pairs(2, &[(c(1.0, 0.0), &[c(x, 0.0), c(y, 0.0)]), (c(sign, 0.0), &[c(-x, 0.0), c(-y, 0.0)])])
            .normalize()
            .unwrap()
    }

    #[test]
    fn vacuum_counts_zero() {
        let p = photon_statistics(&CoherentSuperposition::vacuum(1), 0, 5).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15);
        assert!(p[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn even_cat_has_no_odd_counts() {
        let p = photon_statistics(&CoherentSuperposition::even_cat(1.4), 0, 30).unwrap();
        for (n, x) in p.iter().enumerate() {
            if n % 2 == 1 {
                assert!(*x < 1e-15, "P({n}) = {x}");
            }
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sign_rule_for_negated_amplitude() {
        for n in 0..=40 {
            for alpha in [0.3, 1.7, 3.0] {
                let a = number_amplitude(c(alpha, 0.0), n);
                let b = number_amplitude(c(-alpha, 0.0), n);
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert!((b - a * sign).norm() <= 1e-15 * (1.0 + a.norm()));
            }
        }
    }

    #[test]
    fn count_on_product_state() {
        let beta = c(0.3, 1.1);
        let s = CoherentSuperposition::coherent(&[c(0.0, 0.0), beta]);
        let rec = project_photon_number(&s, 0, 0).unwrap();
        assert!((rec.probability - 1.0).abs() < 1e-15);
        let cond = rec.conditioned.unwrap();
        assert!((fidelity(&cond, &CoherentSuperposition::coherent(&[beta])).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(project_photon_number(&s, 0, 3), Err(Error::ZeroProbability(_))));
    }

    #[test]
    fn counting_one_mode_of_bell_cat_leaves_signed_cat() {
        let alpha = 1.2;
        let s = bell_cat(alpha, true, 1.0);
        for n in 1..4 {
            let cond = project_photon_number(&s, 0, n).unwrap().conditioned.unwrap();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let expect = CoherentSuperposition::cat(c(alpha, 0.0), sign);
            assert!((fidelity(&cond, &expect).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parity_classes_sum_to_one() {
        let s =
            CoherentSuperposition::from_pairs(1, &[(c(0.3, 0.2), &[c(-1.5, 0.0)]), (c(0.9, -0.1), &[c(1.5, 0.0)])]).normalize().unwrap();
        let recs = parity_projection(&s, 0).unwrap();
        let total: f64 = recs.iter().map(|r| r.probability).sum();
        assert!((total - 1.0).abs() < 1e-10);
        let even = parity_projection(&CoherentSuperposition::even_cat(1.0), 0).unwrap();
        assert!(even[2].probability < 1e-15);
        assert!(even[2].conditioned.is_none());
    }

    #[test]
    fn parity_rejects_unsupported_state() {
        let s = CoherentSuperposition::from_pairs(1, &[(c(1.0, 0.0), &[c(1.0, 0.0)]), (c(1.0, 0.0), &[c(0.5, 0.0)])]);
        assert!(matches!(parity_projection(&s, 0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn cat_projection_splits_coherent_state() {
        let s = CoherentSuperposition::coherent(&[c(1.1, 0.0), c(0.2, 0.0)]);
        let even = cat_projection(&s, 0, 1.1, 1.0).unwrap();
        let odd = cat_projection(&s, 0, 1.1, -1.0).unwrap();
        // |α⟩ lies entirely in the span of the two cats
        assert!((even.probability + odd.probability - 1.0).abs() < 1e-12);
        assert_eq!(even.conditioned.unwrap().modes(), 1);
    }

    #[test]
    fn parity_of_cats() {
        assert!((parity_expectation(&CoherentSuperposition::even_cat(1.3), 0).unwrap() - 1.0).abs() < 1e-14);
        assert!((parity_expectation(&CoherentSuperposition::odd_cat(1.3), 0).unwrap() + 1.0).abs() < 1e-14);
        let coh = CoherentSuperposition::coherent(&[c(0.8, 0.0)]);
        assert!((parity_expectation(&coh, 0).unwrap() - (-2.0 * 0.64f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn vacuum_quadrature_is_gaussian() {
        let v = CoherentSuperposition::vacuum(1);
        for x in [-2.0f64, -0.5, 0.0, 1.0] {
            let expect = (-x * x).exp() / PI.sqrt();
            assert!((homodyne_pdf(&v, 0, x).unwrap() - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn coherent_quadrature_mean() {
        let s = CoherentSuperposition::coherent(&[c(2.0, 0.7)]);
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        let dx = 1e-3;
        let mut x = -15.0;
        while x < 15.0 {
            let p = homodyne_pdf(&s, 0, x).unwrap();
            m0 += p * dx;
            m1 += p * x * dx;
            m2 += p * x * x * dx;
            x += dx;
        }
        assert!((m0 - 1.0).abs() < 1e-8);
        assert!((m1 - 2.0 * SQRT_2).abs() < 1e-8);
        assert!((m2 - m1 * m1 - 0.5).abs() < 1e-8);
    }

    #[test]
    fn homodyne_on_product_leaves_other_mode() {
        let g = c(-0.4, 0.9);
        let s = CoherentSuperposition::coherent(&[c(1.0, 0.3), g]);
        for x in [-1.0, 0.2, 2.5] {
            let cond = homodyne_condition(&s, 0, x).unwrap().conditioned.unwrap();
            assert!((fidelity(&cond, &CoherentSuperposition::coherent(&[g])).unwrap() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn bell_cats_give_their_own_class() {
        let alpha = 1.5;
        for class in BellClass::SUCCESS {
            let state = super::bell_cat(alpha, class).unwrap();
            let recs = bell_outcomes(&state, 0, 1, false).unwrap();
            let fail = recs[4].probability;
            let hit = recs.iter().find(|r| r.outcome == Outcome::Bell(class)).unwrap();
            assert!((hit.probability - (1.0 - fail)).abs() < 1e-10, "{class:?}");
            let total: f64 = recs.iter().map(|r| r.probability).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn resolved_bell_agrees_with_class_version() {
        let s = bell_cat(1.3, false, -1.0).tensor(&CoherentSuperposition::vacuum(1));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let rec = bell_measurement_resolved(&s, 0, 1, &mut rng).unwrap();
            assert!(matches!(rec.outcome, Outcome::Bell(BellClass::IV) | Outcome::Bell(BellClass::Fail)));
        }
    }

    #[test]
    fn record_row_format() {
        let rec = MeasurementRecord::new(vec![0], Outcome::PhotonCount(3), 0.25, None);
        assert_eq!(rec.to_row(), "photon_count,3,2.5000000000000000e-1");
    }
}
