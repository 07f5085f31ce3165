//! Weak-force sensing with coherent and cat probes, Ramsey phase estimation
//! and the cat-state ruler.
//!
//! Displacements are written `D(εd) = exp(−iεG)` with generator
//! `G = i(d A† − d* A)` and `A = Σ_m a_m` summed over all modes of the probe.
//! The quantum Fisher information of a pure probe is `4 Var(G)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::cstate::{coherent_overlap, CoherentSuperposition};
use crate::error::{Error, Result};
use crate::measure::parity_expectation;
use crate::optics::{displace, ghz_cat, nport_combine, phase_shift};

/// Signal-to-noise ratio of a homodyne measurement of `|α₀⟩` displaced by `iε`.
pub fn classical_snr(_alpha0: f64, epsilon: f64) -> f64 {
    2.0 * epsilon
}

/// Displacement at which the classical SNR reaches one.
pub fn sql_threshold() -> f64 {
    0.5
}

/// Mean shift over standard deviation of the homodyne signal, computed by
/// integrating the quadrature distributions of `|α₀⟩` and `D(iε)|α₀⟩`.
/// The displaced quadrature is rotated onto `x̂` first.
pub fn homodyne_snr(alpha0: f64, epsilon: f64) -> Result<f64> {
    let moments = |s: &CoherentSuperposition| -> Result<(f64, f64)> {
        let rotated = phase_shift(s, 0, -PI / 2.0)?;
        let centre = alpha0.abs() * std::f64::consts::SQRT_2;
        let (lo, hi) = (-centre - 12.0, centre + 12.0);
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for i in 0..=n {
            let x = lo + h * i as f64;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            let p = crate::measure::homodyne_pdf(&rotated, 0, x)? * w;
            m0 += p;
            m1 += p * x;
            m2 += p * x * x;
        }
        let mean = m1 / m0;
        Ok((mean, (m2 / m0 - mean * mean).sqrt()))
    };
    let probe = CoherentSuperposition::coherent(&[Complex64::new(alpha0, 0.0)]);
    let (m_a, sd) = moments(&probe)?;
    let (m_b, _) = moments(&displace(&probe, 0, Complex64::new(0.0, epsilon))?)?;
    Ok((m_b - m_a) / sd)
}

/// Exact `D(iε)` applied to the normalized even cat.
pub fn displaced_cat(alpha: f64, epsilon: f64) -> Result<CoherentSuperposition> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("cat amplitude must be positive, got {alpha}")));
    }
    displace(&CoherentSuperposition::even_cat(alpha), 0, Complex64::new(0.0, epsilon))
}

/// Small-displacement form `(e^{iεα}|α⟩ + e^{−iεα}|−α⟩)`, normalized.
pub fn displaced_cat_approx(alpha: f64, epsilon: f64) -> Result<CoherentSuperposition> {
    let a = Complex64::new(alpha, 0.0);
    CoherentSuperposition::from_pairs(
        1,
        &[(Complex64::from_polar(1.0, epsilon * alpha), &[a]), (Complex64::from_polar(1.0, -epsilon * alpha), &[-a])],
    )
    .normalize()
}

/// Weighted pair sum `Σ_jk c_j* c_k ⟨γ_j|γ_k⟩ f(Γ_j*, Γ_k) / ⟨ψ|ψ⟩` where
/// `Γ = Σ_m γ_m` is the collective amplitude of a term.
fn collective_moment<F>(s: &CoherentSuperposition, f: F) -> Complex64
where
    F: Fn(Complex64, Complex64) -> Complex64,
{
    let terms = s.terms();
    let gamma: Vec<Complex64> = terms.iter().map(|t| t.amps.iter().sum()).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, tj) in terms.iter().enumerate() {
        for (k, tk) in terms.iter().enumerate() {
            let ov: Complex64 = tj.amps.iter().zip(&tk.amps).map(|(&a, &b)| coherent_overlap(a, b)).product();
            acc += tj.coeff.conj() * tk.coeff * ov * f(gamma[j].conj(), gamma[k]);
        }
    }
    acc / s.norm_sqr()
}

/// Exact `⟨Σ_m a_m† a_m⟩`.
pub fn mean_photon_number(s: &CoherentSuperposition) -> f64 {
    let terms = s.terms();
    let mut acc = Complex64::new(0.0, 0.0);
    for tj in terms {
        for tk in terms {
            let ov: Complex64 = tj.amps.iter().zip(&tk.amps).map(|(&a, &b)| coherent_overlap(a, b)).product();
            let n: Complex64 = tj.amps.iter().zip(&tk.amps).map(|(&a, &b)| a.conj() * b).sum();
            acc += tj.coeff.conj() * tk.coeff * ov * n;
        }
    }
    acc.re / s.norm_sqr()
}

/// `4 Var(G)` for a collective displacement of every mode along `direction`.
pub fn qfi_displacement(s: &CoherentSuperposition, direction: Complex64) -> Result<f64> {
    let len = direction.norm();
    if !(len > 0.0 && len.is_finite()) {
        return Err(Error::InvalidParameter("displacement direction must be nonzero".into()));
    }
    let d = direction / len;
    let m = s.modes() as f64;
    let a1 = collective_moment(s, |_, k| k);
    let a2 = collective_moment(s, |_, k| k * k);
    let n = collective_moment(s, |j, k| j * k).re;
    let i = Complex64::i();
    let g1 = (i * (d * a1.conj() - d.conj() * a1)).re;
    let g2 = -(d * d * a2.conj() + d.conj() * d.conj() * a2).re + 2.0 * n + m;
    Ok(4.0 * (g2 - g1 * g1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Classical,
    SingleCat,
    MultimodeCat,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Classical => "classical",
            Regime::SingleCat => "single_cat",
            Regime::MultimodeCat => "multimode_cat",
        }
    }
}

/// Monte Carlo summary of the parity-readout estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorStats {
    pub shots: usize,
    pub repeats: usize,
    /// Probability of an even parity count at the true displacement.
    pub p_even: f64,
    pub mean: f64,
    pub variance: f64,
    /// `1/(shots·F)` with `F` the Fisher information of the parity readout.
    pub cramer_rao_parity: f64,
    /// `1/(shots·qfi)`.
    pub cramer_rao: f64,
    /// `cramer_rao / variance`.
    pub saturation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub regime: Regime,
    pub alpha: f64,
    pub modes: usize,
    /// Total mean photon number in the `|α|²` convention.
    pub n_tot: f64,
    /// Exact total mean photon number of the probe.
    pub n_exact: f64,
    pub epsilon: f64,
    pub qfi: f64,
    /// `1/√qfi`, where the SNR `ε√qfi` reaches one.
    pub epsilon_min: f64,
    /// `1/√Var(G)`: the bound written as `1/√(N[1 + 4n_tot])`.
    pub epsilon_min_var: f64,
    pub snr: f64,
    pub estimate: Option<EstimatorStats>,
}

fn report(regime: Regime, probe: &CoherentSuperposition, alpha: f64, modes: usize, epsilon: f64) -> Result<SensitivityReport> {
    let qfi = qfi_displacement(probe, Complex64::i())?;
    let (epsilon_min, epsilon_min_var) = if qfi > 0.0 { (1.0 / qfi.sqrt(), 2.0 / qfi.sqrt()) } else { (f64::INFINITY, f64::INFINITY) };
    Ok(SensitivityReport {
        regime,
        alpha,
        modes,
        n_tot: alpha * alpha,
        n_exact: mean_photon_number(probe),
        epsilon,
        qfi,
        epsilon_min,
        epsilon_min_var,
        snr: epsilon * qfi.sqrt(),
        estimate: None,
    })
}

/// Bounds for a coherent probe `|α₀⟩`.
pub fn classical_sensitivity(alpha0: f64, epsilon: f64) -> Result<SensitivityReport> {
    report(Regime::Classical, &CoherentSuperposition::coherent(&[Complex64::new(alpha0, 0.0)]), alpha0, 1, epsilon)
}

/// The N-mode cat `|α/√N, …⟩ + |−α/√N, …⟩`, so `n_tot = α²` for every N.
pub fn multimode_probe(alpha: f64, modes: usize) -> Result<CoherentSuperposition> {
    if modes == 0 {
        return Err(Error::InvalidParameter("need at least one mode".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("cat amplitude must be positive, got {alpha}")));
    }
    ghz_cat(alpha, modes)
}

/// Bounds for the N-mode cat probe (no sampling).
pub fn cat_sensitivity(alpha: f64, modes: usize, epsilon: f64) -> Result<SensitivityReport> {
    let probe = multimode_probe(alpha, modes)?;
    let regime = if modes == 1 { Regime::SingleCat } else { Regime::MultimodeCat };
    report(regime, &probe, alpha, modes, epsilon)
}

/// `1/√(N[1 + 4n_tot])`.
pub fn multimode_epsilon_bound(n_tot: f64, modes: usize) -> f64 {
    1.0 / ((modes as f64) * (1.0 + 4.0 * n_tot)).sqrt()
}

/// Total qfi of `N` independent single-mode even cats sharing `n_tot = α²`.
pub fn independent_cats_qfi(alpha: f64, modes: usize) -> Result<f64> {
    let single = CoherentSuperposition::even_cat(alpha / (modes as f64).sqrt());
    Ok(modes as f64 * qfi_displacement(&single, Complex64::i())?)
}

/// Probability of even parity after displacing every probe mode by `iε`
/// and recombining the modes on the inverse N-port.
pub fn parity_readout(alpha: f64, modes: usize, epsilon: f64) -> Result<f64> {
    let mut s = multimode_probe(alpha, modes)?;
    for m in 0..modes {
        s = displace(&s, m, Complex64::new(0.0, epsilon))?;
    }
    let all: Vec<usize> = (0..modes).collect();
    let combined = nport_combine(&s, &all)?;
    Ok(((1.0 + parity_expectation(&combined, 0)?) / 2.0).clamp(0.0, 1.0))
}

/// Displacement that puts the parity readout at its steepest point,
/// `P(even) ≈ 1/2`.
pub fn operating_point(alpha: f64, modes: usize) -> f64 {
    PI / (8.0 * alpha * (modes as f64).sqrt())
}

/// Upper end of the monotone branch of [`parity_readout`].
fn estimator_range(alpha: f64, modes: usize) -> f64 {
    PI / (4.0 * alpha * (modes as f64).sqrt())
}

/// Maximum-likelihood `ε` from `evens` even outcomes in `shots` trials.
pub fn estimate_epsilon(alpha: f64, modes: usize, evens: u64, shots: u64) -> Result<f64> {
    let target = evens as f64 / shots as f64;
    let (mut lo, mut hi) = (0.0, estimator_range(alpha, modes));
    if target >= parity_readout(alpha, modes, lo)? {
        return Ok(lo);
    }
    if target <= parity_readout(alpha, modes, hi)? {
        return Ok(hi);
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if parity_readout(alpha, modes, mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `d f/dx` by a Richardson-extrapolated centred difference with step `h`.
pub fn richardson_derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Step used for all numerical Fisher information.
pub const FD_STEP: f64 = 1e-4;

/// Fisher information of a two-outcome measurement with success probability `p(x)`.
pub fn binary_fisher<F: Fn(f64) -> f64>(p: F, x: f64) -> f64 {
    let dp = richardson_derivative(&p, x, FD_STEP);
    let q = p(x);
    dp * dp / (q * (1.0 - q))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakForceSpec {
    pub alpha: f64,
    pub modes: usize,
    pub epsilon: f64,
    pub shots: usize,
    pub repeats: usize,
}

/// Parity-readout sensing of a displacement `iε` on every probe mode.
///
/// Each of `repeats` experiments draws `shots` parity outcomes and forms
/// the maximum-likelihood estimate; the spread of the estimates is
/// compared with the Cramér–Rao bounds.
pub fn weak_force_experiment<R: Rng + ?Sized>(spec: WeakForceSpec, rng: &mut R) -> Result<SensitivityReport> {
    if spec.shots == 0 || spec.repeats < 2 {
        return Err(Error::InvalidParameter("need shots >= 1 and repeats >= 2".into()));
    }
    let mut rep = cat_sensitivity(spec.alpha, spec.modes, spec.epsilon)?;
    let p = parity_readout(spec.alpha, spec.modes, spec.epsilon)?;
    let binom = Binomial::new(spec.shots as u64, p).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut estimates = Vec::with_capacity(spec.repeats);
    for _ in 0..spec.repeats {
        let k = binom.sample(rng);
        estimates.push(estimate_epsilon(spec.alpha, spec.modes, k, spec.shots as u64)?);
    }
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let variance = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let fisher = binary_fisher(|e| parity_readout(spec.alpha, spec.modes, e).unwrap_or(f64::NAN), spec.epsilon);
    let cramer_rao = 1.0 / (spec.shots as f64 * rep.qfi);
    rep.estimate = Some(EstimatorStats {
        shots: spec.shots,
        repeats: spec.repeats,
        p_even: p,
        mean,
        variance,
        cramer_rao_parity: 1.0 / (spec.shots as f64 * fisher),
        cramer_rao,
        saturation: cramer_rao / variance,
    });
    Ok(rep)
}

/// Least-squares line `y = slope·x + intercept`, with the coefficient of
/// determination `R²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter("line fit needs two or more paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("line fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LineFit { slope, intercept: my - slope * mx, r2 })
}

/// `P(+|θ)`: `cos²θ` for one unentangled system, `cos²(Nθ)` for the
/// N-particle entangled probe.
pub fn ramsey_probability(theta: f64, n: usize, entangled: bool) -> f64 {
    let phase = if entangled { n as f64 * theta } else { theta };
    phase.cos().powi(2)
}

/// Fisher information about `θ` carried by one run of the chosen strategy
/// on `n` systems, from finite differences of [`ramsey_probability`].
pub fn ramsey_fisher(theta: f64, n: usize, entangled: bool) -> f64 {
    if entangled {
        binary_fisher(|t| ramsey_probability(t, n, true), theta)
    } else {
        n as f64 * binary_fisher(|t| ramsey_probability(t, 1, false), theta)
    }
}

/// `δθ = 1/√F`.
pub fn ramsey_uncertainty(theta: f64, n: usize, entangled: bool) -> f64 {
    1.0 / ramsey_fisher(theta, n, entangled).sqrt()
}

/// `P(+|θ)` for `(|0…0⟩ + |1…1⟩)/√2` from an explicit `2^N` state vector:
/// each qubit picks up `e^{±iθ}` and the state is projected back onto the
/// initial GHZ state.
pub fn ghz_statevector_probability(theta: f64, n: usize) -> f64 {
    let dim = 1usize << n;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut psi = vec![Complex64::new(0.0, 0.0); dim];
    psi[0] = Complex64::new(h, 0.0);
    psi[dim - 1] = Complex64::new(h, 0.0);
    for (k, amp) in psi.iter_mut().enumerate() {
        let ones = k.count_ones() as f64;
        let zeros = n as f64 - ones;
        *amp *= Complex64::from_polar(1.0, theta * (zeros - ones));
    }
    let overlap = (psi[0] + psi[dim - 1]) * h;
    overlap.norm_sqr()
}

/// Default fringe-visibility floor for [`quantum_ruler`] peaks.
pub const FRINGE_FLOOR: f64 = 0.01;

/// Readout probability `(1 + Re⟨cat|P(θ)|cat⟩)/2` of the even-cat ruler.
pub fn ruler_probability(alpha: f64, theta: f64) -> Result<f64> {
    let cat = CoherentSuperposition::even_cat(alpha);
    let moved = phase_shift(&cat, 0, theta)?;
    Ok(((1.0 + crate::cstate::inner_product(&cat, &moved)?.re) / 2.0).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringeScan {
    pub alpha: f64,
    /// Wavelength in metres.
    pub wavelength: f64,
    pub theta: Vec<f64>,
    /// `θλ/(2π)`, metres.
    pub length: Vec<f64>,
    pub probability: Vec<f64>,
    /// Refined fringe maxima, radians.
    pub peaks: Vec<f64>,
    /// Median distance between neighbouring maxima, radians.
    pub spacing: f64,
    pub spacing_length: f64,
}

/// Scans the phase of a cat probe and measures the fringe spacing.
pub fn quantum_ruler(alpha: f64, wavelength: f64, range: (f64, f64), points: usize) -> Result<FringeScan> {
    if !(alpha > 0.0 && wavelength > 0.0) {
        return Err(Error::InvalidParameter("need α > 0 and λ > 0".into()));
    }
    if points < 3 || !(range.1 > range.0) {
        return Err(Error::InvalidParameter("scan needs an increasing range and at least 3 points".into()));
    }
    let step = (range.1 - range.0) / (points - 1) as f64;
    let theta: Vec<f64> = (0..points).map(|i| range.0 + step * i as f64).collect();
    let probability: Vec<f64> = theta.iter().map(|&t| ruler_probability(alpha, t)).collect::<Result<_>>()?;
    let mut peaks = Vec::new();
    for i in 1..points - 1 {
        let (l, c, r) = (probability[i - 1], probability[i], probability[i + 1]);
        if c > l && c >= r && c > 0.5 + FRINGE_FLOOR {
            let curv = l - 2.0 * c + r;
            let shift = if curv < 0.0 { 0.5 * (l - r) / curv } else { 0.0 };
            peaks.push(theta[i] + shift * step);
        }
    }
    if peaks.len() < 2 {
        return Err(Error::TooFewFringes(peaks.len()));
    }
    let mut gaps: Vec<f64> = peaks.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(|a, b| a.total_cmp(b));
    let mid = gaps.len() / 2;
    let spacing = if gaps.len() % 2 == 1 { gaps[mid] } else { 0.5 * (gaps[mid - 1] + gaps[mid]) };
    let to_length = wavelength / (2.0 * PI);
    Ok(FringeScan {
        alpha,
        wavelength,
        length: theta.iter().map(|t| t * to_length).collect(),
        theta,
        probability,
        peaks,
        spacing,
        spacing_length: spacing * to_length,
    })
}
