//! Truncated number-basis simulator used as a brute-force reference.
//!
//! Nothing here reuses the coherent-state arithmetic: states are dense
//! arrays over `|n_0, …, n_{M−1}⟩` with `n_i ≤ n_max`, and every element is
//! applied through its generator in the truncated space.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::cstate::CoherentSuperposition;
use crate::error::{Error, Result};

/// Edge-mass budget for oracle operations.
pub const EDGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    modes: usize,
    n_max: usize,
    data: Vec<Complex64>,
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// `⟨n|α⟩` for `n = 0..=n_max`, evaluated in log magnitude.
pub fn number_amplitudes(alpha: Complex64, n_max: usize) -> Vec<Complex64> {
    let lnf = ln_factorials(n_max);
    let r = alpha.norm();
    let base = -0.5 * r * r;
    (0..=n_max)
        .map(|n| {
            if r == 0.0 {
                return if n == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            }
            let lnmag = base + n as f64 * r.ln() - 0.5 * lnf[n];
            Complex64::from_polar(lnmag.exp(), n as f64 * alpha.arg())
        })
        .collect()
}

/// Normalized Hermite functions `⟨x|n⟩` for `x̂ = (a + a†)/√2`.
pub fn hermite_functions(x: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp());
    if n_max >= 1 {
        out.push(std::f64::consts::SQRT_2 * x * out[0]);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

impl FockVector {
    pub fn zeros(modes: usize, n_max: usize) -> Self {
        let len = (n_max + 1).pow(modes as u32);
        FockVector { modes, n_max, data: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn vacuum(modes: usize, n_max: usize) -> Self {
        let mut v = Self::zeros(modes, n_max);
        v.data[0] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    fn dim(&self) -> usize {
        self.n_max + 1
    }

    fn stride(&self, mode: usize) -> usize {
        self.dim().pow((self.modes - 1 - mode) as u32)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes {
            Err(Error::InvalidMode { index: mode, modes: self.modes })
        } else {
            Ok(())
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `1 − ‖v‖²`; meaningful right after [`to_fock`] on a normalized state.
    pub fn tail_mass(&self) -> f64 {
        1.0 - self.norm_sqr()
    }

    /// Probability in the top tenth of levels of any mode.
    pub fn edge_mass(&self) -> f64 {
        let edge = self.n_max - self.n_max / 10;
        self.data
            .iter()
            .enumerate()
            .filter(|&(i, _)| {
                let d = self.dim();
                let mut idx = i;
                (0..self.modes).any(|_| {
                    let n = idx % d;
                    idx /= d;
                    n > edge
                })
            })
            .map(|(_, c)| c.norm_sqr())
            .sum()
    }

    fn guard(&self) -> Result<()> {
        let e = self.edge_mass();
        if e > EDGE_TOL {
            Err(Error::Cutoff(e))
        } else {
            Ok(())
        }
    }

    pub fn scale(&self, f: Complex64) -> Self {
        FockVector { modes: self.modes, n_max: self.n_max, data: self.data.iter().map(|c| c * f).collect() }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if !(n2 > 1e-300) {
            return Err(Error::ZeroNorm(n2));
        }
        Ok(self.scale(Complex64::new(1.0 / n2.sqrt(), 0.0)))
    }

    /// Applies a `(n_max+1)²` matrix to one mode.
    fn apply_single(&self, mode: usize, op: &DMatrix<Complex64>) -> Self {
        let d = self.dim();
        let stride = self.stride(mode);
        let block = stride * d;
        let mut out = FockVector::zeros(self.modes, self.n_max);
        let mut fiber = vec![Complex64::new(0.0, 0.0); d];
        for outer in (0..self.data.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (n, f) in fiber.iter_mut().enumerate() {
                    *f = self.data[base + n * stride];
                }
                for m in 0..d {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (n, f) in fiber.iter().enumerate() {
                        acc += op[(m, n)] * f;
                    }
                    out.data[base + m * stride] = acc;
                }
            }
        }
        out
    }
}

pub fn to_fock(s: &CoherentSuperposition, n_max: usize) -> FockVector {
    let mut v = FockVector::zeros(s.modes(), n_max);
    for t in s.terms() {
        let per_mode: Vec<Vec<Complex64>> = t.amps.iter().map(|&a| number_amplitudes(a, n_max)).collect();
        for (i, c) in v.data.iter_mut().enumerate() {
            let mut idx = i;
            let mut amp = t.coeff;
            for m in (0..per_mode.len()).rev() {
                amp *= per_mode[m][idx % (n_max + 1)];
                idx /= n_max + 1;
            }
            *c += amp;
        }
    }
    v
}

pub fn fock_inner(x: &FockVector, y: &FockVector) -> Result<Complex64> {
    if x.modes != y.modes || x.n_max != y.n_max {
        return Err(Error::ModeMismatch(x.modes, y.modes));
    }
    Ok(x.data.iter().zip(&y.data).map(|(a, b)| a.conj() * b).sum())
}

/// `|⟨x|y⟩|² / (‖x‖²‖y‖²)`.
pub fn fock_fidelity(x: &FockVector, y: &FockVector) -> Result<f64> {
    Ok(fock_inner(x, y)?.norm_sqr() / (x.norm_sqr() * y.norm_sqr()))
}

/// `P(θ) = exp(iθ a†a)`, diagonal in the number basis.
pub fn fock_phase(v: &FockVector, mode: usize, theta: f64) -> Result<FockVector> {
    v.check_mode(mode)?;
    let mut out = v.clone();
    for (i, c) in out.data.iter_mut().enumerate() {
        let n = (i / v.stride(mode)) % v.dim();
        *c *= Complex64::from_polar(1.0, theta * n as f64);
    }
    Ok(out)
}

/// `D(β) = exp(βa† − β*a)` via the matrix exponential of the truncated generator.
pub fn fock_displace(v: &FockVector, mode: usize, beta: Complex64) -> Result<FockVector> {
    v.check_mode(mode)?;
    v.guard()?;
    let d = v.dim();
    let gen = DMatrix::from_fn(d, d, |m, n| {
        if m == n + 1 {
            beta * (m as f64).sqrt()
        } else if n == m + 1 {
            -beta.conj() * (n as f64).sqrt()
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let out = v.apply_single(mode, &gen.exp());
    out.guard()?;
    Ok(out)
}

/// `B(θ) = exp[iθ(ab† + a†b)]`, applied block by block in total photon number.
pub fn fock_beamsplitter(v: &FockVector, a: usize, b: usize, theta: f64) -> Result<FockVector> {
    v.check_mode(a)?;
    v.check_mode(b)?;
    if a == b {
        return Err(Error::SameMode(a));
    }
    v.guard()?;
    let d = v.dim();
    let (sa, sb) = (v.stride(a), v.stride(b));
    // spectator offsets: every flat index with zero occupation in modes a and b
    let spectators: Vec<usize> = (0..v.data.len()).filter(|&i| (i / sa) % d == 0 && (i / sb) % d == 0).collect();
    let mut out = FockVector::zeros(v.modes, v.n_max);
    for total in 0..=2 * v.n_max {
        // basis |m, total − m⟩ with both occupations inside the cutoff
        let lo = total.saturating_sub(v.n_max);
        let hi = total.min(v.n_max);
        let k = hi - lo + 1;
        // ab† lowers a and raises b: ⟨m−1, n+1| ab† |m, n⟩ = √m √(n+1)
        let gen = DMatrix::from_fn(k, k, |r, c| {
            let (mr, mc) = (lo + r, lo + c);
            let coupling = if mr + 1 == mc {
                ((mc as f64) * ((total - mc + 1) as f64)).sqrt()
            } else if mc + 1 == mr {
                ((mr as f64) * ((total - mr + 1) as f64)).sqrt()
            } else {
                0.0
            };
            Complex64::new(0.0, theta * coupling)
        });
        let u = gen.exp();
        let mut col = vec![Complex64::new(0.0, 0.0); k];
        for &s in &spectators {
            let at = |m: usize| s + m * sa + (total - m) * sb;
            for (r, slot) in col.iter_mut().enumerate() {
                *slot = v.data[at(lo + r)];
            }
            if col.iter().all(|c| c.norm_sqr() == 0.0) {
                continue;
            }
            for r in 0..k {
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, x) in col.iter().enumerate() {
                    acc += u[(r, c)] * x;
                }
                out.data[at(lo + r)] = acc;
            }
        }
    }
    out.guard()?;
    Ok(out)
}

/// Contracts `mode` with `⟨n|`; unnormalized.
pub fn fock_project_number(v: &FockVector, mode: usize, n: usize) -> Result<FockVector> {
    fock_contract(v, mode, |k| if k == n { 1.0 } else { 0.0 })
}

/// Contracts `mode` with the quadrature eigenbra `⟨x|`; unnormalized.
pub fn fock_quadrature_condition(v: &FockVector, mode: usize, x: f64) -> Result<FockVector> {
    let h = hermite_functions(x, v.n_max);
    fock_contract(v, mode, |k| h[k])
}

fn fock_contract<F: Fn(usize) -> f64>(v: &FockVector, mode: usize, weight: F) -> Result<FockVector> {
    v.check_mode(mode)?;
    let d = v.dim();
    let stride = v.stride(mode);
    let mut out = FockVector::zeros(v.modes - 1, v.n_max);
    for (i, c) in v.data.iter().enumerate() {
        let n = (i / stride) % d;
        let w = weight(n);
        if w == 0.0 {
            continue;
        }
        let reduced = (i / (stride * d)) * stride + i % stride;
        out.data[reduced] += c * w;
    }
    Ok(out)
}

/// Marginal photon-number distribution of one mode.
pub fn fock_measure_number(v: &FockVector, mode: usize) -> Result<Vec<f64>> {
    v.check_mode(mode)?;
    let mut p = vec![0.0; v.dim()];
    for (i, c) in v.data.iter().enumerate() {
        p[(i / v.stride(mode)) % v.dim()] += c.norm_sqr();
    }
    Ok(p)
}

/// Marginal density of `x̂ = (a + a†)/√2` on one mode.
pub fn fock_quadrature_pdf(v: &FockVector, mode: usize, x: f64) -> Result<f64> {
    Ok(fock_quadrature_condition(v, mode, x)?.norm_sqr())
}

/// `⟨G⟩` and `⟨G²⟩` for `G = Σ_m i(u a_m† − u* a_m)` over `modes`.
pub fn fock_displacement_generator_moments(v: &FockVector, modes: &[usize], u: Complex64) -> Result<(f64, f64)> {
    for &m in modes {
        v.check_mode(m)?;
    }
    let apply = |w: &FockVector| -> FockVector {
        let mut out = FockVector::zeros(w.modes, w.n_max);
        let d = w.dim();
        for &m in modes {
            let stride = w.stride(m);
            for (i, c) in w.data.iter().enumerate() {
                let n = (i / stride) % d;
                if n + 1 < d {
                    // i·u·a† raises n
                    out.data[i + stride] += Complex64::i() * u * ((n + 1) as f64).sqrt() * c;
                }
                if n > 0 {
                    out.data[i - stride] += -Complex64::i() * u.conj() * (n as f64).sqrt() * c;
                }
            }
        }
        out
    };
    let g1 = apply(v);
    let mean = fock_inner(v, &g1)?.re;
    let second = g1.norm_sqr();
    Ok((mean, second))
}
