//! The six experiments. Each takes a fully resolved config, fans out over
//! parameter points with rayon and derives the RNG for point `i` from
//! `seed ^ i`, so rows come back in point order whatever the thread count.

use catsim::audit::{audit_row, random_case, AuditRow, CheckKind};
use catsim::cstate::fidelity;
use catsim::measure::{bell_cat, bell_outcomes, BellClass};
use catsim::metrology::{
    cat_sensitivity, ghz_statevector_probability, linear_fit, multimode_epsilon_bound, operating_point, quantum_ruler, ramsey_fisher,
    ramsey_probability, weak_force_experiment, WeakForceSpec,
};
use catsim::optics::displace;
use catsim::qgates::{
    decode, decode_register, encode, encode_register, entangling_gate, gate_rx_pi2, gate_rz, gate_x, gate_z, rx_pi2_branches, rx_theta,
    teleport_branches, QubitEncoding,
};
use catsim::table::{Cell, Table};
use catsim::{Complex64, Error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{CliError, Echo};
use crate::output::Report;

pub struct Outcome {
    pub report: Report,
    /// Set when a property check failed; the report is still written.
    pub failure: Option<String>,
}

impl Outcome {
    fn ok(report: Report) -> Self {
        Outcome { report, failure: None }
    }
}

fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index as u64)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub struct BellStats {
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub trials: usize,
}

pub fn bell_stats(cfg: &BellStats) -> Result<Outcome, CliError> {
    let rows: Vec<Vec<Vec<Cell>>> = cfg
        .alphas
        .par_iter()
        .enumerate()
        .map(|(i, &alpha)| -> Result<Vec<Vec<Cell>>, CliError> {
            let mut rng = point_rng(cfg.seed, i);
            let mut out = Vec::new();
            for class in BellClass::SUCCESS {
                let recs = bell_outcomes(&bell_cat(alpha, class)?, 0, 1, false)?;
                let p: Vec<f64> = recs.iter().map(|r| r.probability).collect();
                let correct = BellClass::SUCCESS.iter().position(|&k| k == class).unwrap();
                let (mut hits, mut fails) = (0usize, 0usize);
                for _ in 0..cfg.trials {
                    let mut u = rand::Rng::gen::<f64>(&mut rng) * p.iter().sum::<f64>();
                    let mut pick = p.len() - 1;
                    for (k, pk) in p.iter().enumerate() {
                        if u < *pk {
                            pick = k;
                            break;
                        }
                        u -= pk;
                    }
                    hits += usize::from(pick == correct);
                    fails += usize::from(pick == 4);
                }
                let n = cfg.trials.max(1) as f64;
                let mut row: Vec<Cell> = vec![alpha.into(), class.name().into()];
                row.extend(p.iter().map(|&x| Cell::from(x)));
                row.extend([p[correct].into(), (hits as f64 / n).into(), (fails as f64 / n).into()]);
                out.push(row);
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(["alpha", "state", "p_i", "p_ii", "p_iii", "p_iv", "p_fail", "p_correct", "freq_correct", "freq_fail"]);
    rows.into_iter().flatten().for_each(|r| table.push(r));
    let mut report =
        Report::new("bell-stats", cfg.seed, vec![("alpha", Echo::Floats(cfg.alphas.clone())), ("trials", Echo::Int(cfg.trials as u64))]);
    let fail: Vec<(f64, f64)> = table
        .rows()
        .iter()
        .filter(|r| r[1] == Cell::from("I"))
        .filter_map(|r| match (&r[0], &r[6]) {
            (Cell::Float(a), Cell::Float(p)) if *p > 0.0 => Some((a * a, p.ln())),
            _ => None,
        })
        .collect();
    if fail.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = fail.into_iter().unzip();
        let fit = linear_fit(&x, &y)?;
        report.notes.push(format!(
            "fail_fit ln(p_fail) = intercept + slope*alpha^2: slope = {}, intercept = {}, r2 = {}",
            catsim::table::format_float(fit.slope),
            catsim::table::format_float(fit.intercept),
            catsim::table::format_float(fit.r2)
        ));
    }
    report.tables.push(("bell_outcomes", table));
    Ok(Outcome::ok(report))
}

pub struct GateCheck {
    pub seed: u64,
    pub alphas: Vec<f64>,
    /// `θα²` values for the Rz, entangling and teleport rows.
    pub strengths: Vec<f64>,
}

/// Runs a sampled gate until it does not herald a failure.
fn retry<T>(mut f: impl FnMut() -> catsim::Result<T>) -> catsim::Result<T> {
    for _ in 0..catsim::qgates::RUS_LIMIT {
        match f() {
            Err(Error::BellFailure) | Err(Error::ProjectionFailure) => continue,
            other => return other,
        }
    }
    Err(Error::RetryLimit(catsim::qgates::RUS_LIMIT))
}

fn wrap(phase: f64) -> f64 {
    let mut p = phase % (2.0 * std::f64::consts::PI);
    if p > std::f64::consts::PI {
        p -= 2.0 * std::f64::consts::PI;
    } else if p < -std::f64::consts::PI {
        p += 2.0 * std::f64::consts::PI;
    }
    p
}

fn gate_rows(alpha: f64, strength: f64, rng: &mut ChaCha8Rng) -> catsim::Result<Vec<Vec<Cell>>> {
    let e = QubitEncoding::new(alpha, 0)?;
    let theta = strength / (alpha * alpha);
    let (mu, nu) = (c(0.6, 0.0), c(0.0, 0.8));
    let input = encode(mu, nu, e)?;
    let mut rows = Vec::new();
    let mut row = |gate: &str, th: f64, expected: f64, measured: f64, leakage: f64, probability: f64, reps: usize| {
        rows.push(vec![
            gate.into(),
            alpha.into(),
            th.into(),
            expected.into(),
            measured.into(),
            (measured - expected).abs().into(),
            leakage.into(),
            probability.into(),
            reps.into(),
        ]);
    };

    let x = gate_x(&input, e)?;
    row("x", 0.0, 1.0, fidelity(&x, &encode(nu, mu, e)?)?, decode(&x, e)?.leakage, 1.0, 0);

    let z = retry(|| gate_z(&input, e, rng))?;
    row("z", 0.0, 1.0, fidelity(&z.state, &encode(mu, -nu, e)?)?, decode(&z.state, e)?.leakage, z.probability, z.repetitions);

    let branches = teleport_branches(&input, e)?;
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    let displaced = displace(&input, 0, c(0.0, alpha * theta))?;
    row("teleport_sum", theta, 1.0, total, decode(&displaced, e)?.leakage, total, 1);

    let before = decode(&input, e)?.relative_phase();
    let rz = retry(|| gate_rz(&input, e, theta, rng))?;
    let d = decode(&rz.state, e)?;
    row("rz", theta, 4.0 * strength, wrap(d.relative_phase() - before), d.leakage, rz.probability, rz.repetitions);

    let th = rx_theta(alpha);
    let rx_total: f64 = rx_pi2_branches(&input, e, th)?.iter().map(|b| b.probability).sum();
    let rx = retry(|| gate_rx_pi2(&encode(c(1.0, 0.0), c(0.0, 0.0), e)?, e, th, rng))?;
    let dr = decode(&rx.state, e)?;
    let [a, b] = dr.logical();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let target = [Complex64::from_polar(h, std::f64::consts::FRAC_PI_4), Complex64::from_polar(h, -std::f64::consts::FRAC_PI_4)];
    let fid = (a.conj() * target[0] + b.conj() * target[1]).norm_sqr();
    row("rx_pi2", th, 1.0, fid, dr.leakage, rx_total, rx.repetitions);

    let (ea, eb) = (QubitEncoding::new(alpha, 0)?, QubitEncoding::new(alpha, 1)?);
    let encs = [ea, eb];
    let pair = encode_register(&[c(0.5, 0.0); 4], &encs)?;
    let step = retry(|| entangling_gate(&pair, ea, eb, theta, rng))?;
    let dz = decode_register(&step.state, &encs)?;
    let rel = wrap((dz.amplitudes[0] / dz.amplitudes[2]).arg());
    row("zz_step", theta, 2.0 * strength, rel, dz.leakage, step.probability, step.repetitions);
    Ok(rows)
}

pub fn gate_check(cfg: &GateCheck) -> Result<Outcome, CliError> {
    let points: Vec<(f64, f64)> = cfg.alphas.iter().flat_map(|&a| cfg.strengths.iter().map(move |&s| (a, s))).collect();
    let rows: Vec<Vec<Vec<Cell>>> =
        points.par_iter().enumerate().map(|(i, &(a, s))| gate_rows(a, s, &mut point_rng(cfg.seed, i))).collect::<catsim::Result<_>>()?;
    let mut table = Table::new(["gate", "alpha", "theta", "expected", "measured", "abs_error", "leakage", "probability", "teleports"]);
    rows.into_iter().flatten().for_each(|r| table.push(r));
    let mut report = Report::new(
        "gate-check",
        cfg.seed,
        vec![("alpha", Echo::Floats(cfg.alphas.clone())), ("strength", Echo::Floats(cfg.strengths.clone()))],
    );
    report.tables.push(("gates", table));
    Ok(Outcome::ok(report))
}

pub struct WeakForce {
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub modes: Vec<usize>,
    /// `None` puts each point at its steepest readout slope.
    pub epsilon: Option<f64>,
    pub shots: usize,
    pub repeats: usize,
}

pub fn weak_force(cfg: &WeakForce) -> Result<Outcome, CliError> {
    let points: Vec<(f64, usize)> = cfg.alphas.iter().flat_map(|&a| cfg.modes.iter().map(move |&n| (a, n))).collect();
    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .enumerate()
        .map(|(i, &(alpha, modes))| -> catsim::Result<Vec<Cell>> {
            let epsilon = cfg.epsilon.unwrap_or_else(|| operating_point(alpha, modes));
            let spec = WeakForceSpec { alpha, modes, epsilon, shots: cfg.shots, repeats: cfg.repeats };
            let r = weak_force_experiment(spec, &mut point_rng(cfg.seed, i))?;
            let est = r.estimate.clone().expect("experiment fills the estimate");
            Ok(vec![
                alpha.into(),
                modes.into(),
                r.regime.name().into(),
                r.n_tot.into(),
                r.n_exact.into(),
                epsilon.into(),
                r.qfi.into(),
                r.epsilon_min.into(),
                r.epsilon_min_var.into(),
                multimode_epsilon_bound(r.n_tot, modes).into(),
                r.snr.into(),
                est.p_even.into(),
                est.mean.into(),
                est.variance.into(),
                est.cramer_rao.into(),
                est.cramer_rao_parity.into(),
                est.saturation.into(),
            ])
        })
        .collect::<catsim::Result<_>>()?;
    let mut table = Table::new([
        "alpha",
        "modes",
        "regime",
        "n_tot",
        "n_exact",
        "epsilon",
        "qfi",
        "epsilon_min",
        "epsilon_min_var",
        "bound_formula",
        "snr",
        "p_even",
        "estimate_mean",
        "estimate_variance",
        "cramer_rao",
        "cramer_rao_parity",
        "saturation",
    ]);
    rows.into_iter().for_each(|r| table.push(r));
    let eps_echo = match cfg.epsilon {
        Some(e) => Echo::Float(e),
        None => Echo::Text("operating-point".into()),
    };
    let mut report = Report::new(
        "weak-force",
        cfg.seed,
        vec![
            ("alpha", Echo::Floats(cfg.alphas.clone())),
            ("n", Echo::Ints(cfg.modes.clone())),
            ("epsilon", eps_echo),
            ("shots", Echo::Int(cfg.shots as u64)),
            ("repeats", Echo::Int(cfg.repeats as u64)),
        ],
    );
    report.tables.push(("sensitivity", table));
    // closed-form bounds only, no sampling
    let mut bounds = Table::new(["alpha", "modes", "qfi", "epsilon_min", "epsilon_min_var"]);
    for &alpha in &cfg.alphas {
        for &n in &cfg.modes {
            let r = cat_sensitivity(alpha, n, 0.0)?;
            bounds.push(vec![alpha.into(), n.into(), r.qfi.into(), r.epsilon_min.into(), r.epsilon_min_var.into()]);
        }
    }
    report.tables.push(("bounds", bounds));
    Ok(Outcome::ok(report))
}

pub struct Ruler {
    pub alphas: Vec<f64>,
    pub lambda: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub points: usize,
    pub scan: bool,
}

pub fn ruler(cfg: &Ruler, seed: u64) -> Result<Outcome, CliError> {
    let scans: Vec<_> = cfg
        .alphas
        .par_iter()
        .map(|&a| quantum_ruler(a, cfg.lambda, (cfg.theta_min, cfg.theta_max), cfg.points))
        .collect::<catsim::Result<_>>()?;
    let mut table = Table::new(["alpha", "lambda", "peaks", "spacing_rad", "spacing_m", "spacing_x_alpha", "spacing_x_alpha2"]);
    for s in &scans {
        table.push(vec![
            s.alpha.into(),
            s.wavelength.into(),
            s.peaks.len().into(),
            s.spacing.into(),
            s.spacing_length.into(),
            (s.spacing * s.alpha).into(),
            (s.spacing * s.alpha * s.alpha).into(),
        ]);
    }
    let mut report = Report::new(
        "ruler",
        seed,
        vec![
            ("alpha", Echo::Floats(cfg.alphas.clone())),
            ("lambda", Echo::Float(cfg.lambda)),
            ("theta-min", Echo::Float(cfg.theta_min)),
            ("theta-max", Echo::Float(cfg.theta_max)),
            ("points", Echo::Int(cfg.points as u64)),
        ],
    );
    report.tables.push(("fringes", table));
    if cfg.scan {
        let mut full = Table::new(["alpha", "theta", "length_m", "probability"]);
        for s in &scans {
            for i in 0..s.theta.len() {
                full.push(vec![s.alpha.into(), s.theta[i].into(), s.length[i].into(), s.probability[i].into()]);
            }
        }
        report.tables.push(("scan", full));
    }
    Ok(Outcome::ok(report))
}

pub struct Ramsey {
    pub ns: Vec<usize>,
    pub thetas: Vec<f64>,
}

pub fn ramsey(cfg: &Ramsey, seed: u64) -> Result<Outcome, CliError> {
    let mut table = Table::new([
        "n",
        "theta",
        "p_product",
        "p_entangled",
        "p_statevector",
        "fisher_product",
        "fisher_entangled",
        "fisher_ratio",
        "dtheta_product",
        "dtheta_entangled",
    ]);
    for (&theta, &n) in cfg.thetas.iter().flat_map(|t| cfg.ns.iter().map(move |n| (t, n))) {
        let fp = ramsey_fisher(theta, n, false);
        let fe = ramsey_fisher(theta, n, true);
        table.push(vec![
            n.into(),
            theta.into(),
            ramsey_probability(theta, n, false).into(),
            ramsey_probability(theta, n, true).into(),
            ghz_statevector_probability(theta, n).into(),
            fp.into(),
            fe.into(),
            (fe / fp).into(),
            (1.0 / fp.sqrt()).into(),
            (1.0 / fe.sqrt()).into(),
        ]);
    }
    let mut report = Report::new("ramsey", seed, vec![("n", Echo::Ints(cfg.ns.clone())), ("theta", Echo::Floats(cfg.thetas.clone()))]);
    report.tables.push(("fisher", table));
    Ok(Outcome::ok(report))
}

pub struct OracleAudit {
    pub seed: u64,
    pub alpha_max: f64,
    pub cases: usize,
    pub detail: bool,
}

pub fn oracle_audit(cfg: &OracleAudit) -> Result<Outcome, CliError> {
    let jobs: Vec<(CheckKind, usize)> = CheckKind::ALL.iter().flat_map(|&k| (0..cfg.cases).map(move |i| (k, i))).collect();
    let rows: Vec<AuditRow> = jobs
        .par_iter()
        .enumerate()
        .map(|(idx, &(kind, i))| {
            let mut rng = point_rng(cfg.seed, idx);
            audit_row(i, &random_case(&mut rng, kind, cfg.alpha_max))
        })
        .collect::<catsim::Result<_>>()?;
    let mut summary = Table::new(["check", "cases", "passed", "worst_agreement"]);
    let mut failed = 0;
    for kind in CheckKind::ALL {
        let mine: Vec<&AuditRow> = rows.iter().filter(|r| r.check == kind.name()).collect();
        let passed = mine.iter().filter(|r| r.pass).count();
        failed += mine.len() - passed;
        let worst = mine.iter().map(|r| r.agreement).fold(f64::INFINITY, f64::min);
        summary.push(vec![kind.name().into(), mine.len().into(), passed.into(), worst.into()]);
    }
    let mut report =
        Report::new("oracle-audit", cfg.seed, vec![("alpha-max", Echo::Float(cfg.alpha_max)), ("cases", Echo::Int(cfg.cases as u64))]);
    report.notes.push(format!("registered_checks = {}", CheckKind::ALL.len()));
    report.notes.push(format!("tolerance = {}", catsim::table::format_float(catsim::audit::AUDIT_TOL)));
    report.tables.push(("summary", summary));
    if cfg.detail {
        let mut detail = Table::new(["check", "case", "modes", "terms", "agreement", "pass"]);
        for r in &rows {
            detail.push(vec![r.check.into(), r.case.into(), r.modes.into(), r.terms.into(), r.agreement.into(), r.pass.to_string().into()]);
        }
        report.tables.push(("cases", detail));
    }
    let failure = (failed > 0).then(|| format!("{failed} of {} oracle cases disagree", rows.len()));
    Ok(Outcome { report, failure })
}
