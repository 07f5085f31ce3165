//! Randomized agreement between the coherent-state operations and the
//! truncated Fock-space oracle: 40 cases per operation, amplitudes up to 3,
//! up to 3 modes and 8 terms.

use std::f64::consts::PI;

use catsim::audit::{check, AuditCase, AuditOp, AUDIT_TOL};
use catsim::{CoherentSuperposition, CoherentTerm, Complex64};
use proptest::prelude::*;

const ALPHA_MAX: f64 = 3.0;

fn polar() -> impl Strategy<Value = Complex64> {
    (0.0..ALPHA_MAX, -PI..PI).prop_map(|(r, phi)| Complex64::from_polar(r, phi))
}

fn coeff() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn state(min_modes: usize) -> impl Strategy<Value = CoherentSuperposition> {
    (min_modes..=3usize, 1..=8usize)
        .prop_flat_map(|(m, k)| prop::collection::vec((coeff(), prop::collection::vec(polar(), m)), k).prop_map(move |ts| (m, ts)))
        .prop_filter_map("zero norm", |(m, ts)| {
            let terms = ts.into_iter().map(|(c, a)| CoherentTerm::new(c, a)).collect();
            CoherentSuperposition::new(m, terms).ok()?.normalize().ok()
        })
}

/// States whose modes only carry `±a_m`; modes 0 and 1 share `a` when `tie` is set.
fn signed_state(min_modes: usize, tie: bool) -> impl Strategy<Value = CoherentSuperposition> {
    (min_modes..=3usize, 1..=8usize)
        .prop_flat_map(|(m, k)| {
            let base = prop::collection::vec((0.1..ALPHA_MAX, -PI..PI).prop_map(|(r, p)| Complex64::from_polar(r, p)), m);
            let terms = prop::collection::vec((coeff(), prop::collection::vec(any::<bool>(), m)), k);
            (Just(m), base, terms)
        })
        .prop_filter_map("zero norm", move |(m, mut base, ts)| {
            if tie {
                base[1] = base[0];
            }
            let terms = ts
                .into_iter()
                .map(|(c, signs)| CoherentTerm::new(c, base.iter().zip(signs).map(|(&a, s)| if s { a } else { -a }).collect()))
                .collect();
            CoherentSuperposition::new(m, terms).ok()?.merged().normalize().ok()
        })
}

fn assert_agrees(case: AuditCase) -> Result<(), TestCaseError> {
    let score = check(&case).map_err(|e| TestCaseError::fail(format!("{e}")))?;
    prop_assert!(score >= 1.0 - AUDIT_TOL, "agreement {score} for {case:?}");
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, ..ProptestConfig::default() })]

    #[test]
    fn beamsplitter_matches_oracle(s in state(2), pick in 0usize..3, theta in -PI..PI) {
        let a = pick % s.modes();
        let b = (a + 1) % s.modes();
        assert_agrees(AuditCase { state: s, op: AuditOp::BeamSplitter { a, b, theta } })?;
    }

    #[test]
    fn phase_shift_matches_oracle(s in state(1), pick in 0usize..3, theta in -PI..PI) {
        let mode = pick % s.modes();
        assert_agrees(AuditCase { state: s, op: AuditOp::PhaseShift { mode, theta } })?;
    }

    #[test]
    fn displacement_matches_oracle(s in state(1), pick in 0usize..3, br in 0.0..1.0f64, bp in -PI..PI) {
        let mode = pick % s.modes();
        let beta = Complex64::from_polar(br, bp);
        assert_agrees(AuditCase { state: s, op: AuditOp::Displace { mode, beta } })?;
    }

    #[test]
    fn photon_counting_matches_oracle(s in state(1), pick in 0usize..3, n in 0usize..16) {
        let mode = pick % s.modes();
        assert_agrees(AuditCase { state: s, op: AuditOp::PhotonNumber { mode, n } })?;
    }

    #[test]
    fn homodyne_matches_oracle(s in state(1), pick in 0usize..3, x in -6.0..6.0f64) {
        let mode = pick % s.modes();
        assert_agrees(AuditCase { state: s, op: AuditOp::Homodyne { mode, x } })?;
    }

    #[test]
    fn parity_classes_match_oracle(s in signed_state(1, false), pick in 0usize..3) {
        let mode = pick % s.modes();
        assert_agrees(AuditCase { state: s, op: AuditOp::Parity { mode } })?;
    }

    #[test]
    fn bell_classes_match_oracle(s in signed_state(2, true)) {
        assert_agrees(AuditCase { state: s, op: AuditOp::Bell { a: 0, b: 1 } })?;
    }
}
