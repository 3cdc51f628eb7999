//! Threshold resonances produced by tuning the coupling of
//! V = −g(1 + 0.4 cos θ) so that the compressed first-order operator at a
//! threshold becomes singular.

use halfspace_scattering::cascade::resonance::tune_threshold_resonance;
use halfspace_scattering::cascade::{build_threshold_cascade, m_threshold};
use halfspace_scattering::birman_schwinger::direct_m;
use halfspace_scattering::scattering::{limit_consistency_scan, Side};
use halfspace_scattering::*;
use num_complex::Complex64 as C64;

fn family(g: f64) -> PotentialKind {
    PotentialKind::from_cos_sin(-g, &[-0.4 * g], &[])
}

fn cutoffs() -> Cutoffs {
    Cutoffs { modes: 8, v_cutoff: 16, samples: 1024 }
}

#[test]
fn resonance_with_open_channel() {
    // k = 0, n = 1: channel 0 is open at λ = 1
    let t = tune_threshold_resonance(&family, 0.0, 1, (0.5, 2.5), cutoffs(), Tolerances::default()).unwrap();
    assert!((t.coupling - 1.69368).abs() < 1e-4, "{}", t.coupling);
    let p = &t.problem;
    let l0 = p.fiber.threshold(1);
    let cd = build_threshold_cascade(p, l0).unwrap();
    assert!(cd.ranks[1] >= 1, "{:?}", cd.ranks);
    assert!(cd.checks.max_identity_residual() < 1e-8);
    let sc = limit_consistency_scan(p, l0, Side::Right, &[1e-2, 3e-3, 1e-3, 3e-4, 1e-4]).unwrap();
    assert!(sc.deviation < 1e-6, "{}", sc.deviation);
    let slope = sc.mixed_slope.unwrap();
    assert!((slope - 0.5).abs() < 0.15, "{slope}");
}

#[test]
fn resonance_at_bottom_threshold() {
    // k = 0, n = 0: no open channel, the resonance reaches the third level
    let t = tune_threshold_resonance(&family, 0.0, 0, (0.5, 1.5), cutoffs(), Tolerances::default()).unwrap();
    assert!((t.coupling - 0.96353).abs() < 1e-4, "{}", t.coupling);
    let p = &t.problem;
    let cd = build_threshold_cascade(p, 0.0).unwrap();
    assert!(cd.ranks[1] >= 1 && cd.ranks[2] >= 1, "{:?}", cd.ranks);
    for k in [1e-2, 3e-3, 1e-3] {
        let kappa = C64::new(k, -k);
        let a = m_threshold(p, &cd, kappa).unwrap();
        let b = direct_m(p, C64::new(0.0, 0.0) - kappa * kappa).unwrap();
        let rel = (&a - &b).norm() / b.norm();
        assert!(rel < 1e-6, "κ = {kappa}: {rel:e}");
    }
}
