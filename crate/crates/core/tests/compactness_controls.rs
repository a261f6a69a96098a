use compactlab::compactness::{
    operator_tightness, pi_cc_tightness, qp_tightness, tightness_profile, uv_modulus, OperatorFamily,
};
use compactlab::families::{
    coherent_orbit, counterexample_basis, escaping_translates, gaussian_state, operator_counterexample,
    spatial_cutoffs,
};
use compactlab::frame::Frame;
use compactlab::linalg::op_norm;
use compactlab::magweyl::setup::{Grid, MagneticSetup};
use compactlab::magweyl::weyl::{weyl_family, SegmentTable};
use compactlab::quantizer::PiFamily;
use compactlab::sigma::SolidSpaceSpec;
use compactlab::{CMatrix, CVector, Complex64};

fn calibrated(setup: &MagneticSetup, window: &CVector) -> (PiFamily, Frame) {
    let pi = weyl_family(setup, 8).unwrap();
    let (_, cal) = pi.frame(window).unwrap().calibrate().unwrap();
    let pi = pi.rescaled(1.0 / cal.constant).unwrap();
    let frame = pi.frame(window).unwrap();
    (pi, frame)
}

#[test]
fn coherent_orbit_is_tight_and_escaping_translates_are_not() {
    let s = MagneticSetup::zero_field(Grid::symmetric(1, 128).unwrap()).unwrap();
    let w = gaussian_state(s.grid(), 1.0).unwrap();
    let (pi, frame) = calibrated(&s, &w);
    let spec = SolidSpaceSpec::l2();

    let orbit = coherent_orbit(&s, &w, 2.0).unwrap();
    let prof = tightness_profile(&orbit, &frame, &spec).unwrap();
    assert!(prof.is_nonincreasing());
    assert!(prof.final_nontrivial() <= 1e-6, "{:?}", prof.values);
    let k = pi.sigma().level_count() - 2;
    let pcc = pi_cc_tightness(&orbit, &pi, k).unwrap();
    assert!(pcc <= 1e-4, "{pcc}");
    let h = s.grid().h();
    let uv = uv_modulus(&orbit, &s, &[0.0, h]).unwrap();
    assert_eq!(uv.translation[0], 0.0);
    assert!(uv.translation[1] <= 0.2 && uv.modulation[1] <= 0.2, "{uv:?}");

    let esc = escaping_translates(&s, &w, 8).unwrap();
    let prof = tightness_profile(&esc, &frame, &spec).unwrap();
    assert!(prof.final_nontrivial() >= 0.5 * esc.max_norm(), "{:?}", prof.values);
    let t = SegmentTable::new(&s);
    let ones = crate_psi_one(s.grid());
    for (name, phi) in spatial_cutoffs(s.grid()) {
        let q = qp_tightness(&esc, &s, &t, &phi, &ones).unwrap();
        assert!(q.phi_term >= 0.5, "{name}: {q:?}");
    }
}

fn crate_psi_one(grid: &Grid) -> CVector {
    compactlab::magweyl::psi_hat_from_symbol(grid, |_| Complex64::new(1.0, 0.0))
}

fn dense_floor(family: &OperatorFamily, frame: &Frame, level: usize) -> f64 {
    let sigma = frame.sigma();
    let inside = sigma.level_mask(level).unwrap();
    let mut a = frame.windows().adjoint();
    for (j, &is_in) in inside.iter().enumerate() {
        let w = if is_in { 0.0 } else { sigma.weights()[j].sqrt() };
        a.row_mut(j).scale_mut(w);
    }
    family
        .effective_members()
        .iter()
        .map(|m: &CMatrix| op_norm(&(&a * m)))
        .fold(0.0, f64::max)
}

#[test]
fn rank_one_counterexample_separates_family_and_adjoints() {
    let s = MagneticSetup::zero_field(Grid::symmetric(1, 64).unwrap()).unwrap();
    let w = gaussian_state(s.grid(), 1.0).unwrap();
    let (_, frame) = calibrated(&s, &w);
    let basis = counterexample_basis(&s, &w, 32).unwrap();
    let k = frame.sigma().level_count() - 2;
    for j in [8, 16, 32] {
        let fam = operator_counterexample(&basis, j, false).unwrap();
        let p = operator_tightness(&fam, &frame).unwrap();
        assert!(p.final_nontrivial() < 1e-8, "J={j}: {:?}", p.values);
        let adj = fam.with_adjoints(true).unwrap();
        let p = operator_tightness(&adj, &frame).unwrap();
        let oracle = dense_floor(&adj, &frame, k);
        eprintln!("J={j} floor {} oracle {oracle}", p.final_nontrivial());
        assert!((p.final_nontrivial() - oracle).abs() <= 1e-10);
        assert!(oracle >= 0.9);
    }
}
