use cqed_core::dynamics::uniform_grid;
use cqed_core::eigen::{eigenfrequencies_closed_form, ClosedFormVariant};
use cqed_core::spectra::{symmetric_grid, ClosedFormSpectra};
use cqed_core::*;

fn params(gamma: f64, kappa: f64, g: f64, delta: f64) -> SystemParams {
    SystemParams::new(gamma, kappa, g, delta).unwrap()
}

#[test]
fn lindblad_matches_populations_ode_for_broad_emitter() {
    let p = params(5.0, 0.05, 1.0, 0.0);
    let t = uniform_grid(60.0, 601);
    let lind = lindblad_trace(&p, Role::AtomicType, &t).unwrap();
    let ode = populations_ode(&p, Role::AtomicType, &t).unwrap();
    for (k, tk) in t.iter().enumerate() {
        assert!(
            (lind.pop_atom[k] - ode.pop_atom[k]).abs() < 1e-6,
            "t = {tk}"
        );
        assert!((lind.pop_cav[k] - ode.pop_cav[k]).abs() < 1e-6, "t = {tk}");
    }
}

#[test]
fn lindblad_matches_closed_form_detuned_cavity_type() {
    let p = params(0.3, 1.1, 0.8, -2.5);
    let t = uniform_grid(20.0, 401);
    let lind = lindblad_trace(&p, Role::CavityType, &t).unwrap();
    let cf = trace_closed_form(&p, Role::CavityType, &t);
    for k in 0..t.len() {
        assert!((lind.pop_atom[k] - cf.pop_atom[k]).abs() < 1e-8);
        assert!((lind.pop_cav[k] - cf.pop_cav[k]).abs() < 1e-8);
        assert!((lind.coherence[k] - cf.coherence[k]).norm() < 1e-8);
        assert!((lind.p_detect[k] - cf.p_detect[k]).abs() < 1e-8);
    }
}

#[test]
fn regression_rule_agrees_with_amplitude_spectra() {
    let cases = [
        (params(0.2, 0.2, 1.0, 0.0), Role::AtomicType),
        (params(5.0, 0.05, 1.0, 0.0), Role::AtomicType),
        (params(0.05, 0.25, 1.0, 3.0), Role::CavityType),
    ];
    for (p, role) in cases {
        let grid = symmetric_grid(6.0, 241);
        let (a1, c1) =
            numeric_relaxation_spectrum(&p, role, &grid, FourierWindow::default()).unwrap();
        let (a2, c2) = regression_spectrum(&p, role, &grid, FourierWindow::default()).unwrap();
        let da = compare_spectra((&a1).into(), (&a2).into()).unwrap();
        let dc = compare_spectra((&c1).into(), (&c2).into()).unwrap();
        assert!(da.l1 < 1e-4 && dc.l1 < 1e-4, "{p}: {da:?} {dc:?}");
    }
}

#[test]
fn numeric_spectrum_normalization_over_wide_window() {
    let p = params(0.4, 0.7, 1.0, 1.0);
    let grid = symmetric_grid(40.0, 8001);
    let (atom, cav) =
        numeric_relaxation_spectrum(&p, Role::AtomicType, &grid, FourierWindow::default()).unwrap();
    let exact = ClosedFormSpectra::new(&p).unwrap();
    let beyond_at = cqed_core::spectra::outside_mass(|w| exact.s_at(w), -40.0, 40.0, 1.0);
    let beyond_cav = cqed_core::spectra::outside_mass(|w| exact.s_cav(w), -40.0, 40.0, 1.0);
    assert!(
        (atom.window_mass + beyond_at - 1.0).abs() < 1e-4,
        "{} {beyond_at}",
        atom.window_mass
    );
    assert!(
        (cav.window_mass + beyond_cav - 1.0).abs() < 1e-4,
        "{} {beyond_cav}",
        cav.window_mass
    );
    assert!(atom.density.iter().chain(&cav.density).all(|&v| v >= 0.0));
}

#[test]
fn literal_roots_distort_detuned_spectrum() {
    let p = params(5.0, 0.05, 1.0, 10.0);
    let direct = ClosedFormSpectra::new(&p).unwrap();
    let literal = ClosedFormSpectra::with_roots(
        &p,
        eigenfrequencies_closed_form(&p, ClosedFormVariant::Literal).unwrap(),
    )
    .unwrap();
    let corrected = ClosedFormSpectra::with_roots(
        &p,
        eigenfrequencies_closed_form(&p, ClosedFormVariant::Corrected).unwrap(),
    )
    .unwrap();
    let grid = symmetric_grid(15.0, 3001);
    let sample = |s: &ClosedFormSpectra| grid.iter().map(|&w| s.s_cav(w)).collect::<Vec<_>>();
    let (d, l, c) = (sample(&direct), sample(&literal), sample(&corrected));
    let off = compare_spectra(Curve::new(&grid, &d), Curve::new(&grid, &l)).unwrap();
    let on = compare_spectra(Curve::new(&grid, &d), Curve::new(&grid, &c)).unwrap();
    assert!(off.l1 > 1e-2, "{off:?}");
    assert!(on.l1 < 1e-10, "{on:?}");
}
