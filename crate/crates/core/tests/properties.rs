use num_complex::Complex64;
use proptest::prelude::*;

use lindblad_ep::dynamics::{evolve_rotating, spectral_evolve};
use lindblad_ep::exceptional::classify;
use lindblad_ep::model::{
    devectorize, frame_unitary, hamiltonian_rotating, rotate_to_frame, rotate_to_lab, vectorize,
    DensityMatrix, ModelParams,
};
use lindblad_ep::spectrum::{
    eigenvalues_closed_form, eigenvalues_numeric, matched_distance, mirror_symmetry_defect,
    Spectrum,
};
use lindblad_ep::superop::{build_lindblad, equilibrium_state, lindblad_rhs};

fn params() -> impl Strategy<Value = ModelParams> {
    (-3.0..3.0f64, 0.0..10.0f64, 0.0..20.0f64)
        .prop_map(|(delta, d, gamma)| ModelParams::new(delta, d, gamma).unwrap())
}

/// A valid density matrix from a Bloch vector inside the unit ball.
fn density() -> impl Strategy<Value = DensityMatrix> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y, z, r)| {
        let norm = (x * x + y * y + z * z).sqrt().max(1e-12);
        let s = r / norm;
        let (x, y, z) = (x * s, y * s, z * s);
        DensityMatrix::hermitian(
            0.5 * (1.0 + z),
            0.5 * (1.0 - z),
            Complex64::new(0.5 * x, -0.5 * y),
        )
    })
}

/// Smallest pairwise eigenvalue distance relative to ‖L‖.
fn relative_gap(p: &ModelParams) -> f64 {
    let z = eigenvalues_closed_form(p);
    let mut gap = f64::INFINITY;
    for a in 0..4 {
        for b in a + 1..4 {
            gap = gap.min((z[a] - z[b]).norm());
        }
    }
    gap / build_lindblad(p).max_norm().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn spectrum_is_mirror_symmetric_and_sums_to_trace(p in params()) {
        let z = eigenvalues_closed_form(&p);
        prop_assert!(mirror_symmetry_defect(&z) < 1e-10);
        let sum: Complex64 = z.iter().sum();
        prop_assert!((sum - build_lindblad(&p).trace()).norm() < 1e-10);
        prop_assert_eq!(z[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn closed_form_matches_dense_solver(p in params()) {
        let l = build_lindblad(&p);
        let numeric = eigenvalues_numeric(&l).unwrap();
        let tol = 1e-10 * l.max_norm().max(1.0) / relative_gap(&p).clamp(1e-6, 1.0);
        prop_assert!(matched_distance(&eigenvalues_closed_form(&p), &numeric) < tol);
    }

    // Very weak drive is excluded: there the population eigenvalue sits O(d²)
    // from −iΓ and the closed-form vectors inherit an absolute rounding error
    // of order ε‖L‖/d².
    #[test]
    fn eigenvectors_are_biorthonormal(p in params()) {
        prop_assume!(p.d > 1e-2 && relative_gap(&p) > 1e-2);
        let spectrum = Spectrum::compute(&p);
        let l = build_lindblad(&p);
        for r in spectrum.residuals.iter().flatten() {
            prop_assert!(*r < 1e-9 * l.max_norm());
        }
        let bio = spectrum.biorthogonality().expect("all pairs exist away from coalescence");
        for (i, row) in bio.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                prop_assert!((x - target).norm() < 1e-8, "entry ({}, {}) = {}", i, j, x);
            }
        }
    }

    #[test]
    fn classification_is_scale_invariant(p in params(), s in 0.1..10.0f64) {
        prop_assume!(p.delta.abs() > 1e-3);
        let a = classify(&p).unwrap();
        let b = classify(&p.scale(s)).unwrap();
        prop_assert_eq!(a.region, b.region);
        prop_assert_eq!(a.ordering, b.ordering);
    }

    #[test]
    fn vectorize_round_trips(rho in density()) {
        prop_assert_eq!(devectorize(&vectorize(&rho)), rho);
    }

    #[test]
    fn frame_rotation_is_unitary(rho in density(), omega in -5.0..5.0f64, t in 0.0..20.0f64) {
        let u = frame_unitary(omega, t);
        prop_assert!((u * u.adjoint()).max_abs_diff(&lindblad_ep::model::ComplexMatrix2::identity()) < 1e-15);
        let lab = rotate_to_lab(&rho, omega, t);
        let explicit = DensityMatrix::from_matrix(&(u * rho.as_matrix() * u.adjoint()));
        prop_assert!(lab.max_abs_diff(&explicit) < 1e-15);
        prop_assert_eq!(lab.ee, rho.ee);
        prop_assert_eq!(lab.gg, rho.gg);
        prop_assert!(rotate_to_frame(&lab, omega, t).max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn operator_and_matrix_forms_agree(p in params(), rho in density()) {
        let rhs = lindblad_rhs(&hamiltonian_rotating(&p), p.gamma, &rho);
        let via_l = devectorize(&build_lindblad(&p).apply(&vectorize(&rho)).scale(Complex64::new(0.0, -1.0)));
        let scale = build_lindblad(&p).max_norm().max(1.0);
        prop_assert!(DensityMatrix::from_matrix(&rhs).max_abs_diff(&via_l) < 1e-14 * scale);
        prop_assert!(rhs.trace().norm() < 1e-14 * scale);
    }

    #[test]
    fn equilibrium_is_a_valid_state(p in params()) {
        prop_assume!(p.energy_scale_sq() > 1e-6);
        let eq = equilibrium_state(&p).unwrap();
        prop_assert!(eq.trace_deviation() < 1e-14);
        prop_assert!(eq.hermiticity_defect() < 1e-14);
        prop_assert!(eq.eigenvalues()[0] > -1e-12);
        let rhs = lindblad_rhs(&hamiltonian_rotating(&p), p.gamma, &eq);
        prop_assert!(rhs.max_norm() < 1e-12 * build_lindblad(&p).max_norm().max(1.0));
    }

    #[test]
    fn spectral_propagator_is_complete(p in params(), rho in density()) {
        prop_assume!(p.delta.abs() > 1e-3 && p.d > 1e-2 && relative_gap(&p) > 1e-2);
        let back = spectral_evolve(&p, &rho, 0.0).unwrap();
        prop_assert!(back.max_abs_diff(&rho) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trajectories_conserve_trace_and_hermiticity(p in params(), rho in density()) {
        let dt = 1e-3 * (1.0 / build_lindblad(&p).max_norm()).min(1.0);
        let traj = evolve_rotating(&p, &rho, 2000.0 * dt, dt).unwrap();
        prop_assert!(traj.max_trace_dev() < 1e-10);
        prop_assert!(traj.max_herm_dev() < 1e-10);
    }

    #[test]
    fn spectral_propagator_matches_integrator(p in params(), rho in density()) {
        prop_assume!(p.delta.abs() > 1e-3 && p.d > 1e-2 && relative_gap(&p) > 1e-2);
        let dt = 1e-3 * (1.0 / build_lindblad(&p).max_norm()).min(1.0);
        let traj = evolve_rotating(&p, &rho, 2000.0 * dt, dt).unwrap();
        for k in [0, traj.len() / 2, traj.len() - 1] {
            let exact = spectral_evolve(&p, &rho, traj.times[k]).unwrap();
            prop_assert!(exact.max_abs_diff(&traj.states[k]) < 1e-7);
        }
    }
}
