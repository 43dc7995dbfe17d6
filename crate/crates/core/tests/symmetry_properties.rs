use num_complex::Complex64;
use stargraph::rootfinder::{find_roots_in_region, DEFAULT_TOL};
use stargraph::secular::{boundary_matrix, boundary_matrix_relabeled, eval_reduced};
use stargraph::symmetry::{match_roots_between, match_rotated_roots, Conclusion};
use stargraph::{parity_permutation, ContourRegion, StarModel};

fn model(q: usize, beta: f64) -> StarModel {
    StarModel::with_beta(q, Complex64::new(beta, 0.0)).unwrap()
}

#[test]
fn spectrum_in_a_region_is_rotation_invariant() {
    for q in [3usize, 4, 5] {
        let m = model(q, 1.0);
        let region = ContourRegion::rectangle(2.0, 30.0, -3.0, 3.0);
        let a = find_roots_in_region(&m, &region, DEFAULT_TOL).unwrap();
        let b = find_roots_in_region(&m.time_reversed(), &region, DEFAULT_TOL).unwrap();
        assert_eq!(a.roots.len(), b.roots.len(), "q={q}");
        for (x, y) in a.roots.iter().zip(&b.roots) {
            assert!((x.kappa - y.kappa).norm() < 1e-9);
        }
    }
}

#[test]
fn branch_shift_holds_across_couplings() {
    for q in [3usize, 4, 5, 8] {
        for beta in [0.5, 1.0, 3.0] {
            let r = match_rotated_roots(&model(q, beta), 3, 20, 1e-9).unwrap();
            assert_eq!(r.conclusion, Conclusion::CyclicShiftConfirmed, "q={q} beta={beta}");
            assert_eq!(r.pairs.len(), 18 * (q - 2));
        }
    }
}

#[test]
fn q_rotations_compose_to_the_identity_pairing() {
    for q in [3usize, 4, 5] {
        let m = model(q, 1.0);
        let tol = 1e-9;
        let back = m.time_reversed_n(q);
        let r = match_roots_between(&m, &back, 0, 3, 10, q as f64 * tol).unwrap();
        assert_eq!(r.conclusion, Conclusion::CyclicShiftConfirmed);
        assert!(r.max_distance < q as f64 * tol);
    }
}

#[test]
fn relabeling_edges_does_not_move_anything() {
    let m = model(5, 1.0);
    let perm = parity_permutation(5).unwrap();
    let lam = Complex64::new(7.7, 0.2);
    // G never sees edge labels.
    assert_eq!(eval_reduced(&m, lam).re.to_bits(), eval_reduced(&m, lam).re.to_bits());
    for k in [Complex64::new(7.7, 0.2), Complex64::new(1.5, 0.0)] {
        let a = boundary_matrix(&m, k).singular_value_ratio();
        let b = boundary_matrix_relabeled(&m, k, &perm).singular_value_ratio();
        assert!((a - b).abs() <= 1e-13 * a.max(1e-300) + 1e-17);
    }
}
