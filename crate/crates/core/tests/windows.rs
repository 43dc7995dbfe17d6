//! Window-by-window agreement between contour search and branch solves.

use num_complex::Complex64;
use stargraph::rootfinder::{
    find_roots_in_region, find_roots_in_region_with, solve_branch, winding_count, SearchOptions,
    DEFAULT_TOL,
};
use stargraph::{ContourRegion, Method, StarModel};

fn model(q: usize, beta: f64) -> StarModel {
    StarModel::with_beta(q, Complex64::new(beta, 0.0)).unwrap()
}

#[test]
fn every_window_holds_p_roots_and_both_methods_agree() {
    for q in [3usize, 4, 5, 8] {
        let m = model(q, 1.0);
        for w in 3..=30u64 {
            let region = ContourRegion::window(w);
            assert_eq!(winding_count(&m, &region).unwrap(), m.p() as i64, "q={q} M={w}");

            let contour = find_roots_in_region(&m, &region, DEFAULT_TOL).unwrap();
            assert_eq!(contour.roots.len(), m.p());
            assert!(contour.unresolved.is_empty());

            let mut branch: Vec<_> = (0..m.p())
                .map(|n| solve_branch(&m, w, n, DEFAULT_TOL).unwrap())
                .collect();
            branch.sort_by(|a, b| a.cmp_kappa(b));
            for (c, b) in contour.roots.iter().zip(&branch) {
                assert!((c.kappa - b.kappa).norm() < 1e-9, "q={q} M={w}");
                assert_eq!(c.n, b.n);
                assert_eq!(c.m, Some(w));
                assert!(c.is_certified() && b.is_certified());
                assert!(c.flags.is_empty(), "q={q} M={w} {:?}", c.flags);
            }
        }
    }
}

#[test]
fn traversal_order_does_not_change_the_root_set() {
    let m = model(5, 1.0);
    let region = ContourRegion::rectangle(0.2, 24.0, -4.0, 4.0);
    let base = find_roots_in_region(&m, &region, DEFAULT_TOL).unwrap();
    assert_eq!(base.roots.len() as i64, base.winding);
    for seed in [1u64, 2, 3] {
        let opts = SearchOptions {
            tol: DEFAULT_TOL,
            traversal_seed: Some(seed),
        };
        let shuffled = find_roots_in_region_with(&m, &region, &opts).unwrap();
        assert_eq!(shuffled.roots.len(), base.roots.len());
        for (a, b) in shuffled.roots.iter().zip(&base.roots) {
            assert!((a.kappa - b.kappa).norm() < 1e-9);
        }
    }
}

#[test]
fn reported_roots_are_distinct_and_have_no_mirror_partner() {
    let m = model(4, 1.0);
    let region = ContourRegion::rectangle(0.0, 20.0, -5.0, 5.0);
    let s = find_roots_in_region(&m, &region, DEFAULT_TOL).unwrap();
    for (i, a) in s.roots.iter().enumerate() {
        assert!(a.is_certified(), "{a:?}");
        assert_eq!(a.method, Method::Contour);
        for b in &s.roots[i + 1..] {
            assert!((a.kappa - b.kappa).norm() >= 1e-8);
            assert!((a.kappa + b.kappa).norm() >= 1e-8);
        }
    }
}

#[test]
fn region_count_matches_winding() {
    let m = model(3, 1.0);
    let region = ContourRegion::rectangle(0.1, 35.0, -5.0, 5.0);
    let s = find_roots_in_region(&m, &region, DEFAULT_TOL).unwrap();
    assert_eq!(s.roots.len() as i64, winding_count(&m, &region).unwrap());
}
