use super::*;
use crate::greens::{gf_free, interacting_greens};
use crate::linalg::{hermiticity_defect, unit_vector};
use crate::model::{LeadSpec, ModelSpec};
use nalgebra::DMatrix;

/// Reference sample with two-site leads, small enough for quick checks.
fn compact(xi: f64) -> ModelSpec {
    let mut spec = ModelSpec::reference(xi);
    spec.leads = vec![
        LeadSpec::chain(2, 1.0, unit_vector(2, 0), 0.7, 1.0, 0.4),
        LeadSpec::chain(2, 1.0, unit_vector(2, 1), 0.7, 2.0, -0.4),
    ];
    spec
}

fn free_pair(sys: &System, grid: &TimeGrid) -> (GFKernel, GFKernel) {
    let sv = sys.sample_vectors();
    let h = &sys.ham.one_body.h;
    (
        gf_free(h, &sv, &sv, grid, 0.0, Species::Retarded, "sample").unwrap(),
        gf_free(h, &sv, &sv, grid, 0.0, Species::Advanced, "sample").unwrap(),
    )
}

#[test]
fn self_energies_vanish_without_interaction() {
    let sys = System::new(&compact(0.0)).unwrap();
    let grid = TimeGrid::new(1.0, 0.1).unwrap();
    let dynamics = sys.dynamics(&grid).unwrap();
    let (r, a) = reducible_pair(&sys, &dynamics, &grid).unwrap();
    assert_eq!(r.memory().max_abs(), 0.0);
    assert_eq!(a.memory().max_abs(), 0.0);
    assert!(r.local().iter().all(|m| m.iter().all(|z| z.norm() == 0.0)));
}

#[test]
fn hartree_fock_potential_is_hermitian_mean_field() {
    let xi = 0.3;
    let sys = System::new(&compact(xi)).unwrap();
    let grid = TimeGrid::new(2.0, 0.1).unwrap();
    let dynamics = sys.dynamics(&grid).unwrap();
    let v = hartree_fock_potential(&sys, &dynamics).unwrap();
    let n1 = dynamics.expectation_series(&sys.basis.number(1)).unwrap();
    let hop = dynamics
        .expectation_series(&(&sys.basis.creator(1) * &sys.basis.annihilator(0)))
        .unwrap();
    for (k, m) in v.iter().enumerate() {
        assert!(hermiticity_defect(m) <= 1e-12);
        // W = N_0 N_1 gives {a_0, [W, a_0*]} = N_1 and {a_0, [W, a_1*]} = −a_1* a_0.
        assert!((m[(0, 0)] - n1[k] * xi).norm() <= 1e-12);
        assert!((m[(0, 1)] + hop[k] * xi).norm() <= 1e-12);
    }
    assert!(v.last().unwrap()[(0, 0)].re > 1e-3);
}

#[test]
fn reducible_branches_are_adjoint() {
    let sys = System::new(&compact(0.4)).unwrap();
    let grid = TimeGrid::new(1.5, 0.1).unwrap();
    let dynamics = sys.dynamics(&grid).unwrap();
    let (r, a) = reducible_pair(&sys, &dynamics, &grid).unwrap();
    assert!(adjoint_pairing_defect(&r, &a).unwrap() <= 1e-10);
    assert!(adjoint_pairing_defect(&r.with_energy(0.8), &a.with_energy(0.8)).unwrap() <= 1e-10);
    assert!(r.memory().max_abs() > 1e-3);
}

#[test]
fn correlator_is_xi_independent_at_origin_of_time() {
    // D(0,0) = ⟨{c_y, c_x*}⟩ in the initial state, which does not see ξ.
    let grid = TimeGrid::new(0.2, 0.1).unwrap();
    let d: Vec<CMatrix> = [0.1, 0.7]
        .iter()
        .map(|&xi| {
            let sys = System::new(&compact(xi)).unwrap();
            let dynamics = sys.dynamics(&grid).unwrap();
            interaction_correlator(&sys, &dynamics, &grid).unwrap().matrix(0, 0)
        })
        .collect();
    assert!(crate::linalg::max_abs(&(&d[0] - &d[1])) <= 1e-12);
}

#[test]
fn identities_hold_trivially_without_interaction() {
    let sys = System::new(&compact(0.0)).unwrap();
    let grid = TimeGrid::new(1.0, 0.1).unwrap();
    let dynamics = sys.dynamics(&grid).unwrap();
    let sv = sys.sample_vectors();
    let g = interacting_greens(&dynamics, &grid, &sv, &sv, "sample").unwrap();
    let (g0r, g0a) = free_pair(&sys, &grid);
    let (r, a) = reducible_pair(&sys, &dynamics, &grid).unwrap();
    assert!(reducible_identity_residual(&g.retarded, &g0r, &r).unwrap() <= 1e-9);
    assert!(reducible_identity_residual(&g.advanced, &g0a, &a).unwrap() <= 1e-9);
    let (l, rr) = dyson_residuals(&g.retarded, &g0r, &r).unwrap();
    assert!(l <= 1e-9 && rr <= 1e-9);
}

#[test]
fn vanishing_coupling_matrix_gives_vanishing_kernels() {
    let mut spec = compact(0.5);
    spec.w = DMatrix::zeros(2, 2);
    let sys = System::new(&spec).unwrap();
    let grid = TimeGrid::new(1.0, 0.1).unwrap();
    let dynamics = sys.dynamics(&grid).unwrap();
    let (r, _) = reducible_pair(&sys, &dynamics, &grid).unwrap();
    assert!(r.memory().max_abs() <= 1e-14);
    let s = lesser_source_kernel(&sys, &dynamics, &grid).unwrap();
    assert!(s.full.memory().max_abs_diff(&s.order0.memory()).unwrap() <= 1e-10);
    assert!(s.order1.memory().max_abs() <= 1e-14);
}

/// Residuals on a grid and on its refinement.
fn residual_pair(f: impl Fn(&TimeGrid) -> f64) -> (f64, f64) {
    let coarse = TimeGrid::new(1.0, 0.1).unwrap();
    (f(&coarse), f(&coarse.refined()))
}

#[test]
fn reducible_and_dyson_identities_converge_at_second_order() {
    let sys = System::new(&compact(0.5)).unwrap();
    let run = |grid: &TimeGrid| {
        let dynamics = sys.dynamics(grid).unwrap();
        let sv = sys.sample_vectors();
        let g = interacting_greens(&dynamics, grid, &sv, &sv, "sample").unwrap();
        let (g0r, g0a) = free_pair(&sys, grid);
        let (r, a) = reducible_pair(&sys, &dynamics, grid).unwrap();
        let red = reducible_identity_residual(&g.retarded, &g0r, &r)
            .unwrap()
            .max(reducible_identity_residual(&g.advanced, &g0a, &a).unwrap());
        let irr_r = irreducible_from_reducible(&r, &g0r).unwrap();
        let irr_a = irreducible_from_reducible(&a, &g0a).unwrap();
        let (l1, r1) = dyson_residuals(&g.retarded, &g0r, &irr_r).unwrap();
        let (l2, r2) = dyson_residuals(&g.advanced, &g0a, &irr_a).unwrap();
        (red, l1.max(r1).max(l2).max(r2))
    };
    let coarse = TimeGrid::new(1.0, 0.1).unwrap();
    let (red_c, dys_c) = run(&coarse);
    let (red_f, dys_f) = run(&coarse.refined());
    assert!(red_c / red_f > 3.5, "reducible ratio {}", red_c / red_f);
    assert!(dys_c / dys_f > 3.5, "dyson ratio {}", dys_c / dys_f);
    assert!(red_f <= 5e-3 && dys_f <= 5e-3);
}

#[test]
fn irreducible_branches_are_adjoint_up_to_quadrature() {
    // The two branches are inverted in opposite orders, so they agree at O(Δt²).
    let sys = System::new(&compact(0.5)).unwrap();
    let defect = |grid: &TimeGrid| {
        let dynamics = sys.dynamics(grid).unwrap();
        let (g0r, g0a) = free_pair(&sys, grid);
        let (r, a) = reducible_pair(&sys, &dynamics, grid).unwrap();
        let ir = irreducible_from_reducible(&r, &g0r).unwrap();
        let ia = irreducible_from_reducible(&a, &g0a).unwrap();
        assert_eq!(ir.kind, SelfEnergyKind::IrreducibleRetarded);
        assert!(irreducible_from_reducible(&ir, &g0r).is_err());
        adjoint_pairing_defect(&ir, &ia).unwrap()
    };
    let (a, b) = residual_pair(defect);
    assert!(b <= 1e-3 && a / b > 3.5, "pairing {a} -> {b}");
}

#[test]
fn order0_closed_form_matches_matrix_element() {
    let sys = System::new(&ModelSpec::reference(0.3)).unwrap();
    let grid = TimeGrid::new(2.0, 0.1).unwrap();
    let a = lesser_source_order0(&sys, &grid).unwrap();
    let b = lesser_source_order0_matrix(&sys, &grid).unwrap();
    assert!(a.max_abs_diff(&b).unwrap() <= 1e-10);
    assert!(a.max_abs() > 0.1);
}

#[test]
fn exact_source_reduces_to_order0_at_zero_coupling() {
    let sys = System::new(&compact(0.0)).unwrap();
    let grid = TimeGrid::new(1.0, 0.1).unwrap();
    let dynamics = sys.dynamics(&grid).unwrap();
    let full = lesser_source_exact(&sys, &dynamics, &grid).unwrap();
    let s0 = lesser_source_order0(&sys, &grid).unwrap();
    assert!(full.max_abs_diff(&s0).unwrap() <= 1e-10);
}

#[test]
fn order1_matches_central_difference_in_coupling() {
    let grid = TimeGrid::new(1.5, 0.1).unwrap();
    let h = 1e-3;
    let source = |xi: f64| {
        let sys = System::new(&compact(xi)).unwrap();
        let dynamics = sys.dynamics(&grid).unwrap();
        lesser_source_exact(&sys, &dynamics, &grid).unwrap()
    };
    let fd = source(h).sub(&source(-h)).unwrap().scale(c(0.5 / h, 0.0));
    let s1 = lesser_source_order1(&System::new(&compact(0.0)).unwrap(), &grid).unwrap();
    assert!(s1.max_abs() > 1e-3);
    let diff = fd.max_abs_diff(&s1).unwrap();
    assert!(diff <= 1e-5 * s1.max_abs().max(1.0), "order-one mismatch {diff}");
}

#[test]
fn sandwich_with_free_kernels_reproduces_lesser_at_zero_coupling() {
    let sys = System::new(&compact(0.0)).unwrap();
    let run = |grid: &TimeGrid| {
        let dynamics = sys.dynamics(grid).unwrap();
        let sv = sys.sample_vectors();
        let g = interacting_greens(&dynamics, grid, &sv, &sv, "sample").unwrap();
        let (g0r, g0a) = free_pair(&sys, grid);
        let s = lesser_source_kernel(&sys, &dynamics, grid).unwrap();
        keldysh_decoupling_residual(&g.lesser, &g0r, &g0a, &s.full).unwrap()
    };
    let (a, b) = residual_pair(run);
    assert!(b <= 1e-2 && a / b > 3.0, "decoupling {a} -> {b}");
}

#[test]
fn positivity_form_is_positive_semidefinite() {
    let grid = TimeGrid::new(2.0, 0.1).unwrap();
    let family: Vec<CMatrix> = (0..grid.len())
        .map(|k| {
            let t = grid.t(k);
            CMatrix::from_fn(2, 3, |i, j| c((t * (i + 2 * j + 1) as f64).cos(), (t - i as f64 + j as f64).sin()))
        })
        .collect();
    for eta in [0.0, 0.5, 2.0] {
        let q = positivity_form(&grid, &family, eta).unwrap();
        assert!(hermiticity_defect(&q) <= 1e-12);
        assert!(min_eigenvalue(&q) >= -1e-12);
    }
    // A constant family: ∬_{s'≤s} ds ds' = T²/2 on the half square.
    let ones = vec![CMatrix::from_element(1, 1, c(1.0, 0.0)); grid.len()];
    let q = positivity_form(&grid, &ones, 0.0).unwrap();
    assert!((q[(0, 0)].re - 2.0).abs() <= 1e-12);
}

#[test]
fn dissipation_is_non_positive_for_the_retarded_source() {
    let sys = System::new(&compact(0.5)).unwrap();
    let grid = TimeGrid::new(1.0, 0.05).unwrap();
    let dynamics = sys.dynamics(&grid).unwrap();
    let (r, _) = reducible_pair(&sys, &dynamics, &grid).unwrap();
    let phi: Vec<CVector> = (0..grid.len())
        .map(|k| CVector::from_vec(vec![c(1.0, 0.2 * grid.t(k)), c(grid.t(k).cos(), -0.5)]))
        .collect();
    for eta in [0.0, 0.5, 2.0] {
        let d = dissipation_form(&r, &phi, eta, 0.0).unwrap();
        assert!(d <= 1e-8, "eta {eta}: {d}");
    }
    assert!(dissipation_form(&r, &phi, 0.0, -1.0).unwrap() < dissipation_form(&r, &phi, 0.0, 0.0).unwrap());
}

#[test]
fn effective_propagator_without_memory_is_unitary_or_damped() {
    let grid = TimeGrid::new(2.0, 0.01).unwrap();
    let h = crate::model::chain_hamiltonian(3, 0.2, 1.0);
    let zero = SelfEnergyKernel::new(SelfEnergyKind::ReducibleRetarded, None, TwoTimeKernel::zeros(grid, 3, 3));
    let phi0 = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let ev = effective_propagator(&zero, &h, c(0.0, 0.0), &phi0).unwrap();
    assert!(ev.norms().iter().all(|n| (n - 1.0).abs() <= 1e-12));
    assert!(ev.route_difference() <= 1e-3);
    let eta = 0.7;
    let damped = effective_propagator(&zero, &h, c(0.0, -eta), &phi0).unwrap();
    for (k, n) in damped.norms().iter().enumerate() {
        let exact = (-eta * grid.t(k)).exp();
        assert!((n - exact).abs() <= 1e-4);
        assert!((damped.integral[k].norm() - exact).abs() <= 1e-12);
    }
    assert!(effective_propagator(&zero, &h, c(0.0, 0.1), &phi0).is_err());
}

#[test]
fn effective_propagator_is_contractive_with_interaction() {
    let sys = System::new(&compact(0.5)).unwrap();
    let grid = TimeGrid::new(1.0, 0.05).unwrap();
    let dynamics = sys.dynamics(&grid).unwrap();
    let (r, _) = reducible_pair(&sys, &dynamics, &grid).unwrap();
    let h = sys.ham.one_body.h_s();
    let phi0 = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
    let ev = effective_propagator(&r, &h, c(0.0, 0.0), &phi0).unwrap();
    assert!(ev.growth() <= 10.0 * grid.dt(), "growth {}", ev.growth());
    assert!(ev.route_difference() <= 1e-2, "routes {}", ev.route_difference());
}
