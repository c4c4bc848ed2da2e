use super::*;
use crate::linalg::{c, max_abs};
use crate::model::fermi_reservoir_density;

fn small_grid() -> TimeGrid {
    TimeGrid::new(1.0, 0.1).unwrap()
}

#[test]
fn noninteracting_kernels_match_one_body_formulas() {
    let spec = ModelSpec::reference(0.0);
    let sys = System::new(&spec).unwrap();
    let grid = small_grid();
    let dynamics = sys.dynamics(&grid).unwrap();
    let sv = sys.sample_vectors();
    let g = interacting_greens(&dynamics, &grid, &sv, &sv, "sample").unwrap();
    let h = &sys.ham.one_body.h;
    let rho = fermi_reservoir_density(&spec).unwrap();
    let less = gf_free_correlation(h, &rho, &sv, &sv, &grid, Species::Lesser, "sample").unwrap();
    let great = gf_free_correlation(h, &rho, &sv, &sv, &grid, Species::Greater, "sample").unwrap();
    let ret = gf_free(h, &sv, &sv, &grid, 0.0, Species::Retarded, "sample").unwrap();
    let adv = gf_free(h, &sv, &sv, &grid, 0.0, Species::Advanced, "sample").unwrap();
    assert!(g.lesser.stored().max_abs_diff(less.stored()).unwrap() <= 1e-9);
    assert!(g.greater.stored().max_abs_diff(great.stored()).unwrap() <= 1e-9);
    assert!(g.retarded.stored().max_abs_diff(ret.stored()).unwrap() <= 1e-9);
    assert!(g.advanced.stored().max_abs_diff(adv.stored()).unwrap() <= 1e-9);
}

#[test]
fn interacting_kernel_symmetries() {
    let spec = ModelSpec::reference(0.5);
    let sys = System::new(&spec).unwrap();
    let grid = small_grid();
    let dynamics = sys.dynamics(&grid).unwrap();
    let sv = sys.sample_vectors();
    let g = interacting_greens(&dynamics, &grid, &sv, &sv, "sample").unwrap();
    assert!(spectral_consistency(&g).unwrap() <= 1e-9);
    assert!(conjugation_defect(&g.retarded, &g.advanced).unwrap() <= 1e-11);
    assert!(antihermiticity_defect(&g.lesser).unwrap() <= 1e-11);
    assert!(antihermiticity_defect(&g.greater).unwrap() <= 1e-11);
    let (a, k) = spectral_and_keldysh(&g.lesser, &g.greater, &g.retarded, &g.advanced).unwrap();
    assert!(spectral_normalization_defect(&a) <= 1e-11);
    for t in 0..grid.len() {
        let kt = k.value(t, t);
        assert!(max_abs(&(kt.adjoint() + &kt)) <= 1e-11);
        let r = g.retarded.value(t, t);
        assert!(max_abs(&(r + CMatrix::identity(2, 2) * c(0.0, 0.5))) <= 1e-11);
    }
    assert!(max_abs(&g.lesser.value(0, 0)) <= 1e-14);
}

#[test]
fn energy_enters_as_phase() {
    let spec = ModelSpec::reference(0.5);
    let sys = System::new(&spec).unwrap();
    let grid = small_grid();
    let dynamics = sys.dynamics(&grid).unwrap();
    let sv = sys.sample_vectors();
    let (r0, _) = gf_retarded_advanced(&dynamics, &grid, &sv, &sv, "sample", 0.0).unwrap();
    let (r1, a1) = gf_retarded_advanced(&dynamics, &grid, &sv, &sv, "sample", 0.8).unwrap();
    for (k, kp) in [(5, 2), (7, 7), (10, 0)] {
        let ph = crate::linalg::expi((grid.t(kp) - grid.t(k)) * 0.8);
        assert_eq!(r1.value(k, kp), r0.value(k, kp) * ph);
    }
    assert!(conjugation_defect(&r1, &a1).unwrap() <= 1e-11);
}

#[test]
fn lead_lesser_at_origin_is_density() {
    let spec = ModelSpec::reference(0.0);
    let sys = System::new(&spec).unwrap();
    let grid = small_grid();
    let dynamics = sys.dynamics(&grid).unwrap();
    let lv: Vec<CVector> = (2..5).map(|i| crate::linalg::unit_vector(8, i)).collect();
    let (less, _) = gf_lesser_greater(&dynamics, &grid, &lv, &lv, "lead 1").unwrap();
    let rho = fermi_reservoir_density(&spec).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let expect = lv[i].dotc(&(&rho * &lv[j])) * I;
            assert!((less.stored().get(0, 0, i, j) - expect).norm() <= 1e-12);
        }
    }
}

#[test]
fn heisenberg_evolution_of_creator_is_one_body() {
    let spec = ModelSpec::reference(0.0);
    let sys = System::new(&spec).unwrap();
    let f = sys.spec.phi_full(0) * c(0.6, 0.0) + sys.spec.psi_full(1) * c(0.0, 0.8);
    let evolved = evolve_heisenberg(&sys.prop, &sys.basis.create(&f).unwrap(), 0.7);
    let hs = HermitianSpectrum::new(&sys.ham.one_body.h);
    let expect = sys.basis.create(&evolve_one_body(&hs, &f, 0.7)).unwrap();
    assert!((&evolved - &expect).max_norm() <= 1e-10);
    assert!((&evolve_heisenberg(&sys.prop, &sys.ham.w, 0.0) - &sys.ham.w).max_norm() <= 1e-13);
    let k_t = evolve_heisenberg(&sys.prop, &sys.ham.k, 2.1);
    assert!((&k_t - &sys.ham.k).max_norm() <= 1e-11);
    assert!((k_t.op_norm() - sys.ham.k.op_norm()).abs() <= 1e-11);
}

#[test]
fn free_kernels_trivial_values() {
    let grid = small_grid();
    let h = crate::model::chain_hamiltonian(3, 0.0, 1.0);
    let v: Vec<CVector> = (0..3).map(|i| crate::linalg::unit_vector(3, i)).collect();
    let r = gf_free(&h, &v, &v, &grid, 0.0, Species::Retarded, "x").unwrap();
    assert!(max_abs(&(r.value(4, 4) + CMatrix::identity(3, 3) * c(0.0, 0.5))) < 1e-15);
    let mut one = CMatrix::zeros(1, 1);
    one[(0, 0)] = c(0.3, 0.0);
    let e1 = vec![crate::linalg::unit_vector(1, 0)];
    let a = gf_free(&one, &e1, &e1, &grid, 0.0, Species::Advanced, "x").unwrap();
    let expect = I * crate::linalg::expi(0.3 * (grid.t(7) - grid.t(2)));
    assert!((a.value(2, 7)[(0, 0)] - expect).norm() < 1e-14);
    assert_eq!(a.value(7, 2)[(0, 0)], c(0.0, 0.0));
    let rho = CMatrix::identity(1, 1) * c(0.25, 0.0);
    let l = gf_free_correlation(&one, &rho, &e1, &e1, &grid, Species::Lesser, "x").unwrap();
    assert!((l.value(3, 3)[(0, 0)] - c(0.0, 0.25)).norm() < 1e-15);
}
