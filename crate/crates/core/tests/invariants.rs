use nalgebra::DMatrix;
use negf_core::greens::{System, TimeGrid};
use negf_core::linalg::{fermi, max_abs, HermitianSpectrum};
use negf_core::model::ModelSpec;
use negf_core::selfenergy::{hartree_fock_potential, interaction_correlator, reducible_from_parts};
use negf_core::volterra::{kernel_invert, left_inverse_residual, right_inverse_residual, VolterraKernel};
use negf_core::{CMatrix, C64};
use proptest::prelude::*;

fn matrix_strategy(n: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
        .prop_map(move |v| CMatrix::from_fn(n, n, |i, j| C64::new(v[i * n + j].0, v[i * n + j].1)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fermi_factor_is_a_probability(beta in 0.01f64..50.0, mu in -3.0f64..3.0, e in -1e3f64..1e3) {
        let f = fermi(beta, mu, e);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f + fermi(beta, -mu, -e) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn trapezoid_weights_integrate_linear_functions(n in 1usize..40, dt in 0.01f64..0.5) {
        let g = TimeGrid::from_steps(n, dt);
        let w = g.weights();
        let total: f64 = w.iter().sum();
        let first: f64 = w.iter().enumerate().map(|(k, wk)| wk * g.t(k)).sum();
        prop_assert!((total - g.t_max()).abs() <= 1e-12 * g.t_max().max(1.0));
        prop_assert!((first - 0.5 * g.t_max() * g.t_max()).abs() <= 1e-10 * g.t_max().powi(2).max(1.0));
    }

    #[test]
    fn spectral_functions_of_hermitian_matrices(m in matrix_strategy(4), t in -3.0f64..3.0) {
        let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let s = HermitianSpectrum::new(&h);
        let u = s.exp_i(t);
        let id = CMatrix::identity(4, 4);
        prop_assert!(max_abs(&(u.adjoint() * &u - &id)) <= 1e-12);
        prop_assert!(max_abs(&(s.apply_fn(|e| C64::new(e, 0.0)) - &h)) <= 1e-12);
    }

    #[test]
    fn volterra_inverse_is_two_sided(m in matrix_strategy(2), scale in 0.1f64..3.0) {
        let g = TimeGrid::new(1.0, 0.05).unwrap();
        let b = VolterraKernel::from_fn(g, 2, |s, sp| {
            &m * C64::new(scale * (1.0 + s - 0.5 * sp).cos(), 0.0)
        });
        let r = kernel_invert(&b).unwrap();
        prop_assert!(right_inverse_residual(&b, &r).unwrap() <= 1e-10 * (1.0 + r.kernel().max_abs()));
        prop_assert!(left_inverse_residual(&b, &r).unwrap() <= 0.05 * (1.0 + r.kernel().max_abs()));
        prop_assert!(r.kernel().max_abs_where(|k, kp| kp > k) == 0.0);
    }
}

/// Coefficients of the degree-4 polynomial through five samples.
fn interpolate(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let v = DMatrix::from_fn(5, 5, |i, j| xs[i].powi(j as i32));
    let b = nalgebra::DVector::from_column_slice(ys);
    v.lu().solve(&b).unwrap().as_slice().to_vec()
}

#[test]
fn coupling_grading_at_fixed_evolution() {
    let sys = System::new(&ModelSpec::reference(0.5)).unwrap();
    let grid = TimeGrid::new(1.0, 0.1).unwrap();
    let dynamics = sys.dynamics(&grid).unwrap();
    let unit: Vec<CMatrix> = hartree_fock_potential(&sys, &dynamics)
        .unwrap()
        .iter()
        .map(|m| m / C64::new(0.5, 0.0))
        .collect();
    let d = interaction_correlator(&sys, &dynamics, &grid).unwrap();
    let xs = [-0.6, -0.3, 0.1, 0.4, 0.8];
    let kernels: Vec<_> = xs.iter().map(|&x| reducible_from_parts(&unit, &d, x).0).collect();
    let probe = |f: &dyn Fn(&negf_core::selfenergy::SelfEnergyKernel) -> C64, power: usize| {
        let re: Vec<f64> = kernels.iter().map(|k| f(k).re).collect();
        let im: Vec<f64> = kernels.iter().map(|k| f(k).im).collect();
        let mut worst: f64 = 0.0;
        for coeffs in [interpolate(&xs, &re), interpolate(&xs, &im)] {
            for (p, c) in coeffs.iter().enumerate() {
                if p != power {
                    worst = worst.max(c.abs());
                }
            }
        }
        worst
    };
    let k = grid.n();
    for (a, b) in [(0, 0), (0, 1), (1, 1)] {
        let v = probe(&|s| s.local()[k][(a, b)], 1);
        let m = probe(&|s| s.memory().get(k, k / 2, a, b), 2);
        assert!(v <= 1e-6 && m <= 1e-6, "grading {v} {m}");
    }
}
