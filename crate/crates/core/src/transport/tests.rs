use super::*;
use crate::linalg::unit_vector;
use crate::model::{LeadSpec, ModelSpec};

fn compact(xi: f64) -> ModelSpec {
    let mut spec = ModelSpec::reference(xi);
    spec.leads = vec![
        LeadSpec::chain(2, 1.0, unit_vector(2, 0), 0.7, 1.0, 0.4),
        LeadSpec::chain(2, 1.0, unit_vector(2, 1), 0.7, 2.0, -0.4),
    ];
    spec
}

#[test]
fn operator_and_lesser_currents_agree() {
    let sys = System::new(&compact(0.5)).unwrap();
    let grid = TimeGrid::new(2.0, 0.1).unwrap();
    let dynamics = sys.dynamics(&grid).unwrap();
    for j in 0..2 {
        let dc = direct_current(&sys, &dynamics, j, &grid).unwrap();
        assert!(dc.operator.max_abs_diff(&dc.lesser) <= 1e-12);
        assert!(dc.operator.max_imag <= 1e-12);
        assert!(dc.operator.values[0].abs() <= 1e-14);
    }
}

#[test]
fn currents_feed_the_sample() {
    let sys = System::new(&compact(0.5)).unwrap();
    let grid = TimeGrid::new(2.0, 0.01).unwrap();
    let dynamics = sys.dynamics(&grid).unwrap();
    let currents: Vec<CurrentTrace> = (0..2)
        .map(|j| direct_current(&sys, &dynamics, j, &grid).unwrap().operator)
        .collect();
    let n = sample_number(&sys, &dynamics).unwrap();
    let r = conservation_residual(&currents, &n, &grid);
    assert!(r <= 1e-6 + 5.0 * grid.dt() * grid.dt(), "conservation {r}");
    assert!(n[grid.n()] > 1e-2);
}

#[test]
fn derivative_is_exact_on_quadratics() {
    let dt = 0.1;
    let v: Vec<f64> = (0..6).map(|k| (k as f64 * dt).powi(2) + 1.0).collect();
    for (k, d) in time_derivative(&v, dt).iter().enumerate() {
        assert!((d - 2.0 * k as f64 * dt).abs() <= 1e-12);
    }
}

#[test]
fn jmw_matches_direct_current_without_interaction() {
    let sys = System::new(&compact(0.0)).unwrap();
    let grid = TimeGrid::new(2.0, 0.01).unwrap();
    let dynamics = sys.dynamics(&grid).unwrap();
    let ctx = TransportContext::new(&sys, &dynamics, &grid).unwrap();
    let reg = EstimatorRegistry::default();
    for j in 0..2 {
        let direct = reg.get("direct").unwrap().estimate(&ctx, j).unwrap();
        let jmw = reg.get("jmw").unwrap().estimate(&ctx, j).unwrap();
        let lr = reg.get("langreth-reconstructed").unwrap().estimate(&ctx, j).unwrap();
        assert!(direct.max_abs_diff(&jmw) <= 1e-3, "jmw {}", direct.max_abs_diff(&jmw));
        assert!(direct.max_abs_diff(&lr) <= 1e-3, "langreth {}", direct.max_abs_diff(&lr));
    }
}

#[test]
fn langreth_identity_converges_with_interaction() {
    let sys = System::new(&compact(0.5)).unwrap();
    let res = |dt: f64| {
        let grid = TimeGrid::new(1.0, dt).unwrap();
        let dynamics = sys.dynamics(&grid).unwrap();
        let ctx = TransportContext::new(&sys, &dynamics, &grid).unwrap();
        let stride = (0.1 / dt).round() as usize;
        let idx: Vec<usize> = (0..=10).map(|i| i * stride).collect();
        ctx.langreth_residual(0, &idx).unwrap()
    };
    let (a, b) = (res(0.05), res(0.025));
    assert!(b <= 5e-3 && a / b > 3.5, "langreth {a} -> {b}");
}

#[test]
fn density_is_a_probability() {
    let sys = System::new(&compact(0.5)).unwrap();
    let grid = TimeGrid::new(1.0, 0.1).unwrap();
    let dynamics = sys.dynamics(&grid).unwrap();
    let ctx = TransportContext::new(&sys, &dynamics, &grid).unwrap();
    let n0 = dynamics.expectation_series(&sys.basis.number(0)).unwrap();
    for k in 0..grid.len() {
        let rho = particle_density(&ctx.sample.lesser, 0, k);
        assert!((rho - n0[k].re).abs() <= 1e-12);
        assert!((-1e-12..=1.0).contains(&rho));
    }
}

#[test]
fn registry_replaces_by_name() {
    let mut reg = EstimatorRegistry::default();
    assert_eq!(reg.names(), vec!["direct", "jmw", "langreth-reconstructed"]);
    reg.register(Box::new(DirectEstimator));
    assert_eq!(reg.names().len(), 3);
    assert!(reg.get("nope").is_none());
    assert!(EstimatorRegistry::empty().names().is_empty());
}
