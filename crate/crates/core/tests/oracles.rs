use stochtrans_core::drift::{holder_norm_parts, Cusp, RoughLadder};
use stochtrans_core::exec::Sequential;
use stochtrans_core::stats::mean;
use stochtrans_core::transport::{all_grid_times, solve_characteristics};
use stochtrans_core::weakform::residual_reports;
use stochtrans_core::{
    backward_flow, dual_density, forward_flow, sample_batch_path, sample_path, DriftSpec, Grid, InitialData,
    TestFunction, Vector,
};

fn ladder() -> RoughLadder {
    RoughLadder { theta: 0.5, amplitude: 1.0, levels: 8, tail_slope: -0.5 }
}

fn v(xs: &[f64]) -> Vector {
    Vector::from_slice(xs)
}

/// Trapezoid over ±8σ with 8001 nodes: `∫ f(x − z) N(0, σ²)(dz)`.
fn gauss_convolve(f: impl Fn(f64) -> f64, x: f64, sigma: f64) -> f64 {
    let n = 8000;
    let a = 8.0 * sigma;
    let dz = 2.0 * a / n as f64;
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    (0..=n)
        .map(|j| {
            let z = -a + j as f64 * dz;
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            w * f(x - z) * (-(z * z) / (2.0 * sigma * sigma)).exp() * norm * dz
        })
        .sum()
}

fn raw_ladder_component(l: &RoughLadder, x: f64, coord: usize) -> f64 {
    let s: f64 = (0..l.levels)
        .map(|k| {
            let f = 2f64.powi(k as i32);
            f.powf(-l.theta) * (f * x + k as f64 + 0.5 * coord as f64).sin()
        })
        .sum();
    l.amplitude * s + l.tail_slope * x
}

#[test]
fn mollified_ladder_matches_quadrature() {
    let l = ladder();
    let b = DriftSpec::rough(2, l).unwrap().mollify(0.05).unwrap();
    for x in [[0.0, 0.0], [0.37, -1.2], [2.5, 0.9]] {
        let got = b.eval(&v(&x));
        for c in 0..2 {
            let oracle = gauss_convolve(|y| raw_ladder_component(&l, y, c), x[c], 0.05);
            assert!((got[c] - oracle).abs() < 1e-4, "coord {c} at {x:?}: {} vs {oracle}", got[c]);
        }
    }
    // The same convolution from the raw field by the library's own quadrature rule.
    let raw = DriftSpec::rough(1, l).unwrap();
    let q = stochtrans_core::drift::mollify_scalar_at(&|y: &Vector| raw.eval(y)[0], &v(&[0.3]), 0.05);
    assert!((q - DriftSpec::rough(1, l).unwrap().mollify(0.05).unwrap().eval(&v(&[0.3]))[0]).abs() < 1e-4);
}

#[test]
fn cusp_divergence_by_differences_matches_quadrature() {
    let cusp = Cusp { theta: 0.5, amplitude: 1.5 };
    let b = DriftSpec::cusp(1, cusp).unwrap().mollify(0.1).unwrap();
    assert!(b.divergence(&v(&[0.2]), None).is_err());
    let raw = |y: f64| -cusp.amplitude * y.signum() * y.abs().powf(cusp.theta);
    for x in [0.0, 0.05, 0.2, -0.7] {
        let d = 1e-3;
        let oracle = (gauss_convolve(raw, x + d, 0.1) - gauss_convolve(raw, x - d, 0.1)) / (2.0 * d);
        let fd = b.divergence(&v(&[x]), Some(1e-4)).unwrap();
        assert!((fd - oracle).abs() < 1e-3 * oracle.abs().max(1.0), "x = {x}: {fd} vs {oracle}");
    }
}

#[test]
fn ladder_seminorm_respects_its_bound() {
    let l = ladder();
    let b = DriftSpec::rough(1, l).unwrap();
    let (_, semi) = holder_norm_parts(&b, &Grid::new(1, 2.0, 0.005).unwrap(), l.theta);
    assert!(semi <= l.seminorm_bound(), "{semi} > {}", l.seminorm_bound());
    assert!(semi > 0.2 * l.seminorm_bound());
}

#[test]
fn flows_compose_exactly_on_the_step_grid() {
    let b = DriftSpec::rough(2, ladder()).unwrap();
    let path = sample_path(12, 1.0, 64, 2).unwrap();
    let x = v(&[0.3, -0.4]);
    let whole = forward_flow(&b, &path, 0.0, 1.0, &x, true).unwrap();
    let first = forward_flow(&b, &path, 0.0, 0.375, &x, true).unwrap();
    let second = forward_flow(&b, &path, 0.375, 1.0, &first.terminal_point, true).unwrap();
    assert_eq!(whole.terminal_point, second.terminal_point);
    let jac = second.jacobian.unwrap().mul_mat(&first.jacobian.unwrap());
    assert!((jac - whole.jacobian.unwrap()).frobenius_norm() < 1e-12);

    let back = backward_flow(&b, &path, 0.375, 1.0, &whole.terminal_point, false).unwrap();
    assert!((back.terminal_point - first.terminal_point).norm() < 0.2);
}

#[test]
fn ou_jacobian_matches_closed_form() {
    let b = DriftSpec::ornstein_uhlenbeck(1, 0.7);
    let path = sample_path(1, 1.0, 1 << 12, 1).unwrap();
    let r = forward_flow(&b, &path, 0.0, 1.0, &v(&[2.0]), true).unwrap();
    assert!((r.jacobian_det.unwrap() - (-0.7f64).exp()).abs() < 1e-4);
}

#[test]
fn dual_density_conserves_mass_under_refinement() {
    let b = DriftSpec::rough(1, ladder()).unwrap().mollify(0.1).unwrap();
    let phi = |x: &Vector| (-4.0 * x.norm_squared()).exp();
    let mass = (std::f64::consts::PI / 4.0).sqrt();
    let mut errs = Vec::new();
    for (n, h) in [(32usize, 0.1), (128, 0.05), (512, 0.025)] {
        let fine = sample_path(3, 1.0, 512, 1).unwrap();
        let path = fine.coarsen(512 / n).unwrap();
        let v = dual_density(&b, &phi, &path, 1.0, Grid::new(1, 6.0, h).unwrap(), &Sequential).unwrap();
        errs.push((v.integrate() - mass).abs());
    }
    assert!(errs[2] < errs[0] && errs[2] < 2e-2, "{errs:?}");
}

#[test]
fn zero_drift_residual_shrinks_with_refinement() {
    let u0 = InitialData::gaussian(v(&[0.2]), 0.5, 1.0);
    let phi = [TestFunction::new(v(&[0.1]), 0.8).unwrap()];
    let mut means = Vec::new();
    for (n, h) in [(4usize, 0.1), (16, 0.05), (64, 0.025)] {
        let r = residual_reports(&DriftSpec::zero(1), &u0, &phi, Grid::new(1, 2.0, h).unwrap(), 2, 0.5, n, 300, &Sequential)
            .unwrap();
        means.push(r[0].mean().abs() - 2.0 * r[0].std_error());
    }
    assert!(means[2] < means[0], "{means:?}");
    assert!(means[2] < 1e-2, "{means:?}");
}

#[test]
fn solution_range_stays_in_data_range_for_every_path() {
    let b = DriftSpec::rough(1, ladder()).unwrap();
    let u0 = InitialData::SmoothedIndicator { half_width: 0.7, edge: 0.05 };
    let grid = Grid::new(1, 2.0, 0.02).unwrap();
    let mut means = Vec::new();
    for i in 0..8 {
        let path = sample_batch_path(5, i, 1.0, 32, 1).unwrap();
        let sol = solve_characteristics(&b, &u0, &path, &all_grid_times(&path, 1.0).unwrap(), grid, &Sequential).unwrap();
        for f in sol.fields() {
            assert!(f.min() >= 0.0 && f.max() <= 1.0);
        }
        means.push(sol.fields().last().unwrap().integrate());
    }
    assert!(mean(&means) > 0.0);
}
