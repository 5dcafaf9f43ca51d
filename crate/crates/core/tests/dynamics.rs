use kvn_ermakov::dynamics::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).collect()
}

/// Classical RK4 at a fixed step; independent of the adaptive solver.
fn rk4_fixed<const N: usize>(f: impl Fn(f64, &[f64; N]) -> [f64; N], y0: [f64; N], t1: f64, dt: f64) -> [f64; N] {
    let steps = (t1 / dt).round() as usize;
    let mut y = y0;
    let add = |y: &[f64; N], h: f64, k: &[f64; N]| -> [f64; N] { std::array::from_fn(|i| y[i] + h * k[i]) };
    for n in 0..steps {
        let t = n as f64 * dt;
        let k1 = f(t, &y);
        let k2 = f(t + dt / 2.0, &add(&y, dt / 2.0, &k1));
        let k3 = f(t + dt / 2.0, &add(&y, dt / 2.0, &k2));
        let k4 = f(t + dt, &add(&y, dt, &k3));
        y = std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    y
}

fn mathieu() -> StiffnessProfile {
    StiffnessProfile::mathieu(1.0, 0.5, 2.0)
}

#[test]
fn hill_matches_fine_step_oracle() {
    let p = mathieu();
    let oracle = rk4_fixed(|t, y: &[f64; 2]| [y[1], -(1.0 + 0.5 * (2.0 * t).cos()) * y[0]], [1.0, 0.0], 10.0, 1e-5);
    let s = solve_hill(&p, ClassicalState::new(1.0, 0.0), &[0.0, 10.0]).unwrap();
    assert!((s[1].q - oracle[0]).abs() < 1e-6, "{} vs {}", s[1].q, oracle[0]);
    assert!((s[1].p - oracle[1]).abs() < 1e-6, "{} vs {}", s[1].p, oracle[1]);
}

#[test]
fn ermakov_matches_fine_step_oracle() {
    let k = |t: f64| 1.0 + 0.5 * (2.0 * t).cos();
    let oracle = rk4_fixed(|t, y: &[f64; 2]| [y[1], y[0].powi(-3) - k(t) * y[0]], [1.0, 0.0], 10.0, 1e-5);
    let sol = solve_ermakov_direct(&mathieu(), 1.0, 0.0, &[0.0, 10.0]).unwrap();
    assert!((sol.rho()[1] - oracle[0]).abs() < 1e-7);
    assert!((sol.rhodot()[1] - oracle[1]).abs() < 1e-7);
}

#[test]
fn equilibria_hold_over_twenty_time_units() {
    for k in [0.25, 1.0, 4.0, 9.0] {
        let rho0 = f64::powf(k, -0.25);
        let times = grid(0.0, 20.0, 2000);
        let p = StiffnessProfile::constant(k);
        for sol in [
            solve_ermakov_direct(&p, rho0, 0.0, &times).unwrap(),
            solve_ermakov_pinney(&p, rho0, 0.0, &times).unwrap(),
        ] {
            let dev = sol.rho().iter().map(|r| (r - rho0).abs()).fold(0.0, f64::max);
            assert!(dev <= 1e-9, "k={k} deviation {dev:e}");
        }
    }
}

#[test]
fn pinney_and_direct_agree_on_mathieu() {
    let times = grid(0.0, 20.0, 2000);
    let d = solve_ermakov_direct(&mathieu(), 1.0, 0.0, &times).unwrap();
    let p = solve_ermakov_pinney(&mathieu(), 1.0, 0.0, &times).unwrap();
    let gap = d.rho().iter().zip(p.rho()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap <= 1e-8, "max |rho_pinney - rho_direct| = {gap:e}");
    assert_eq!(p.rho()[2000].to_bits(), solve_ermakov_pinney(&mathieu(), 1.0, 0.0, &times).unwrap().rho()[2000].to_bits());
}

#[test]
fn pinney_and_direct_agree_for_other_profiles() {
    let profiles = [
        StiffnessProfile::constant(2.0),
        StiffnessProfile::table(vec![(0.0, 1.0), (3.0, 2.5), (6.0, 0.5), (10.0, 1.5)]).unwrap(),
        StiffnessProfile::polynomial(vec![1.0, 0.1, -0.005]),
    ];
    let times = grid(0.0, 10.0, 1000);
    for prof in &profiles {
        let d = solve_ermakov_direct(prof, 1.3, -0.2, &times).unwrap();
        let p = solve_ermakov_pinney(prof, 1.3, -0.2, &times).unwrap();
        let gap = d.rho().iter().zip(p.rho()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap <= 1e-8, "{prof:?}: {gap:e}");
        assert!(d.min_rho() > 0.0);
    }
}

#[test]
fn closed_form_at_quarter_period() {
    let p = StiffnessProfile::constant(1.0);
    let times = grid(0.0, PI / 2.0, 1000);
    let d = solve_ermakov_direct(&p, 2.0, 0.0, &times).unwrap();
    let q = solve_ermakov_pinney(&p, 2.0, 0.0, &times).unwrap();
    for (i, t) in times.iter().enumerate() {
        let exact = (4.0 * t.cos().powi(2) + 0.25 * t.sin().powi(2)).sqrt();
        assert!((d.rho()[i] - exact).abs() < 1e-8);
        assert!((q.rho()[i] - exact).abs() < 1e-8);
    }
    assert!((d.rho()[1000] - 0.5).abs() <= 1e-8);
}

#[test]
fn mathieu_residual_is_stencil_limited() {
    // ρ stays O(1) on [0, 5]; later the resonance squeezes it and ρ⁻³ outruns a 1e-3 stencil.
    let sol = solve_ermakov_direct(&mathieu(), 1.0, 0.0, &grid(0.0, 5.0, 5_000)).unwrap();
    let max = ermakov_residual(&sol).unwrap().iter().copied().fold(0.0, f64::max);
    assert!(max <= 1e-5, "max residual {max:e}");
    // second-order stencil: halving the spacing quarters the residual
    let max_at = |n: usize| {
        let sol = solve_ermakov_direct(&mathieu(), 1.0, 0.0, &grid(0.0, 10.0, n)).unwrap();
        ermakov_residual(&sol).unwrap().iter().copied().fold(0.0, f64::max)
    };
    let ratio = max_at(10_000) / max_at(20_000);
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    // wrong equation: ρ from ρ̈ + kρ = 0 gives an O(1) residual
    let lin = solve_hill(&StiffnessProfile::constant(1.0), ClassicalState::new(1.0, 0.0), &grid(0.0, 1.0, 1000)).unwrap();
    let bad = ErmakovSolution::from_samples(
        StiffnessProfile::constant(1.0),
        grid(0.0, 1.0, 1000),
        lin.iter().map(|s| s.q).collect(),
        lin.iter().map(|s| s.p).collect(),
        ErmakovOptions::default(),
    )
    .unwrap();
    assert!(ermakov_residual(&bad).unwrap()[500] > 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hill_is_linear(q0 in -3.0f64..3.0, p0 in -3.0f64..3.0, alpha in -5.0f64..5.0) {
        prop_assume!(q0.abs() + p0.abs() > 1e-3 && alpha.abs() > 1e-3);
        let times = grid(0.0, 8.0, 16);
        let base = solve_hill(&mathieu(), ClassicalState::new(q0, p0), &times).unwrap();
        let scaled = solve_hill(&mathieu(), ClassicalState::new(alpha * q0, alpha * p0), &times).unwrap();
        for (b, s) in base.iter().zip(&scaled) {
            let scale = (alpha * b.q).abs().max((alpha * b.p).abs()).max(1e-300);
            prop_assert!((s.q - alpha * b.q).abs() <= 1e-10 * scale.max(alpha.abs() * (q0.abs() + p0.abs())));
            prop_assert!((s.p - alpha * b.p).abs() <= 1e-10 * scale.max(alpha.abs() * (q0.abs() + p0.abs())));
        }
    }

    #[test]
    fn ermakov_solutions_stay_positive(rho0 in 0.2f64..3.0, rhodot0 in -2.0f64..2.0, k in 0.1f64..5.0) {
        let times = grid(0.0, 10.0, 100);
        match solve_ermakov_direct(&StiffnessProfile::constant(k), rho0, rhodot0, &times) {
            Ok(sol) => prop_assert!(sol.min_rho() > 0.0),
            Err(e) => {
                let expected = matches!(e, DynamicsError::Singularity { .. } | DynamicsError::IntegrationFailure { .. });
                prop_assert!(expected, "unexpected error {}", e);
            }
        }
    }
}
