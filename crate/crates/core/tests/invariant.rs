use std::f64::consts::PI;

use kvn_ermakov::dynamics::{solve_ermakov_direct, ClassicalState, StiffnessProfile};
use kvn_ermakov::invariant::*;
use kvn_ermakov::propagator::{initialize_gaussian, PhaseSpaceField, PhaseSpaceGrid};
use kvn_ermakov::weyl::{build_invariant, InvariantForm};
use num_complex::Complex64;
use proptest::prelude::*;

fn mathieu() -> StiffnessProfile {
    StiffnessProfile::mathieu(1.0, 0.5, 2.0)
}

fn uniform(t1: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t1 * i as f64 / n as f64).collect()
}

/// `F⁻¹ diag(κ) F` as a dense matrix, from trigonometric sums.
fn derivative_matrix(n: usize, l: f64) -> Vec<Complex64> {
    let dx = 2.0 * l / n as f64;
    let kappa: Vec<f64> = (0..n).map(|m| (if m < n / 2 { m as f64 } else { m as f64 - n as f64 }) * PI / l).collect();
    let mut k = vec![Complex64::default(); n * n];
    for a in 0..n {
        for b in 0..n {
            let d = (a as f64 - b as f64) * dx;
            k[a * n + b] = kappa.iter().map(|q| Complex64::from_polar(*q, q * d)).sum::<Complex64>() / n as f64;
        }
    }
    k
}

struct Dense {
    grid: PhaseSpaceGrid,
    kx: Vec<Complex64>,
    kp: Vec<Complex64>,
}

impl Dense {
    fn new(grid: PhaseSpaceGrid) -> Self {
        Dense { grid, kx: derivative_matrix(grid.nx(), grid.lx()), kp: derivative_matrix(grid.np(), grid.lp()) }
    }

    fn along_x(&self, v: &[Complex64]) -> Vec<Complex64> {
        let (nx, np) = (self.grid.nx(), self.grid.np());
        let mut out = vec![Complex64::default(); v.len()];
        for a in 0..nx {
            for b in 0..nx {
                let k = self.kx[a * nx + b];
                for j in 0..np {
                    out[a * np + j] += k * v[b * np + j];
                }
            }
        }
        out
    }

    fn along_p(&self, v: &[Complex64]) -> Vec<Complex64> {
        let (nx, np) = (self.grid.nx(), self.grid.np());
        let mut out = vec![Complex64::default(); v.len()];
        for i in 0..nx {
            for a in 0..np {
                out[i * np + a] = (0..np).map(|b| self.kp[a * np + b] * v[i * np + b]).sum();
            }
        }
        out
    }

    /// `Î v` with `λ` realized by the dense matrices.
    fn apply(&self, v: &[Complex64], rho: f64, rhodot: f64) -> Vec<Complex64> {
        let g = &self.grid;
        let lp = self.along_p(v);
        let lplp = self.along_p(&lp);
        let comb: Vec<Complex64> = lp.iter().zip(self.along_x(v)).map(|(a, b)| a * rhodot + b * rho).collect();
        let comb2: Vec<Complex64> = self.along_p(&comb).iter().zip(self.along_x(&comb)).map(|(a, b)| a * rhodot + b * rho).collect();
        let mut out = vec![Complex64::default(); v.len()];
        for i in 0..g.nx() {
            for j in 0..g.np() {
                let n = g.index(i, j);
                let (x, p) = (g.x(i), g.p(j));
                let c = rhodot * x - rho * p;
                let m = 0.5 * (x * x / (rho * rho) + c * c);
                out[n] = v[n] * m + 0.5 * (lplp[n] / (rho * rho) + comb2[n]);
            }
        }
        out
    }

    fn inner(&self, a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum::<f64>() * self.grid.cell_area()
    }
}

/// `½[⟨x²⟩/ρ² + ⟨(ρ̇x - ρp)²⟩ + ‖λpψ‖²/ρ² + ‖(ρ̇λp + ρλx)ψ‖²]` from the field's
/// moments and dense derivative matrices.
fn moment_oracle(field: &PhaseSpaceField, rho: f64, rhodot: f64) -> f64 {
    let g = *field.grid();
    let dense = Dense::new(g);
    let v = field.values();
    let lp = dense.along_p(v);
    let lx = dense.along_x(v);
    let comb: Vec<Complex64> = lp.iter().zip(&lx).map(|(a, b)| a * rhodot + b * rho).collect();
    let mut real = 0.0;
    for i in 0..g.nx() {
        for j in 0..g.np() {
            let (x, p) = (g.x(i), g.p(j));
            let c = rhodot * x - rho * p;
            real += (x * x / (rho * rho) + c * c) * field.at(i, j).norm_sqr();
        }
    }
    real *= g.cell_area();
    0.5 * (real + dense.inner(&lp, &lp) / (rho * rho) + dense.inner(&comb, &comb))
}

#[test]
fn unit_gaussian_has_unit_invariant() {
    let g = PhaseSpaceGrid::new(256, 256, 8.0, 8.0).unwrap();
    let f = initialize_gaussian(&g, ClassicalState::new(0.0, 0.0), (1.0, 1.0)).unwrap();
    let op = build_split_operator(&g, 1.0, 0.0).unwrap();
    let mean = expectation_invariant(&f, &op).unwrap();
    assert!((mean - 1.0).abs() <= 1e-6, "{mean}");
    // The unit Gaussian is an eigenfunction of Î at ρ = 1.
    assert!(variance_invariant(&f, &op).unwrap().abs() <= 1e-10);
}

#[test]
fn narrow_gaussian_matches_moment_oracle() {
    let g = PhaseSpaceGrid::new(256, 256, 2.0, 2.0).unwrap();
    let f = initialize_gaussian(&g, ClassicalState::new(1.0, 0.0), (0.1, 0.1)).unwrap();
    let mut ev = InvariantEvaluator::new(g).unwrap();
    for (rho, rhodot) in [(1.0, 0.0), (1.3, 0.4)] {
        let op = build_split_operator(&g, rho, rhodot).unwrap();
        let spectral = ev.expectation(&f, &op).unwrap();
        let oracle = moment_oracle(&f, rho, rhodot);
        assert!((spectral - oracle).abs() <= 1e-8 * oracle, "{spectral} vs {oracle}");
    }
    // Classical value 0.5 plus the Gaussian spread ½(σ² + σ⁻²).
    let op = build_split_operator(&g, 1.0, 0.0).unwrap();
    let expect = 0.5 + 0.5 * (0.01 + 100.0);
    assert!((ev.expectation(&f, &op).unwrap() - expect).abs() < 1e-6);
}

#[test]
fn variance_matches_dense_operator() {
    let g = PhaseSpaceGrid::new(32, 32, 8.0, 8.0).unwrap();
    let dense = Dense::new(g);
    let mut ev = InvariantEvaluator::new(g).unwrap();
    for (center, widths, rho, rhodot) in
        [((0.0, 0.0), (1.0, 1.0), 1.0, 0.0), ((1.0, -0.5), (1.0, 1.2), 1.4, -0.3), ((0.5, 0.5), (0.9, 0.9), 0.8, 0.6)]
    {
        let f = initialize_gaussian(&g, ClassicalState::new(center.0, center.1), widths).unwrap();
        let op = build_split_operator(&g, rho, rhodot).unwrap();
        let (mean, var) = ev.expectation_and_variance(&f, &op).unwrap();
        let once = dense.apply(f.values(), rho, rhodot);
        let twice = dense.apply(&once, rho, rhodot);
        let dmean = dense.inner(f.values(), &once);
        let dvar = dense.inner(f.values(), &twice) - dmean * dmean;
        assert!((mean - dmean).abs() <= 1e-9, "{mean} vs {dmean}");
        assert!((var - dvar).abs() <= 1e-6, "{var} vs {dvar}");
    }
}

#[test]
fn every_total_form_gives_the_same_expectation() {
    let g = PhaseSpaceGrid::new(64, 64, 8.0, 8.0).unwrap();
    let f = initialize_gaussian(&g, ClassicalState::new(0.7, -0.4), (1.1, 0.9)).unwrap();
    let (rho, rhodot) = (1.3, 0.4);
    let split = expectation_invariant(&f, &build_split_operator(&g, rho, rhodot).unwrap()).unwrap();
    for form in [InvariantForm::TotalLiouville, InvariantForm::TotalHidden, InvariantForm::TotalSplit] {
        let z = polynomial_expectation(&f, &build_invariant(form), rho, rhodot, 1.0).unwrap();
        assert!((z.re - split).abs() <= 1e-10 * split, "{form}: {z} vs {split}");
        assert!(z.im.abs() <= 1e-10 * split, "{form}: {z}");
    }
}

#[test]
fn spread_term_shrinks_toward_unit_width() {
    let g = PhaseSpaceGrid::new(256, 256, 6.0, 6.0).unwrap();
    let center = ClassicalState::new(0.5, 0.0);
    let classical = classical_invariant(center, 1.0, 0.0).unwrap();
    let op = build_split_operator(&g, 1.0, 0.0).unwrap();
    let mut ev = InvariantEvaluator::new(g).unwrap();
    let mut last = f64::INFINITY;
    for s in [0.15, 0.2, 0.3, 0.5, 0.7, 1.0] {
        let f = initialize_gaussian(&g, center, (s, s)).unwrap();
        let excess = ev.expectation(&f, &op).unwrap() - classical;
        assert!((excess - 0.5 * (s * s + 1.0 / (s * s))).abs() < 1e-8, "{s}: {excess}");
        assert!(excess < last);
        last = excess;
    }
}

#[test]
fn unit_oscillator_keeps_expectation() {
    let config = StudyConfig {
        grid: PhaseSpaceGrid::new(128, 128, 8.0, 8.0).unwrap(),
        center: ClassicalState::new(1.0, 0.0),
        widths: (1.0, 1.0),
        profile: StiffnessProfile::constant(1.0),
        rho0: 1.0,
        rhodot0: 0.0,
        t1: 2.0 * PI,
        dt: 2.0 * PI / 4000.0,
        stride: 200,
        rho_source: RhoSource::Ermakov,
    };
    let r = run_invariant_study(&config).unwrap();
    assert_eq!(r.len(), 21);
    assert!(r.max_rel_drift_i <= 1e-6, "{}", r.max_rel_drift_i);
    assert!(r.max_norm_drift <= 1e-10);
    assert!(r.expect_i.iter().all(|v| *v >= 0.0));
}

#[test]
fn mathieu_drifts_are_second_order() {
    let base = StudyConfig {
        grid: PhaseSpaceGrid::new(256, 256, 20.0, 20.0).unwrap(),
        center: ClassicalState::new(1.0, 0.0),
        widths: (1.0, 1.0),
        profile: mathieu(),
        rho0: 1.0,
        rhodot0: 0.0,
        t1: 10.0,
        dt: 0.01,
        stride: 50,
        rho_source: RhoSource::Ermakov,
    };
    let coarse = run_invariant_study(&base).unwrap();
    let fine = run_invariant_study(&StudyConfig { dt: 0.005, stride: 100, ..base.clone() }).unwrap();
    assert!(coarse.var_drift_relative);
    assert!(coarse.max_rel_drift_i <= 1e-4, "{}", coarse.max_rel_drift_i);
    for (a, b) in [(coarse.max_rel_drift_i, fine.max_rel_drift_i), (coarse.max_rel_drift_var, fine.max_rel_drift_var)] {
        let ratio = a / b;
        assert!((3.0..=5.0).contains(&ratio), "{a:e} / {b:e} = {ratio}");
    }
}

#[test]
fn wrong_rho_breaks_conservation() {
    let config = StudyConfig {
        grid: PhaseSpaceGrid::new(128, 128, 20.0, 20.0).unwrap(),
        center: ClassicalState::new(1.0, 0.0),
        widths: (1.0, 1.0),
        profile: mathieu(),
        rho0: 1.0,
        rhodot0: 0.0,
        t1: 10.0,
        dt: 0.01,
        stride: 10,
        rho_source: RhoSource::Linear,
    };
    let r = run_invariant_study(&config).unwrap();
    assert!(r.truncated_at.is_some());
    assert!(r.max_rel_drift_i >= 1e-2, "{}", r.max_rel_drift_i);
}

#[test]
fn classical_origin_has_zero_drift() {
    let e = solve_ermakov_direct(&StiffnessProfile::constant(1.0), 1.0, 0.0, &uniform(5.0, 50)).unwrap();
    let d = classical_drift(&StiffnessProfile::constant(1.0), &[ClassicalState::new(0.0, 0.0)], &e).unwrap();
    assert_eq!(d[0].drift, 0.0);
    assert!(!d[0].relative);
}

#[test]
fn classical_mathieu_drift() {
    let e = solve_ermakov_direct(&mathieu(), 1.0, 0.0, &uniform(20.0, 2000)).unwrap();
    let states: Vec<_> = [(1.0, 0.0), (-0.3, 1.7), (2.0, -2.0), (0.01, 0.02)].iter().map(|(q, p)| ClassicalState::new(*q, *p)).collect();
    for d in classical_drift(&mathieu(), &states, &e).unwrap() {
        assert!(d.drift <= 1e-7, "{d:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn unit_oscillator_classical_drift(states in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 100)) {
        let prof = StiffnessProfile::constant(1.0);
        let e = solve_ermakov_direct(&prof, 1.0, 0.0, &uniform(20.0, 200)).unwrap();
        let states: Vec<_> = states.into_iter().map(|(q, p)| ClassicalState::new(q, p)).collect();
        for d in classical_drift(&prof, &states, &e).unwrap() {
            prop_assert!(d.drift <= 1e-8, "{:?}", d);
        }
    }

    #[test]
    fn split_parts_are_nonnegative(rho in 0.05..5.0f64, rhodot in -5.0..5.0f64) {
        let g = PhaseSpaceGrid::new(32, 32, 4.0, 4.0).unwrap();
        let op = build_split_operator(&g, rho, rhodot).unwrap();
        prop_assert!(op.multiplicative().iter().chain(op.spectral()).all(|v| *v >= 0.0));
        let f = initialize_gaussian(&PhaseSpaceGrid::new(32, 32, 8.0, 8.0).unwrap(), ClassicalState::new(0.0, 0.0), (1.0, 1.0)).unwrap();
        let op = build_split_operator(f.grid(), rho, rhodot).unwrap();
        prop_assert!(expectation_invariant(&f, &op).unwrap() >= 0.0);
    }
}

