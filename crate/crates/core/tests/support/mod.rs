//! Property suites shared by the proptest target and the acceptance run.

#![allow(dead_code)]

use std::f64::consts::{PI, SQRT_2};

use kpz_core::growth::{height_stats, height_stats_f64};
use kpz_core::mhfe::{
    assemble_local, Boundary, ElementState, FnForcing, KpzParameters, LocalInputs, Lu5, Mesh1D, MhfeSolver,
    NeighborTrace, ZeroForcing,
};
use kpz_core::noise::{draw_gaussian_matrix, mollify_convolution, mollify_spectral, Mollifier, MollifierKind, NoiseRealization, RngStream};
use kpz_core::renorm::hopf_cole;
use kpz_core::spectral::{
    integrate_final, step, step_lord_rougemont, step_milstein, Diffusion, Drift, Scheme, SemilinearProblem,
    SpectralField, SpectralOperator,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};


fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

fn report<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

fn kind() -> impl Strategy<Value = MollifierKind> {
    prop_oneof![Just(MollifierKind::Bump), Just(MollifierKind::Gaussian)]
}

fn scheme() -> impl Strategy<Value = Scheme> {
    prop_oneof![Just(Scheme::EulerGalerkin), Just(Scheme::LordRougemont), Just(Scheme::Milstein)]
}

pub fn noise_determinism(cases: u32) -> Result<(), String> {
    let s = (any::<u64>(), 0u64..1000, 1usize..20, 1usize..16, 1e-4f64..1.0);
    report(runner(cases).run(&s, |(seed, stream, n_time, modes, dt)| {
        let a = draw_gaussian_matrix(RngStream::new(seed, stream), n_time, modes, dt).unwrap();
        let b = draw_gaussian_matrix(RngStream::new(seed, stream), n_time, modes, dt).unwrap();
        prop_assert_eq!(&a, &b);
        let c = draw_gaussian_matrix(RngStream::new(seed, stream + 1), n_time, modes, dt).unwrap();
        prop_assert_ne!(a.increments(), c.increments());
        let d = draw_gaussian_matrix(RngStream::new(seed.wrapping_add(1), stream), n_time, modes, dt).unwrap();
        prop_assert_ne!(a.increments(), d.increments());
        Ok(())
    }))
}

pub fn mollification_linearity(cases: u32) -> Result<(), String> {
    let s = (any::<u64>(), kind(), 0.01f64..=1.0, -3.0f64..3.0, -3.0f64..3.0, 8usize..48);
    report(runner(cases).run(&s, |(seed, kind, kappa, a, b, m)| {
        let phi = Mollifier::new(kind, kappa).unwrap();
        let x = draw_gaussian_matrix(RngStream::new(seed, 0), 4, 9, 0.01).unwrap();
        let y = draw_gaussian_matrix(RngStream::new(seed, 1), 4, 9, 0.01).unwrap();
        let lhs = mollify_spectral(&x.combine(a, &y, b).unwrap(), &phi);
        let rhs = mollify_spectral(&x, &phi).combine(a, &mollify_spectral(&y, &phi), b).unwrap();
        for (p, q) in lhs.increments().iter().zip(rhs.increments()) {
            prop_assert!(close(*p, *q, 1e-12), "{p} vs {q}");
        }

        if 2.0 * phi.kernel_radius() > 1.0 {
            return Ok(());
        }
        let f = RngStream::new(seed, 2).normals(m);
        let g = RngStream::new(seed, 3).normals(m);
        let fg: Vec<f64> = f.iter().zip(&g).map(|(u, v)| a * u + b * v).collect();
        let lhs = mollify_convolution(&fg, &phi, 1.0).unwrap();
        let mf = mollify_convolution(&f, &phi, 1.0).unwrap();
        let mg = mollify_convolution(&g, &phi, 1.0).unwrap();
        for i in 0..m {
            prop_assert!(close(lhs[i], a * mf[i] + b * mg[i], 1e-12));
        }
        Ok(())
    }))
}

fn deterministic_problem(modes: usize, nu: f64, dt: f64) -> SemilinearProblem {
    SemilinearProblem::new(SpectralOperator::periodic_laplacian(modes, nu).unwrap(), Drift::Zero, Diffusion::Zero, dt)
        .unwrap()
}

/// Without noise each mode evolves on its own by the scheme's scalar factor.
pub fn spectral_decoupling(cases: u32) -> Result<(), String> {
    let s = (2usize..32, any::<prop::sample::Index>(), -5.0f64..5.0, 0.1f64..2.0, 1e-4f64..0.1, scheme());
    report(runner(cases).run(&s, |(modes, j, c, nu, dt, scheme)| {
        let j = j.index(modes);
        let problem = deterministic_problem(modes, nu, dt);
        let mut coeffs = vec![0.0; modes];
        coeffs[j] = c;
        let out = step(scheme, &SpectralField::new(coeffs), &problem, &vec![0.0; modes]).unwrap();
        let n = j.div_ceil(2) as f64;
        let mu = nu * (2.0 * PI * n).powi(2) * dt;
        let expected = match scheme {
            Scheme::EulerGalerkin => c / (1.0 + mu),
            _ => c * (-mu).exp(),
        };
        for (k, v) in out.coeffs.iter().enumerate() {
            let want = if k == j { expected } else { 0.0 };
            prop_assert!((v - want).abs() <= 1e-12 * (1.0 + c.abs()), "mode {k}: {v} vs {want}");
        }
        Ok(())
    }))
}

/// The exponential integrator without noise satisfies `S(Δt)S(Δt) = S(2Δt)`.
pub fn spectral_semigroup(cases: u32) -> Result<(), String> {
    let s = (1usize..24, any::<u64>(), 0.1f64..2.0, 1e-4f64..0.05);
    report(runner(cases).run(&s, |(modes, seed, nu, dt)| {
        let y = SpectralField::new(RngStream::new(seed, 0).normals(modes));
        let zero = vec![0.0; modes];
        let p1 = deterministic_problem(modes, nu, dt);
        let p2 = deterministic_problem(modes, nu, 2.0 * dt);
        let two = step_lord_rougemont(&step_lord_rougemont(&y, &p1, &zero).unwrap(), &p1, &zero).unwrap();
        let one = step_lord_rougemont(&y, &p2, &zero).unwrap();
        for (a, b) in two.coeffs.iter().zip(&one.coeffs) {
            prop_assert!(close(*a, *b, 1e-12), "{a} vs {b}");
        }
        Ok(())
    }))
}

fn periodic_params(nu: f64, lambda: f64, dx: f64, dt: f64) -> KpzParameters {
    KpzParameters::new(nu, lambda, dx / 2.0, dx / 2.0, dt).with_tolerance(1e-12, 100_000)
}

pub fn mhfe_constant_state(cases: u32) -> Result<(), String> {
    let s = (-10.0f64..10.0, 0.1f64..3.0, -3.0f64..3.0, 4usize..33, 1e-4f64..1e-2);
    report(runner(cases).run(&s, |(c, nu, lambda, cells, dt)| {
        let mesh = Mesh1D::new(0.0, 1.0, cells).unwrap();
        let mut solver =
            MhfeSolver::new(mesh, periodic_params(nu, lambda, mesh.dx(), dt), Boundary::Periodic, |_| c).unwrap();
        for _ in 0..3 {
            solver.step(&ZeroForcing).unwrap();
        }
        for h in solver.heights() {
            prop_assert!((h - c).abs() <= 1e-10 * (1.0 + c.abs()), "{h} vs {c}");
        }
        Ok(())
    }))
}

/// Periodic, `λ = 0`, no forcing: `Σ h Δx` is invariant.
pub fn mhfe_mass_conservation(cases: u32) -> Result<(), String> {
    let s = (any::<u64>(), 0.1f64..3.0, 4usize..33, 1e-4f64..1e-2);
    report(runner(cases).run(&s, |(seed, nu, cells, dt)| {
        let a = RngStream::new(seed, 0).normals(5);
        let h0 = move |x: f64| {
            a[0] + a[1] * (2.0 * PI * x).cos() + a[2] * (2.0 * PI * x).sin() + a[3] * (4.0 * PI * x).cos()
                + a[4] * (6.0 * PI * x).sin()
        };
        let mesh = Mesh1D::new(0.0, 1.0, cells).unwrap();
        let mut solver =
            MhfeSolver::new(mesh, periodic_params(nu, 0.0, mesh.dx(), dt), Boundary::Periodic, h0).unwrap();
        let mass = |h: &[f64]| h.iter().sum::<f64>() * mesh.dx();
        let m0 = mass(&solver.heights());
        for _ in 0..5 {
            solver.step(&ZeroForcing).unwrap();
        }
        let m1 = mass(&solver.heights());
        prop_assert!((m1 - m0).abs() <= 1e-9 * (1.0 + m0.abs()), "{m0} -> {m1}");
        Ok(())
    }))
}

fn element() -> impl Strategy<Value = ElementState> {
    prop::array::uniform5(-5.0f64..5.0).prop_map(ElementState::from_array)
}

/// Local systems assembled from admissible parameters are nonsingular and
/// their LU solve reproduces the right-hand side.
pub fn local_invertibility(cases: u32) -> Result<(), String> {
    let params = (0.01f64..5.0, -5.0f64..5.0, 1e-3f64..1.0, 1e-3f64..1.0, 1e-6f64..0.1, 1e-3f64..0.5);
    let s = (params, element(), element(), element(), -5.0f64..5.0, (-5.0f64..5.0, -5.0f64..5.0));
    report(runner(cases).run(&s, |((nu, lambda, chi1, chi2, dt, dx), prev, left, right, h_prev, forcing)| {
        let p = KpzParameters::new(nu, lambda, chi1, chi2, dt);
        let inputs = LocalInputs {
            previous: prev,
            left: NeighborTrace::right_of(&left),
            right: NeighborTrace::left_of(&right),
            h_previous_time: h_prev,
            forcing,
        };
        let sys = assemble_local(&inputs, &p, dx);
        let lu = Lu5::factor(&sys.matrix).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let x = lu.solve(&sys.rhs);
        let scale = sys.matrix.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let xmax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for r in 0..5 {
            let ax: f64 = (0..5).map(|c| sys.matrix[r][c] * x[c]).sum();
            prop_assert!(
                (ax - sys.rhs[r]).abs() <= 1e-9 * (scale * xmax + sys.rhs[r].abs() + 1.0),
                "row {r}: {ax} vs {}",
                sys.rhs[r]
            );
        }
        Ok(())
    }))
}

pub fn roughness_hand_cases(cases: u32) -> Result<(), String> {
    let s = (-1000i64..1000, 0i64..50, 1usize..64, prop::collection::vec(-1000i64..1000, 1..64), -500i64..500);
    report(runner(cases).run(&s, |(c, a, half, heights, shift)| {
        let (m, w) = height_stats(&vec![c; 2 * half]);
        prop_assert_eq!((m, w), (c as f64, 0.0));
        let alternating: Vec<i64> = (0..2 * half).map(|i| if i % 2 == 0 { c - a } else { c + a }).collect();
        let (m, w) = height_stats(&alternating);
        prop_assert!((m - c as f64).abs() < 1e-9 && (w - a as f64).abs() < 1e-9, "{m} {w}");

        let (m0, w0) = height_stats(&heights);
        let shifted: Vec<i64> = heights.iter().map(|h| h + shift).collect();
        let (m1, w1) = height_stats(&shifted);
        prop_assert!((m1 - m0 - shift as f64).abs() < 1e-9 && (w1 - w0).abs() < 1e-9);
        let as_f64: Vec<f64> = heights.iter().map(|&h| h as f64).collect();
        let (mf, wf) = height_stats_f64(&as_f64);
        prop_assert!((mf - m0).abs() < 1e-9 && (wf - w0).abs() < 1e-9);
        Ok(())
    }))
}

pub fn hopf_cole_round_trip(cases: u32) -> Result<(), String> {
    let s = prop::collection::vec(-30.0f64..30.0, 1..128);
    report(runner(cases).run(&s, |h| {
        let z: Vec<f64> = h.iter().map(|v| v.exp()).collect();
        let back = hopf_cole(&z).unwrap();
        for (a, b) in h.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
        }
        Ok(())
    }))
}

/// Itô iterated-integral oracle for one Milstein step on the constant mode:
/// the correction `½λ²X(ΔW² − Δt)` against `λ²X Σ_k W(s_k) δW_k` on a path of
/// `substeps` increments. The two differ by `½λ²X(Δt − Σ δW_k²)`, whose
/// standard deviation `½λ²|X|Δt√(2/N)` sets the envelope.
pub fn milstein_ito_sum(cases: u32, substeps: usize) -> Result<(), String> {
    let s = (any::<u64>(), 0.1f64..3.0, -4.0f64..4.0, 1e-3f64..0.5);
    report(runner(cases).run(&s, |(seed, lambda, x0, dt)| {
        prop_assume!(x0.abs() > 1e-3);
        let increments: Vec<f64> =
            RngStream::new(seed, 0).normals(substeps).into_iter().map(|z| z * (dt / substeps as f64).sqrt()).collect();
        let (mut w, mut ito) = (0.0, 0.0);
        for d in &increments {
            ito += w * d;
            w += d;
        }
        let oracle = lambda * lambda * x0 * ito;

        let problem = SemilinearProblem::heat(1, 1.0, lambda, dt).unwrap();
        let y = SpectralField::constant(1, x0);
        let milstein = step_milstein(&y, &problem, &[w]).unwrap().coeffs[0];
        let euler = step_lord_rougemont(&y, &problem, &[w]).unwrap().coeffs[0];
        let term = milstein - euler;

        let sigma = 0.5 * lambda * lambda * x0.abs() * dt * (2.0 / substeps as f64).sqrt();
        prop_assert!((term - oracle).abs() <= 5.0 * sigma + 1e-13, "term {term} oracle {oracle} sigma {sigma}");
        // the opposite sign convention would be off by λ²XΔt
        prop_assert!((lambda * lambda * x0 * dt).abs() > 50.0 * sigma);
        Ok(())
    }))
}

/// `η(x) = a(½ + cos 2πx + ½ sin 4πx)` and its coefficients on the trig basis.
fn smooth_forcing(a: f64, modes: usize) -> (impl Fn(f64, f64) -> f64 + Sync, Vec<f64>) {
    let mut coeffs = vec![0.0; modes];
    coeffs[0] = 0.5 * a;
    coeffs[1] = a / SQRT_2;
    coeffs[4] = 0.5 * a / SQRT_2;
    (move |_t: f64, x: f64| a * (0.5 + (2.0 * PI * x).cos() + 0.5 * (4.0 * PI * x).sin()), coeffs)
}

/// Maximum difference at cell centers between the MHFE solution of
/// `h_t = h_xx + (h_x)² + η`, `h₀ = 0`, and `log z` for `z_t = z_xx + ηz`,
/// `z₀ = 1`, with `cells` cells and `Δt = Δx²/4` for both solvers.
pub fn smooth_forcing_gap(a: f64, cells: usize, t_final: f64) -> f64 {
    let modes = 33;
    let mesh = Mesh1D::new(0.0, 1.0, cells).unwrap();
    let dx = mesh.dx();
    let n_steps = (t_final / (dx * dx / 4.0)).ceil() as usize;
    let dt = t_final / n_steps as f64;
    let (eta, coeffs) = smooth_forcing(a, modes);

    let params = KpzParameters::new(1.0, 2.0, dx / 2.0, dx / 2.0, dt).with_tolerance(1e-12, 100_000);
    let mut solver = MhfeSolver::new(mesh, params, Boundary::Periodic, |_| 0.0).unwrap();
    let forcing = FnForcing(eta);
    for _ in 0..n_steps {
        solver.step(&forcing).unwrap();
    }
    let h = solver.heights();

    let problem = SemilinearProblem::heat(modes, 1.0, 1.0, dt).unwrap();
    let row: Vec<f64> = coeffs.iter().map(|c| c * dt).collect();
    let increments: Vec<f64> = (0..n_steps).flat_map(|_| row.iter().copied()).collect();
    let noise = NoiseRealization::from_parts(increments, n_steps, modes, dt).unwrap();
    let z = integrate_final(&problem, Scheme::EulerGalerkin, &SpectralField::constant(modes, 1.0), &noise).unwrap();
    let log_z = hopf_cole(&z.eval_many(&mesh.centers())).unwrap();
    h.iter().zip(&log_z).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// The gap shrinks under refinement and is small on the finer grid.
pub fn smooth_forcing_consistency() -> Result<(), String> {
    for a in [0.5, 2.0] {
        let coarse = smooth_forcing_gap(a, 16, 0.1);
        let fine = smooth_forcing_gap(a, 32, 0.1);
        if !(fine < 0.4 * coarse && fine < 2e-4) {
            return Err(format!("a = {a}: gap {coarse:.3e} at 16 cells, {fine:.3e} at 32 cells"));
        }
    }
    Ok(())
}

pub type Suite = (&'static str, Box<dyn Fn() -> Result<(), String>>);

/// Every invariant suite with `cases` random cases each.
pub fn invariant_suites(cases: u32) -> Vec<Suite> {
    vec![
        ("noise determinism", Box::new(move || noise_determinism(cases))),
        ("mollification linearity", Box::new(move || mollification_linearity(cases))),
        ("spectral mode decoupling", Box::new(move || spectral_decoupling(cases))),
        ("spectral semigroup", Box::new(move || spectral_semigroup(cases))),
        ("MHFE constant-state fixed point", Box::new(move || mhfe_constant_state(cases))),
        ("MHFE periodic mass conservation", Box::new(move || mhfe_mass_conservation(cases))),
        ("MHFE local 5x5 invertibility", Box::new(move || local_invertibility(cases))),
        ("roughness hand cases", Box::new(move || roughness_hand_cases(cases))),
        ("Hopf-Cole round trip", Box::new(move || hopf_cole_round_trip(cases))),
        ("smooth-forcing Hopf-Cole/KPZ consistency", Box::new(smooth_forcing_consistency)),
    ]
}
