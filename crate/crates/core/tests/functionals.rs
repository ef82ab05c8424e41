use blowlab_core::eigenfn::{phi, sphere_area};
use blowlab_core::functionals::*;
use blowlab_core::multiplier::DampingProfile;
use blowlab_core::pdesolver::*;
use blowlab_core::quad::gauss_kronrod;
use proptest::prelude::*;

fn standard(eps: f64) -> SystemConfig {
    let b = DampingProfile::power_tail(1.0, 2.0).unwrap();
    SystemConfig::new(1, 3.0, 3.0, eps).with_damping(b.clone(), b)
}

fn run(cfg: &SystemConfig, grid: &GridSpec, horizon: f64) -> (SolveResult, FunctionalTrace) {
    let mesh = build_mesh(cfg, grid, horizon).unwrap();
    let mut rec = FunctionalRecorder::new(cfg, &mesh).unwrap();
    let res = solve_observed(cfg, grid, horizon, &SolveOptions::default(), |_, s, _| rec.observe(s)).unwrap();
    (res, rec.finish().unwrap())
}

/// `∫ bump(|x|) Φ(x) dx` by adaptive quadrature in the radial variable.
fn bump_phi_integral(n: u32) -> f64 {
    let bump = |r: f64| bump_shape(r, 1.0);
    if n == 1 {
        2.0 * gauss_kronrod(|r| bump(r) * phi(1, r), 0.0, 1.0, 1e-14, 0.0).value
    } else {
        sphere_area(n - 1) * gauss_kronrod(|r| bump(r) * phi(n, r) * r.powi(n as i32 - 1), 0.0, 1.0, 1e-14, 0.0).value
    }
}

#[test]
fn zero_solution_has_zero_functionals() {
    let mut cfg = SystemConfig::new(1, 3.0, 3.0, 0.1);
    cfg.data = InitialData { u0: DataProfile::Zero, u1: DataProfile::Zero, v0: DataProfile::Zero, v1: DataProfile::Zero };
    let (_, trace) = run(&cfg, &GridSpec::new(0.05, 1.0), 2.0);
    assert!(trace.u1.iter().chain(&trace.v1).chain(&trace.f).chain(&trace.g).all(|x| *x == 0.0));
}

#[test]
fn initial_u1_matches_direct_quadrature() {
    for (n, h) in [(1u32, 0.01), (2, 0.001), (3, 0.002), (4, 0.002)] {
        let cfg = SystemConfig::new(n, 2.0, 2.0, 0.3);
        let mesh = build_mesh(&cfg, &GridSpec::new(h, 0.5 * cfl_limit(n)), 1.0).unwrap();
        let state = Stepper::new(&cfg, &mesh).initial_state();
        let s = SampleContext::new(&cfg, &mesh).unwrap().sample_state(&state).unwrap();
        let exact = 0.3 * bump_phi_integral(n);
        assert!((s.u1 / exact - 1.0).abs() < 1e-6, "n={n}: {} vs {exact}", s.u1);
        assert!(s.u1_error < 1e-5 * exact);
    }
}

fn free_wave_u1_error(h: f64) -> f64 {
    let mut cfg = SystemConfig::new(1, 3.0, 3.0, 0.5);
    cfg.source = SourceMode::Off;
    cfg.data.u1 = DataProfile::Zero;
    // CFL < 1 leaks tiny values ahead of the cone; keep them off the boundary
    let (_, trace) = run(&cfg, &GridSpec { h, cfl: 0.5, extent: Some(8.0) }, 2.0);
    // u = (u0(x-t) + u0(x+t))/2 gives U1(t) = ε cosh(t) e^{-t} ∫ u0 Φ
    let i0 = bump_phi_integral(1);
    trace
        .times
        .iter()
        .zip(&trace.u1)
        .map(|(t, u)| (u - 0.5 * t.cosh() * (-t).exp() * i0).abs())
        .fold(0.0, f64::max)
}

#[test]
fn free_wave_u1_second_order() {
    let (e1, e2) = (free_wave_u1_error(0.04), free_wave_u1_error(0.02));
    assert!(e2 < 1e-4, "{e2}");
    assert!(e1 / e2 > 3.0, "{e1} {e2}");
}

#[test]
fn nonlinearity_off_keeps_frame_constant() {
    let mut cfg = standard(0.2);
    cfg.source = SourceMode::Off;
    let (_, trace) = run(&cfg, &GridSpec::new(0.02, 1.0), 5.0);
    let m0 = DampingProfile::power_tail(1.0, 2.0).unwrap().m(0.0).unwrap();
    let f0 = 0.5 * 0.2 * m0 * bump_phi_integral(1);
    assert!((trace.f0 / f0 - 1.0).abs() < 1e-8);
    assert!(trace.f.iter().all(|f| *f == trace.f0) && trace.g.iter().all(|g| *g == trace.g0));
    let frame = audit_frame(&trace, &cfg, None).unwrap();
    assert_eq!(frame.status, FrameStatus::Vacuous);
    assert_eq!(frame.c_f, 0.0);
}

#[test]
fn constant_surrogate_frame_closed_form() {
    let eps = 0.1;
    let mut cfg = SystemConfig::new(2, 2.0, 2.0, eps);
    let (zero, one) = (DataProfile::Constant { amplitude: 0.0 }, DataProfile::Constant { amplitude: 1.0 });
    cfg.data = InitialData { u0: zero, u1: one, v0: zero, v1: one };
    let (res, trace) = run(&cfg, &GridSpec { h: 0.05, cfl: 0.5, extent: Some(1.0) }, 5.0);
    let phi_mass = res.mesh.trapezoid_with(|i| res.mesh.phi[i]);
    // u_t = v_t = y = ε/(1 - εt), so F = ½ ∫Φ (ε + ∫_0^t y² e^{-s} ds)
    let y = |s: f64| eps / (1.0 - eps * s);
    for k in (0..trace.len()).step_by(20) {
        let t = trace.times[k];
        let exact = 0.5 * phi_mass * (eps + gauss_kronrod(|s| y(s) * y(s) * (-s).exp(), 0.0, t, 1e-13, 0.0).value);
        assert!((trace.f[k] / exact - 1.0).abs() < 1e-4, "t={t}: {} vs {exact}", trace.f[k]);
    }
}

#[test]
fn zero_u0_bound_is_trivial() {
    let mut cfg = standard(0.25);
    cfg.data.u0 = DataProfile::Zero;
    let (res, trace) = run(&cfg, &GridSpec::new(0.02, 1.0), 60.0);
    assert_eq!(trace.u1_bound, 0.0);
    let rep = audit_lower_bounds(&trace, &cfg, Some(0.9 * res.outcome.t_blowup.unwrap()), DEFAULT_DELTA);
    let b = rep.bound("u1_lower_bound").unwrap();
    assert!(b.pass && b.margins[1..].iter().all(|m| m.is_infinite() && *m > 0.0));
}

#[test]
fn standard_run_audit_and_refinement_stability() {
    let cfg = standard(0.25);
    let mut reports = Vec::new();
    let mut frames = Vec::new();
    for h in [0.02, 0.01] {
        let (res, trace) = run(&cfg, &GridSpec::new(h, 1.0), 60.0);
        let until = 0.9 * res.outcome.t_blowup.unwrap();
        assert!(trace.cadence_ok(until), "{}", trace.cadence_error(until));
        let rep = audit_lower_bounds(&trace, &cfg, Some(until), DEFAULT_DELTA);
        assert!(rep.pass, "{:?}", rep.failures());
        assert!(rep.hypothesis_violations.is_empty());
        let frame = audit_frame(&trace, &cfg, Some(until)).unwrap();
        assert_eq!(frame.status, FrameStatus::Pass);
        reports.push(rep);
        frames.push(frame);
    }
    assert!(frame_stability(&frames[0], &frames[1]) < 0.2);
    for (a, b) in reports[0].bounds.iter().zip(&reports[1].bounds) {
        if a.tolerance == DEFAULT_DELTA && a.min_margin.is_finite() {
            assert!((a.min_margin - b.min_margin).abs() < 0.02, "{}: {} vs {}", a.name, a.min_margin, b.min_margin);
        }
    }
}

#[test]
fn sign_flipped_u1_fails_audit() {
    let mut cfg = standard(0.25);
    cfg.data.u1 = DataProfile::bump(-1.0);
    let (res, trace) = run(&cfg, &GridSpec::new(0.02, 1.0), 60.0);
    let until = 0.9 * res.outcome.t_blowup.unwrap_or(60.0);
    let rep = audit_lower_bounds(&trace, &cfg, Some(until), DEFAULT_DELTA);
    assert!(!rep.pass);
    assert!(rep.failures().contains(&"u1_lower_bound"));
    assert!(!rep.hypothesis_violations.is_empty());
}

#[test]
fn support_leaving_grid_is_rejected() {
    let cfg = standard(0.2);
    let grid = GridSpec::new(0.05, 1.0);
    let res = solve(&cfg, &grid, 1.0, &SolveOptions::default()).unwrap();
    let mut snap = res.snapshots.last().unwrap().clone();
    let k = snap.u.len() - 1;
    snap.u[k] = 1.0;
    assert!(matches!(
        compute_fg(&cfg, &res.mesh, &[snap]),
        Err(FunctionalError::SupportExitsGrid { .. })
    ));
}

#[test]
fn snapshot_and_observer_traces_agree() {
    let cfg = standard(0.3);
    let grid = GridSpec::new(0.04, 1.0);
    let opts = SolveOptions { snapshot_dt: Some(0.04), ..SolveOptions::default() };
    let res = solve(&cfg, &grid, 3.0, &opts).unwrap();
    let from_snaps = compute_fg(&cfg, &res.mesh, &res.snapshots).unwrap();
    let (_, observed) = run(&cfg, &grid, 3.0);
    assert_eq!(from_snaps.len(), observed.len());
    let last = from_snaps.len() - 1;
    assert!((from_snaps.f[last] - observed.f[last]).abs() < 1e-12 * observed.f[last]);
    let uv = compute_u1v1(&cfg, &res.mesh, &res.snapshots).unwrap();
    assert_eq!(uv.u1, from_snaps.u1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn discrete_holder_holds(n in 1u32..4, vals in prop::collection::vec(-5.0f64..5.0, 40), p in 1.01f64..6.0, t in 0.0f64..3.0) {
        let cfg = SystemConfig::new(n, p, p, 1.0);
        let mesh = Mesh::new(n, 0.1, 8.0);
        let ctx = SampleContext::new(&cfg, &mesh).unwrap();
        let z: Vec<f64> =
            (0..mesh.len()).map(|i| if mesh.radius[i] < 4.0 { vals[i % vals.len()] } else { 0.0 }).collect();
        let s = ctx.sample(t, &z, &z, &z, &z).unwrap();
        prop_assert!(s.holder_u.margin() >= 1.0 - ROUNDING_TOLERANCE);
        prop_assert!(s.holder_v.margin() >= 1.0 - ROUNDING_TOLERANCE);
    }

    #[test]
    fn frame_traces_nondecreasing(a in prop::array::uniform4(0.0f64..2.0), eps in 0.05f64..0.5, p in 1.2f64..4.0, q in 1.2f64..4.0) {
        let mut cfg = SystemConfig::new(1, p, q, eps);
        cfg.data = InitialData {
            u0: DataProfile::bump(a[0]),
            u1: DataProfile::bump(a[1]),
            v0: DataProfile::bump(a[2]),
            v1: DataProfile::bump(a[3]),
        };
        let (_, trace) = run(&cfg, &GridSpec::new(0.05, 1.0), 1.5);
        prop_assert!(trace.f.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(trace.g.windows(2).all(|w| w[1] >= w[0]));
    }
}
