use reflectspde_core::models::registry::{allen_cahn, NoiseParams};
use reflectspde_core::penalize::{simulate_path, Method, SchemeConfig};
use reflectspde_core::{SpaceSpec, SpectralField};

fn cfg(n: f64, method: Method, seed: u64) -> SchemeConfig {
    SchemeConfig { dt: 1e-2, steps: 100, n, method, seed }
}

fn noisy() -> NoiseParams {
    NoiseParams { q0: 0.5, ..NoiseParams::default() }
}

#[test]
fn projection_lands_in_ball_and_is_idempotent() {
    let space = SpaceSpec::euclidean(5).unwrap();
    let out = SpectralField::from_vec(vec![3.0, -1.0, 0.5, 2.0, 0.0]);
    let p = space.project_ball(&out).unwrap();
    assert!((space.norm_h(&p).unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(space.project_ball(&p).unwrap(), p);
    let inside = SpectralField::from_vec(vec![0.1, 0.2, 0.0, -0.3, 0.4]);
    assert_eq!(space.project_ball(&inside).unwrap(), inside);
    let (gap, _) = space.penalty_gap(&inside).unwrap();
    assert!(gap.coeffs().iter().all(|&g| g == 0.0));
}

#[test]
fn paths_are_a_pure_function_of_seed_and_index() {
    let model = allen_cahn(8, &noisy()).unwrap();
    let x0 = model.initial_state(1.0);
    let a = simulate_path(&model, &cfg(4.0, Method::Explicit, 3), &x0, 5).unwrap();
    let b = simulate_path(&model, &cfg(4.0, Method::Explicit, 3), &x0, 5).unwrap();
    assert_eq!(a, b);
    let c = simulate_path(&model, &cfg(4.0, Method::Explicit, 3), &x0, 6).unwrap();
    let d = simulate_path(&model, &cfg(4.0, Method::Explicit, 4), &x0, 5).unwrap();
    assert_ne!(a.terminal(), c.terminal());
    assert_ne!(a.terminal(), d.terminal());
}

#[test]
fn increments_telescope_to_terminal_state() {
    let model = allen_cahn(8, &noisy()).unwrap();
    let x0 = model.initial_state(1.0);
    for method in [Method::Explicit, Method::Splitting] {
        let rec = simulate_path(&model, &cfg(16.0, method, 1), &x0, 0).unwrap();
        let mut sum = x0.add(&rec.free_sum);
        sum.axpy(1.0, &rec.l_total());
        let err = rec.terminal().sub(&sum);
        assert!(err.coeffs().iter().all(|e| e.abs() < 1e-12), "{method:?}");
    }
}

#[test]
fn zero_level_never_reflects() {
    let model = allen_cahn(8, &noisy()).unwrap();
    let rec = simulate_path(&model, &cfg(0.0, Method::Explicit, 2), &model.initial_state(1.0), 0).unwrap();
    assert!(rec.l_increments.iter().all(|d| d.coeffs().iter().all(|&x| x == 0.0)));
}

#[test]
fn strong_splitting_penalty_keeps_paths_near_ball() {
    let model = allen_cahn(8, &noisy()).unwrap();
    let x0 = model.initial_state(1.0);
    let space = model.space();
    let weak = simulate_path(&model, &cfg(1.0, Method::Splitting, 9), &x0, 0).unwrap();
    let strong = simulate_path(&model, &cfg(1e4, Method::Splitting, 9), &x0, 0).unwrap();
    let excess = |r: &reflectspde_core::PathRecord| {
        r.states.iter().map(|s| space.norm_h(s).unwrap() - 1.0).fold(0.0, f64::max)
    };
    assert!(excess(&strong) < excess(&weak));
    assert!(excess(&strong) < 1e-2);
}

#[test]
fn explicit_rejects_unstable_levels() {
    let model = allen_cahn(4, &noisy()).unwrap();
    let bad = SchemeConfig { n: 200.0, ..cfg(0.0, Method::Explicit, 1) };
    assert!(simulate_path(&model, &bad, &model.initial_state(1.0), 0).is_err());
}
