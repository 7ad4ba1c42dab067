use fraclab::competition::{
    blow_up, frequency_trace, growth_rate_estimate, log_csv, select_r_beta, solve_beta_system,
    CompetitionState, SolveOptions, ENERGY_TOL,
};
use fraclab::geometry::{FractionalParams, HalfBallGrid, HemisphereGrid};
use fraclab::spectral::{first_eigenvalue_symmetric, sweep_k};

fn ball(nr: usize, nt: usize, np: usize) -> HalfBallGrid {
    let sp = HemisphereGrid::new(nt, np, FractionalParams::planar(0.5).unwrap()).unwrap();
    HalfBallGrid::new(sp, nr, 1e-3, 1.0).unwrap()
}

#[test]
fn pipeline_on_small_grid() {
    let grid = ball(24, 24, 48);
    let e = first_eigenvalue_symmetric(grid.sphere(), 2).unwrap();
    let st = solve_beta_system(&grid, 2, 1e3, &e, &SolveOptions::default()).unwrap();
    assert!(st.converged);
    assert!(2.0 * st.energy <= e.exponent_d * (1.0 + ENERGY_TOL));
    let tr = frequency_trace(&st, grid.r_nodes()).unwrap();
    assert!(tr.is_monotone(), "dip {}", tr.max_dip());
    assert!(tr.n_vals.iter().all(|n| *n < 1.0));
    assert!(tr.to_csv().starts_with("r,E,H,N\n"));
    let rb = select_r_beta(&st).unwrap();
    assert!(rb > 0.0 && rb < 1.0);
    let up = blow_up(&st, rb).unwrap();
    assert_eq!(up.beta, 1.0);
    let g = growth_rate_estimate(&up).unwrap();
    assert!((g.frequency_tail - 2.0 * st.energy).abs() < 1e-8 * st.energy);
    let d = sweep_k(grid.sphere(), 2).unwrap()[1].d;
    assert!(g.frequency_tail < d * (1.0 + ENERGY_TOL));
    assert!(log_csv(&st.log).starts_with("iter,I,interaction,delta\n0,"));
}

#[test]
fn stronger_coupling_raises_energy() {
    let grid = ball(16, 16, 32);
    let e = first_eigenvalue_symmetric(grid.sphere(), 1).unwrap();
    let lo = solve_beta_system(&grid, 1, 1e2, &e, &SolveOptions::default()).unwrap();
    let hi = solve_beta_system(&grid, 1, 1e4, &e, &SolveOptions::default()).unwrap();
    assert!(hi.energy >= lo.energy);
    assert!(hi.interaction() < lo.interaction());
}

#[test]
fn state_round_trip_preserves_diagnostics() {
    let grid = ball(12, 12, 24);
    let e = first_eigenvalue_symmetric(grid.sphere(), 1).unwrap();
    let st = solve_beta_system(&grid, 1, 50.0, &e, &SolveOptions::default()).unwrap();
    let dir = tempdir();
    st.save(&dir).unwrap();
    let back = CompetitionState::load(&dir).unwrap();
    assert_eq!(back.u, st.u);
    assert_eq!(back.energy, st.energy);
    std::fs::remove_dir_all(dir).unwrap();
}

fn tempdir() -> std::path::PathBuf {
    let p = std::env::temp_dir().join(format!("fraclab-it-{}", std::process::id()));
    std::fs::create_dir_all(&p).unwrap();
    p
}
