use std::f64::consts::PI;

use super::*;
use crate::geometry::FractionalParams;
use crate::spectral::first_eigenvalue_symmetric;

fn ball(s: f64, nr: usize, nt: usize, np: usize, r_min: f64, r_max: f64) -> HalfBallGrid {
    let sp = HemisphereGrid::new(nt, np, FractionalParams::planar(s).unwrap()).unwrap();
    HalfBallGrid::new(sp, nr, r_min, r_max).unwrap()
}

fn eigen_state(grid: &HalfBallGrid, k: usize) -> (CompetitionState, f64) {
    let e = first_eigenvalue_symmetric(grid.sphere(), k).unwrap();
    let (g, h) = boundary_pair(grid.sphere(), &e.eigenfunction).unwrap();
    let u = homogeneous_extension(&g, e.exponent_d, grid).unwrap();
    let v = homogeneous_extension(&h, e.exponent_d, grid).unwrap();
    (CompetitionState::from_fields(grid.clone(), u, v, 1.0, k).unwrap(), e.exponent_d)
}

#[test]
fn extension_of_y_power() {
    let grid = ball(0.5, 6, 8, 16, 0.1, 1.0);
    let s = 0.5;
    let g = ScalarField::from_fn(grid.sphere(), |t, _| t.sin().powf(2.0 * s));
    let f = homogeneous_extension(&g, 2.0 * s, &grid).unwrap();
    let len = grid.shell_len();
    for (i, r) in grid.r_nodes().iter().enumerate() {
        for (q, gq) in g.values().iter().enumerate() {
            assert!((f.values()[i * len + q] - r.powf(2.0 * s) * gq).abs() < 1e-15);
        }
    }
    assert_eq!(&f.values()[5 * len..], g.values());
    assert!(homogeneous_extension(&g, -0.1, &grid).is_err());
}

#[test]
fn eigen_extension_has_constant_frequency() {
    let grid = ball(0.5, 24, 32, 64, 0.05, 1.0);
    let (st, d) = eigen_state(&grid, 1);
    let tr = frequency_trace(&st, grid.r_nodes()).unwrap();
    for n in &tr.n_vals {
        assert!((n - d).abs() < 5e-3 * d, "{n} vs {d}");
        assert!((n - tr.n_vals[0]).abs() < 1e-10);
    }
    let gr = growth_rate_estimate(&st).unwrap();
    assert!((gr.log_slope - d).abs() < 1e-10);
}

#[test]
fn h_of_unit_field() {
    let grid = ball(0.5, 5, 32, 64, 0.1, 1.0);
    let one = ScalarField::new(grid.grid_ref(), vec![1.0; grid.len()]).unwrap();
    let zero = ScalarField::new(grid.grid_ref(), vec![0.0; grid.len()]).unwrap();
    let st = CompetitionState::from_fields(grid.clone(), one, zero.clone(), 1.0, 1).unwrap();
    let p = Profile::new(&st);
    let a = st.params().a();
    assert!((p.h(1.0).unwrap() - 2.0 * PI / (a + 1.0)).abs() < 1e-12);
    assert!(p.n(0.5).unwrap().abs() < 1e-14);
    let z = CompetitionState::from_fields(grid, zero.clone(), zero, 1.0, 1).unwrap();
    assert!(matches!(frequency_trace(&z, &[0.5]), Err(Error::Degenerate { .. })));
    assert_eq!(pohozaev_residual(&z, 0.5).unwrap(), 0.0);
    assert_eq!(z.energy, 0.0);
}

#[test]
fn r_beta_matches_closed_form() {
    let grid = ball(0.5, 30, 16, 32, 1e-3, 1.0);
    let (mut st, d) = eigen_state(&grid, 1);
    let h1 = Profile::new(&st).h(1.0).unwrap();
    let s = 0.5;
    let mut last = f64::INFINITY;
    for beta in [10.0, 1e2, 1e3, 1e4] {
        st.beta = beta;
        let r = select_r_beta(&st).unwrap();
        let exact = (beta * h1).powf(-1.0 / (2.0 * s + 2.0 * d));
        assert!((r - exact).abs() < 1e-10 * exact, "{r} {exact}");
        assert!(r < last);
        last = r;
    }
    st.beta = 1.0 / h1;
    assert!((select_r_beta(&st).unwrap() - 1.0).abs() < 1e-12);
    st.beta = 0.5 / h1;
    assert!(select_r_beta(&st).is_err());
}

#[test]
fn blow_up_scalings() {
    let grid = ball(0.5, 20, 16, 32, 1e-3, 1.0);
    let (mut st, _) = eigen_state(&grid, 1);
    let id = blow_up(&st, 1.0).unwrap();
    assert_eq!(id.u, st.u);
    assert_eq!(id.grid, st.grid);
    st.beta = 1e3;
    let (r1, r2) = (0.3, 0.2);
    let twice = blow_up(&blow_up(&st, r1).unwrap(), r2).unwrap();
    let once = blow_up(&st, r1 * r2).unwrap();
    for (x, y) in twice.u.values().iter().zip(once.u.values()) {
        assert!((x - y).abs() <= 1e-10 * y.abs().max(1e-300));
    }
    for (x, y) in twice.grid.r_nodes().iter().zip(once.grid.r_nodes()) {
        assert!((x - y).abs() < 1e-12 * y);
    }
    let rb = select_r_beta(&st).unwrap();
    let up = blow_up(&st, rb).unwrap();
    assert!((Profile::new(&up).h(1.0).unwrap() - 1.0).abs() < 1e-8);
    assert!(blow_up(&st, 0.0).is_err() && blow_up(&st, 1.5).is_err());
}

#[test]
fn blow_down_of_homogeneous_pair() {
    let grid = ball(0.5, 40, 16, 32, 1e-2, 10.0);
    let (st, d) = eigen_state(&grid, 2);
    let a = st.params().a();
    for r in [1.0, 2.0, 10.0] {
        let b = blow_down(&st, r).unwrap();
        assert!(b.homogeneity_deviation < 1e-10, "{}", b.homogeneity_deviation);
        assert!((b.d_hat - d).abs() < 1e-10);
        assert!((Profile::new(&b.rescaled).h(1.0).unwrap() - 1.0).abs() < 1e-8);
        assert_eq!(b.kappa, b.normalizer_l * b.normalizer_l * r.powf(1.0 - a));
    }
    assert!(blow_down(&st, 0.5).is_err() && blow_down(&st, 11.0).is_err());
}

#[test]
fn doubling_for_homogeneous_pair() {
    let grid = ball(0.5, 20, 16, 32, 1e-2, 1.0);
    let (st, d) = eigen_state(&grid, 1);
    let n = Profile::new(&st).n(1.0).unwrap();
    let same = doubling_check(&st, 0.3, 0.3, n, 0.0).unwrap();
    assert!((same.lhs - 1.0).abs() < 1e-14 && same.holds);
    let r = doubling_check(&st, 0.05, 0.8, n, 0.0).unwrap();
    assert!((r.lhs - 16f64.powf(2.0 * d)).abs() < 1e-9 * r.lhs && r.holds);
    assert!(matches!(
        doubling_check(&st, 0.1, 0.2, 0.5 * n, 0.0),
        Err(Error::Precondition(_))
    ));
}

/// Directional derivative of I in u at node set `nodes`, by central
/// differences, relative to the size of the terms involved.
fn stationarity(st: &CompetitionState, nodes: &[usize]) -> f64 {
    let eps = 1e-6;
    let shift = |sgn: f64| {
        let mut u = st.u.values().to_vec();
        for &p in nodes {
            u[p] += sgn * eps;
        }
        let u = ScalarField::new(st.grid.grid_ref(), u).unwrap();
        energy_i(&st.grid, &u, &st.v, st.beta).unwrap()
    };
    let unit = {
        let mut u = vec![0.0; st.grid.len()];
        for &p in nodes {
            u[p] = 1.0;
        }
        gradient_energy(&st.grid, &u)
    };
    (shift(1.0) - shift(-1.0)) / (2.0 * eps) / unit.sqrt() / st.u.values().iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

#[test]
fn solution_is_stationary() {
    let grid = ball(0.5, 12, 12, 24, 1e-2, 1.0);
    for k in [1, 2, 3] {
        let e = first_eigenvalue_symmetric(grid.sphere(), k).unwrap();
        let opts = SolveOptions {
            rel_tol: 1e-15,
            ..SolveOptions::default()
        };
        let st = solve_beta_system(&grid, k, 300.0, &e, &opts).unwrap();
        assert!(st.converged);
        let np = grid.sphere().n_phi();
        let nt = grid.sphere().n_theta();
        let idx = |i, j, l| grid.index(i, j, l);
        for (i, j, l) in [(0, 0, 3), (4, 0, 7), (5, 3, 11), (10, 0, 1), (10, 6, 20), (7, 1, 0)] {
            let d = stationarity(&st, &[idx(i, j, l)]);
            assert!(d.abs() < 1e-6, "k={k} node ({i},{j},{l}): {d}");
        }
        let pole: Vec<usize> = (0..np).map(|l| idx(6, nt - 1, l)).collect();
        assert!(stationarity(&st, &pole).abs() < 1e-6);
    }
}

#[test]
fn solve_respects_bounds_and_data() {
    let grid = ball(0.5, 16, 16, 32, 1e-2, 1.0);
    let e = first_eigenvalue_symmetric(grid.sphere(), 1).unwrap();
    let st = solve_beta_system(&grid, 1, 1e3, &e, &SolveOptions::default()).unwrap();
    assert!(st.converged);
    assert!(2.0 * st.energy <= e.exponent_d * (1.0 + ENERGY_TOL));
    assert!(st.interior_min() > 0.0);
    assert!(st.log.windows(2).all(|w| w[1].energy <= w[0].energy));
    let last = st.log.last().unwrap();
    assert!((last.energy - st.energy).abs() < 1e-10 * st.energy);
    let len = grid.shell_len();
    let tail = &st.u.values()[(grid.n_r() - 1) * len..];
    assert_eq!(tail, st.boundary_u.values());
    assert_eq!(&st.v.values()[(grid.n_r() - 1) * len..], st.boundary_v.values());
    let np = grid.sphere().n_phi();
    for (p, x) in st.v.values().iter().enumerate() {
        let (row, l) = (p / np, p % np);
        assert_eq!(*x, st.u.values()[row * np + (np - l) % np]);
    }
}

#[test]
fn zero_coupling_decouples() {
    let grid = ball(0.5, 14, 12, 24, 1e-2, 1.0);
    let e = first_eigenvalue_symmetric(grid.sphere(), 2).unwrap();
    let st = solve_beta_system(&grid, 2, 0.0, &e, &SolveOptions::default()).unwrap();
    let gu = gradient_energy(&grid, st.u.values());
    let gv = gradient_energy(&grid, st.v.values());
    assert!((st.energy - 0.5 * (gu + gv)).abs() < 1e-12 * st.energy);
    assert!(2.0 * st.energy <= e.exponent_d * (1.0 + ENERGY_TOL));
    assert!(solve_beta_system(&grid, 5, 1.0, &e, &SolveOptions::default()).is_err());
    assert!(solve_beta_system(&grid, 2, -1.0, &e, &SolveOptions::default()).is_err());
}

#[test]
fn save_and_load_round_trip() {
    let grid = ball(0.5, 6, 8, 16, 0.1, 1.0);
    let (st, _) = eigen_state(&grid, 1);
    let dir = std::env::temp_dir().join(format!("fraclab-state-{}", std::process::id()));
    st.save(&dir).unwrap();
    let back = CompetitionState::load(&dir).unwrap();
    assert_eq!(back.u, st.u);
    assert_eq!(back.v, st.v);
    assert_eq!(back.manifest(), st.manifest());
    std::fs::remove_dir_all(&dir).unwrap();
}
