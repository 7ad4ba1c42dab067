use std::fmt::Write as _;
use std::path::Path;

use fraclab::competition::{
    blow_up, doubling_check, frequency_trace, growth_rate_estimate, pohozaev_residual, select_r_beta,
    solve_beta_system, CompetitionState, SolveOptions, ENERGY_TOL,
};
use fraclab::geometry::{
    folded_dirichlet_energy, random_field, weighted_dirichlet_energy, weighted_l2_inner, ArcSet,
    FractionalParams, HalfBallGrid, HemisphereGrid, ScalarField,
};
use fraclab::rearrange::{polarization_sequence, trace_csv};
use fraclab::spectral::{
    first_eigenvalue, first_eigenvalue_folded, first_eigenvalue_symmetric, summarize_sweep, sweep_k, EigenResult,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{Formulation, Omega, RunConfig};
use crate::output::{ball_meta, rel, sphere_meta, Run};
use crate::CliError;

const DISTANCE_TOL: f64 = 1e-8;
const ENERGY_SLACK: f64 = 1e-12;

fn sphere(cfg: &RunConfig) -> Result<HemisphereGrid, CliError> {
    let params = FractionalParams::planar(cfg.s)?;
    Ok(HemisphereGrid::new(cfg.n_theta, cfg.n_phi, params)?)
}

#[derive(Debug, Serialize)]
struct EigRow {
    omega: String,
    k: Option<usize>,
    formulation: &'static str,
    lambda: f64,
    d: f64,
    residual: f64,
}

pub fn eig(cfg: &RunConfig, omega: Omega, formulation: Formulation) -> Result<(), CliError> {
    let grid = sphere(cfg)?;
    let mut jobs: Vec<(String, Option<usize>, &'static str)> = Vec::new();
    match omega {
        Omega::K => {
            for &k in &cfg.k {
                if formulation != Formulation::Folded {
                    cfg.check_divisible(k)?;
                    jobs.push(("k".into(), Some(k), "symmetric"));
                }
                if formulation != Formulation::Symmetric {
                    jobs.push(("k".into(), Some(k), "folded"));
                }
            }
        }
        Omega::Empty => jobs.push(("empty".into(), None, "direct")),
        Omega::Half => jobs.push(("half".into(), None, "direct")),
        Omega::Full => jobs.push(("full".into(), None, "direct")),
    }
    let extra = json!({ "omega": omega, "formulation": formulation });
    let mut run = Run::new("eig", cfg, extra)?;
    let mut rows = Vec::new();
    let mut table = String::from("omega,k,formulation,lambda,d,residual\n");
    for (label, k, form) in jobs {
        let res: EigenResult = match (label.as_str(), k, form) {
            ("empty", ..) => first_eigenvalue(&grid, &ArcSet::empty())?,
            ("half", ..) => first_eigenvalue(&grid, &ArcSet::half())?,
            ("full", ..) => first_eigenvalue(&grid, &ArcSet::full())?,
            (_, Some(k), "symmetric") => first_eigenvalue_symmetric(&grid, k)?,
            (_, Some(k), _) => first_eigenvalue_folded(&grid, k)?,
            _ => unreachable!("jobs are built above"),
        };
        let ks = k.map(|k| k.to_string()).unwrap_or_default();
        let _ = writeln!(table, "{label},{ks},{form},{:e},{:e},{:e}", res.lambda, res.exponent_d, res.residual);
        let name = match k {
            Some(k) => format!("eigenfunction_{label}{k}_{form}.bin"),
            None => format!("eigenfunction_{label}.bin"),
        };
        run.bytes(&name, &res.eigenfunction.to_bytes())?;
        rows.push(EigRow {
            omega: label,
            k,
            formulation: form,
            lambda: res.lambda,
            d: res.exponent_d,
            residual: res.residual,
        });
    }
    run.csv("eig.csv", &sphere_meta(cfg), &table)?;
    run.json("eig.json", &json!({ "grid": grid.description(), "rows": rows }))?;
    for r in &rows {
        println!("{} k={} {}: lambda={:.6} d={:.6}", r.omega, r.k.map(|k| k.to_string()).unwrap_or("-".into()), r.formulation, r.lambda, r.d);
    }
    run.finish("ok")
}

pub fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let grid = sphere(cfg)?;
    let mut run = Run::new("sweep", cfg, json!({}))?;
    let rows = sweep_k(&grid, cfg.kmax)?;
    let summary = summarize_sweep(&rows, grid.params());
    let mut table = String::from("k,lambda,d,gap\n");
    for r in &rows {
        let _ = writeln!(table, "{},{:e},{:e},{:e}", r.k, r.lambda, r.d, 2.0 * cfg.s - r.d);
    }
    run.csv("sweep.csv", &sphere_meta(cfg), &table)?;
    run.json("sweep.json", &json!({ "rows": rows, "summary": summary, "ceiling": 2.0 * cfg.s }))?;
    for r in &rows {
        println!("k={} lambda={:.6} d={:.6}", r.k, r.lambda, r.d);
    }
    let ok = summary.lambda_monotone && summary.d_monotone && summary.below_ceiling && summary.gap_nonincreasing;
    if !ok {
        run.finish("property_violation")?;
        return Err(CliError::property(format!("sweep summary failed: {summary:?}")));
    }
    run.finish("ok")
}

#[derive(Debug, Serialize)]
struct Bundle {
    k: usize,
    beta: f64,
    d: f64,
    energy: f64,
    two_i: f64,
    energy_bound_ok: bool,
    converged: bool,
    outer_iterations: usize,
    interaction: f64,
    interior_min: f64,
    n_monotone: bool,
    n_max_dip: f64,
    doubling: Vec<fraclab::competition::DoublingReport>,
    doubling_ok: bool,
    pohozaev_half: Option<f64>,
    r_beta: Option<f64>,
    growth_frequency_tail: Option<f64>,
    growth_log_slope: Option<f64>,
    growth_relative_gap: Option<f64>,
    notes: Vec<String>,
}

fn log_ladder(lo: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut r2 = 1.0;
    while r2 / 2.0 >= lo {
        out.push((r2 / 2.0, r2));
        r2 /= 2.0;
    }
    out
}

fn diagnose(st: &CompetitionState, d: f64, radii: &[f64], run: &mut Run, sub: &str, meta: &str) -> Result<Bundle, CliError> {
    let mut notes = Vec::new();
    let trace = frequency_trace(st, radii).map_err(|e| CliError::from(e).context("frequency trace"))?;
    run.csv(&format!("{sub}/frequency.csv"), meta, &trace.to_csv())?;
    let mut doubling = Vec::new();
    for (r1, r2) in log_ladder(st.grid.r_nodes()[0]) {
        doubling.push(doubling_check(st, r1, r2, d, ENERGY_TOL).map_err(|e| CliError::from(e).context("doubling"))?);
    }
    let pohozaev_half = pohozaev_residual(st, 0.5).ok();
    let (mut r_beta, mut tail, mut slope) = (None, None, None);
    match select_r_beta(st) {
        Ok(rb) => {
            r_beta = Some(rb);
            let up = blow_up(st, rb).map_err(|e| CliError::from(e).context("blow-up"))?;
            match growth_rate_estimate(&up) {
                Ok(g) => {
                    tail = Some(g.frequency_tail);
                    slope = Some(g.log_slope);
                }
                Err(e) => notes.push(format!("growth rate: {e}")),
            }
        }
        Err(e) => notes.push(format!("r_beta: {e}")),
    }
    Ok(Bundle {
        k: st.k,
        beta: st.beta,
        d,
        energy: st.energy,
        two_i: 2.0 * st.energy,
        energy_bound_ok: 2.0 * st.energy <= d * (1.0 + ENERGY_TOL),
        converged: st.converged,
        outer_iterations: st.log.len().saturating_sub(1),
        interaction: st.interaction(),
        interior_min: st.interior_min(),
        n_monotone: trace.is_monotone(),
        n_max_dip: trace.max_dip(),
        doubling_ok: doubling.iter().all(|r| r.holds),
        doubling,
        pohozaev_half,
        r_beta,
        growth_frequency_tail: tail,
        growth_log_slope: slope,
        growth_relative_gap: tail.map(|t| (t - d).abs() / d),
        notes,
    })
}

pub fn compete(cfg: &RunConfig) -> Result<(), CliError> {
    let sp = sphere(cfg)?;
    let grid = HalfBallGrid::new(sp, cfg.n_r, cfg.r_min, 1.0)?;
    let radii: Vec<f64> = if cfg.radii.is_empty() {
        grid.r_nodes().to_vec()
    } else {
        cfg.radii.clone()
    };
    for &k in &cfg.k {
        cfg.check_divisible(k)?;
    }
    let mut run = Run::new("compete", cfg, json!({}))?;
    let meta = ball_meta(cfg);
    let mut bundles = Vec::new();
    let mut table = String::from("k,beta,d,two_i,interaction,converged,n_monotone,r_beta,growth\n");
    for &k in &cfg.k {
        let eigen = first_eigenvalue_symmetric(grid.sphere(), k)?;
        for &beta in &cfg.beta {
            let sub = format!("k{k}_beta{beta:e}");
            let st = solve_beta_system(&grid, k, beta, &eigen, &SolveOptions::default())
                .map_err(|e| CliError::from(e).context(&format!("solve k={k} beta={beta:e}")))?;
            let dir = run.dir.join(&sub);
            st.save(&dir)?;
            for f in ["manifest.json", "u.bin", "v.bin", "log.csv"] {
                run.record(format!("{}/{f}", rel(&dir, &run.dir)));
            }
            let b = diagnose(&st, eigen.exponent_d, &radii, &mut run, &sub, &meta)?;
            run.json(&format!("{sub}/bundle.json"), &b)?;
            let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
            let _ = writeln!(
                table,
                "{k},{beta:e},{:e},{:e},{:e},{},{},{},{}",
                b.d, b.two_i, b.interaction, b.converged, b.n_monotone, opt(b.r_beta), opt(b.growth_frequency_tail)
            );
            println!(
                "k={k} beta={beta:e}: 2I={:.6} d={:.6} converged={} N monotone={} growth={}",
                b.two_i, b.d, b.converged, b.n_monotone, opt(b.growth_frequency_tail)
            );
            bundles.push(b);
        }
    }
    run.csv("summary.csv", &meta, &table)?;
    run.json("summary.json", &bundles)?;
    if let Some(b) = bundles.iter().find(|b| !b.converged) {
        run.finish("no_convergence")?;
        return Err(CliError::no_convergence(format!("solve k={} beta={:e} hit the iteration cap", b.k, b.beta)));
    }
    if let Some(b) = bundles.iter().find(|b| !b.n_monotone || !b.doubling_ok || !b.energy_bound_ok) {
        run.finish("property_violation")?;
        return Err(CliError::property(format!(
            "k={} beta={:e}: monotone N {}, doubling {}, 2I <= d(1+tol) {}",
            b.k, b.beta, b.n_monotone, b.doubling_ok, b.energy_bound_ok
        )));
    }
    run.finish("ok")
}

#[derive(Debug, Serialize)]
struct SymReport {
    source: String,
    energy_before: f64,
    energy_after: f64,
    folded_energy: Vec<(usize, f64, f64)>,
    l2_before: f64,
    l2_after: f64,
    energy_nonincreasing: bool,
    polarization_steps: usize,
    final_distance: f64,
    converged: bool,
}

pub fn symmetrize(cfg: &RunConfig, input: Option<&Path>, max_steps: Option<usize>) -> Result<(), CliError> {
    let grid = sphere(cfg)?;
    let (field, source) = match input {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::validation(format!("{}: {e}", p.display())))?;
            let f = ScalarField::from_csv(&grid, &text).map_err(|e| CliError::from(e).context(&p.display().to_string()))?;
            (f, p.display().to_string())
        }
        None => (random_field(&grid, cfg.seed), format!("random seed {}", cfg.seed)),
    };
    let steps = max_steps.unwrap_or(10 * cfg.n_phi);
    let extra = json!({ "input": input.map(|p| p.display().to_string()), "max_steps": steps });
    let mut run = Run::new("symmetrize", cfg, extra)?;
    let meta = sphere_meta(cfg);
    let sym = polarization_sequence(&field, &grid, steps, DISTANCE_TOL)?;
    let target = fraclab::rearrange::foliated_schwarz(&field, &grid)?;
    let e0 = weighted_dirichlet_energy(&field, &grid)?;
    let e1 = weighted_dirichlet_energy(&target, &grid)?;
    let mut folded = Vec::new();
    for &k in &cfg.k {
        folded.push((k, folded_dirichlet_energy(&field, &grid, k)?, folded_dirichlet_energy(&target, &grid, k)?));
    }
    let ok = e1 <= e0 * (1.0 + ENERGY_SLACK) && folded.iter().all(|(_, a, b)| *b <= a * (1.0 + ENERGY_SLACK));
    let report = SymReport {
        source,
        energy_before: e0,
        energy_after: e1,
        folded_energy: folded,
        l2_before: weighted_l2_inner(&field, &field, &grid)?,
        l2_after: weighted_l2_inner(&target, &target, &grid)?,
        energy_nonincreasing: ok,
        polarization_steps: sym.trace.len() - 1,
        final_distance: sym.trace.last().map(|t| t.distance).unwrap_or(0.0),
        converged: sym.converged,
    };
    if input.is_none() {
        run.csv("input.csv", &meta, &field.to_csv())?;
    }
    run.csv("symmetrized.csv", &meta, &target.to_csv())?;
    run.csv("trace.csv", &meta, &trace_csv(&sym.trace))?;
    run.json("report.json", &report)?;
    println!(
        "energy {:.6e} -> {:.6e}; {} polarization steps, distance {:.3e}",
        e0, e1, report.polarization_steps, report.final_distance
    );
    if !ok {
        run.finish("property_violation")?;
        return Err(CliError::property(format!("energy increased: {e0:e} -> {e1:e}")));
    }
    if !sym.converged {
        run.finish("no_convergence")?;
        return Err(CliError::no_convergence(format!(
            "polarization sequence stopped at distance {:e} after {} steps",
            report.final_distance, report.polarization_steps
        )));
    }
    run.finish("ok")
}
