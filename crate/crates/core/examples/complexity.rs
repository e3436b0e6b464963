//! Wall time per outer iteration against the number of elements, compared with
//! the `N⁴ + N³ + N(γ + N + 3)` operation-count model.
//!
//! Runs single-threaded so the timings reflect operation counts.
//! Usage: `cargo run --release --example complexity -- [iterations]`

use std::time::Instant;

use conformal_ris::scenario::parse_scenario_with_overrides;
use conformal_ris::shape_opt::run_t3dris;

fn model(n: f64, gamma: f64) -> f64 {
    n.powi(4) + n.powi(3) + n * (gamma + n + 3.0)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let iterations: usize = std::env::args().nth(1).map_or(Ok(3), |a| a.parse())?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build()?;
    let mut rows = Vec::new();
    for n in [8usize, 16, 32, 64] {
        let scenario = parse_scenario_with_overrides(
            "",
            &[
                format!("scenario.n={n}"),
                format!("solver.i_max={iterations}"),
                "solver.epsilon=1e-300".into(),
            ],
        )?;
        let layout = scenario.initial_layout()?;
        let set = scenario.feasible_set(&layout);
        let started = Instant::now();
        let (_, _, trace) = pool.install(|| run_t3dris(&scenario, &layout, &set, &scenario.b_box, &scenario.solver))?;
        let total = started.elapsed().as_secs_f64();
        let per_iter: f64 = trace.records[1..].iter().map(|r| r.wall_time_s).sum::<f64>() / trace.iterations() as f64;
        println!("N = {n:3}: {:.4e} s per iteration ({total:.2} s total)", per_iter);
        rows.push((n as f64, per_iter));
    }
    let gamma = (1.0f64 / 1e-2).log2().ceil();
    let (n0, t0) = rows[0];
    let (n1, t1) = rows[rows.len() - 1];
    let measured = t1 / t0;
    let predicted = model(n1, gamma) / model(n0, gamma);
    println!("T({n1})/T({n0}) measured {measured:.1}, model {predicted:.1}, factor {:.2}", measured / predicted);
    Ok(())
}
