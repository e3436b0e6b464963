//! How the optimizer changes the inter-element spacing: histograms of λ/d
//! before and after a run.
//!
//! Usage: `cargo run --release --example spacing -- [shape] [n]`

use conformal_ris::analysis::{spacing_distribution, SpacingHistogram};
use conformal_ris::scenario::parse_scenario_with_overrides;
use conformal_ris::shape_opt::run_t3dris;

fn show(label: &str, h: &SpacingHistogram) {
    println!("{label}: {} pairs up to the percentile, threshold lambda/d = {:.3}", h.values.len(), h.threshold);
    let peak = h.counts.iter().copied().max().unwrap_or(1).max(1);
    for (i, c) in h.counts.iter().enumerate() {
        println!("  [{:>7.3}, {:>7.3}) {:>5} {}", h.edges[i], h.edges[i + 1], c, "*".repeat(40 * c / peak));
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let shape = args.next().unwrap_or_else(|| "upa".into());
    let n = args.next().unwrap_or_else(|| "16".into());
    let scenario = parse_scenario_with_overrides(
        "",
        &[format!("initial_shape.kind=\"{shape}\""), format!("scenario.n={n}"), "solver.i_max=200".into()],
    )?;
    let layout0 = scenario.initial_layout()?;
    let set = scenario.feasible_set(&layout0);
    let (layout, _, trace) = run_t3dris(&scenario, &layout0, &set, &scenario.b_box, &scenario.solver)?;

    show("initial", &spacing_distribution(&layout0, scenario.lambda, 90.0, 12)?);
    show("optimized", &spacing_distribution(&layout, scenario.lambda, 90.0, 12)?);
    println!("SNR {:.4} -> {:.4} dB", trace.initial_snr_db(), trace.final_snr_db());
    Ok(())
}
