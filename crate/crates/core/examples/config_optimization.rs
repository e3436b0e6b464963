//! Reactance optimization on a fixed layout: the optimized loads against the
//! best of many random load vectors.
//!
//! Usage: `cargo run --release --example config_optimization -- [shape] [n]`

use conformal_ris::channel::{ChannelState, RisConfig};
use conformal_ris::config_opt::{optimize_config, ConfigOptions};
use conformal_ris::impedance::assemble;
use conformal_ris::scenario::parse_scenario_with_overrides;
use rand::{Rng, SeedableRng};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let shape = args.next().unwrap_or_else(|| "upa".into());
    let n = args.next().unwrap_or_else(|| "16".into());
    let scenario = parse_scenario_with_overrides("", &[format!("initial_shape.kind=\"{shape}\""), format!("scenario.n={n}")])?;
    let layout = scenario.initial_layout()?;
    let imp = assemble(&layout, &scenario.p_bs, &scenario.p_ue)?;
    let start = ChannelState::new(imp, RisConfig::resistive(layout.len(), scenario.r0), scenario.y0)?;

    let (best, trace) = optimize_config(&start, &scenario.b_box, &ConfigOptions::default())?;
    println!("{shape}, N = {n}");
    println!("b = 0     : SNR {:.4} dB", scenario.snr_db(start.h()));
    println!(
        "optimized : SNR {:.4} dB ({} sweeps, {} gradient steps, converged {})",
        scenario.snr_db(best.h()),
        trace.sweeps,
        trace.iterations,
        trace.converged
    );

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let mut best_random = f64::NEG_INFINITY;
    for _ in 0..2000 {
        let b = (0..layout.len()).map(|_| rng.gen_range(scenario.b_box.b_min..=scenario.b_box.b_max)).collect();
        let s = start.refresh_config(RisConfig::new(b, scenario.r0)?)?;
        best_random = best_random.max(scenario.snr_db(s.h()));
    }
    println!("random    : best of 2000 draws {best_random:.4} dB");

    println!();
    println!("index, reactance (ohm)");
    for (i, b) in best.config().b.iter().enumerate() {
        println!("{i}, {b:.4}");
    }
    Ok(())
}
