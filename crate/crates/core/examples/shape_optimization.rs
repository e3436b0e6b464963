//! Joint shape and reactance optimization on the reference scenario.
//!
//! Usage: `cargo run --release --example shape_optimization -- [shape] [n] [constrained]`
//! with `shape` one of ula, upa, cylinder, sphere.

use conformal_ris::scenario::parse_scenario_with_overrides;
use conformal_ris::shape_opt::run_t3dris;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind = args.first().map_or("upa", String::as_str);
    let n = args.get(1).map_or("16", String::as_str);
    let mode = if args.get(2).is_some_and(|a| a == "constrained") { "constrained" } else { "unconstrained" };
    let scenario = parse_scenario_with_overrides(
        "",
        &[
            format!("initial_shape.kind={kind}"),
            format!("scenario.n={n}"),
            format!("feasible_set.mode={mode}"),
            "solver.i_max=200".into(),
        ],
    )?;
    let layout0 = scenario.initial_layout()?;
    let set = scenario.feasible_set(&layout0);
    let started = std::time::Instant::now();
    let (layout, config, trace) = run_t3dris(&scenario, &layout0, &set, &scenario.b_box, &scenario.solver)?;
    println!("{kind} N={n} {mode}: {} iterations in {:.2?}", trace.iterations(), started.elapsed());
    for r in trace.records.iter().take(6) {
        println!("  iter {:3}  SNR {:9.4} dB  (after config {:9.4})  moves {}", r.iter, r.snr_db, r.snr_after_config, r.accepted);
    }
    println!(
        "initial {:.4} dB, final {:.4} dB, gain {:.4} dB",
        trace.initial_snr_db(),
        trace.final_snr_db(),
        trace.final_snr_db() - trace.initial_snr_db()
    );
    println!("first element at {:?}, b = {:.3}", layout.position(0).as_slice(), config.b[0]);
    Ok(())
}
