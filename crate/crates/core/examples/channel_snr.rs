//! End-to-end channel of the reference scenario for a random load vector,
//! checked against a plain linear solve, and the first-order update for a
//! single-element move.
//!
//! Usage: `cargo run --release --example channel_snr -- [n] [seed]`

use conformal_ris::channel::{coupled_term_by_solve, neumann_norm, neumann_perturbed_channel, ChannelState, Perturbation, RisConfig};
use conformal_ris::impedance::{assemble, element_column, Vec3};
use conformal_ris::scenario::parse_scenario_with_overrides;
use rand::{Rng, SeedableRng};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(Ok(36), |s| s.parse())?;
    let seed: u64 = args.next().map_or(Ok(1), |s| s.parse())?;
    let scenario = parse_scenario_with_overrides("", &[format!("scenario.n={n}")])?;
    let layout = scenario.initial_layout()?;
    let imp = assemble(&layout, &scenario.p_bs, &scenario.p_ue)?;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(scenario.b_box.b_min..=scenario.b_box.b_max)).collect();
    let state = ChannelState::new(imp.clone(), RisConfig::new(b, scenario.r0)?, scenario.y0)?;

    let solved = scenario.y0 * coupled_term_by_solve(&imp, state.config())?;
    println!("N = {n}, random loads (seed {seed})");
    println!("H            = {:.6e}", state.h());
    println!("H (by solve) = {solved:.6e}, relative gap {:.2e}", (state.h() - solved).norm() / solved.norm());
    println!("direct only  = {:.6e}", scenario.y0 * imp.z_rt);
    println!("SNR          = {:.4} dB", state.snr_db(scenario.p_w, scenario.sigma2_w));

    println!();
    println!("move element 0 by s along x: first-order update vs exact");
    println!("s (m), ||G Delta||, rel. error, 3 ||G Delta||^2");
    let q0 = layout.position(0);
    for s in [1e-6, 1e-5, 1e-4, 3e-4] {
        let q = q0 + Vec3::new(s, 0.0, 0.0);
        let col = element_column(&layout, 0, &q, &scenario.p_bs, &scenario.p_ue, imp.z_ss[(0, 0)])?;
        let mut pert = Perturbation::zero(n, 0);
        pert.delta_col = col.z_ss - imp.z_ss.column(0);
        pert.delta_sr = col.z_sr - imp.z_sr[0];
        pert.delta_st = col.z_st - imp.z_st[0];
        let norm = neumann_norm(&state, &pert);
        let mut moved = layout.clone();
        moved.set_position(0, q);
        let exact = state.refresh_impedances(assemble(&moved, &scenario.p_bs, &scenario.p_ue)?)?.h();
        match neumann_perturbed_channel(&state, &pert) {
            Ok(z) => {
                let err = (scenario.y0 * z - exact).norm() / exact.norm();
                println!("{s:.0e}, {norm:.3e}, {err:.3e}, {:.3e}", 3.0 * norm * norm);
            }
            Err(e) => println!("{s:.0e}, {norm:.3e}, {e}"),
        }
    }
    Ok(())
}
