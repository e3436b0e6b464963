//! Phase-profile baseline against the joint optimizer on a cylindrical RIS:
//! SNR, directivity toward the UE and half-power beamwidth of the azimuth cut.
//!
//! Usage: `cargo run --release --example baseline_comparison -- [n]`

use conformal_ris::analysis::{angles_deg, beampattern_from_currents, directivity_dbi, hpbw, induced_currents, AngleGrid};
use conformal_ris::baseline::{phase_profile_config, phases_to_loads};
use conformal_ris::channel::ChannelState;
use conformal_ris::impedance::assemble;
use conformal_ris::scenario::parse_scenario_with_overrides;
use conformal_ris::shape_opt::run_t3dris;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = std::env::args().nth(1).unwrap_or_else(|| "16".into());
    let scenario = parse_scenario_with_overrides(
        "",
        &[
            "initial_shape.kind=cylinder".into(),
            "feasible_set.mode=constrained".into(),
            format!("scenario.n={n}"),
            "solver.i_max=200".into(),
        ],
    )?;
    let layout0 = scenario.initial_layout()?;
    let imp0 = assemble(&layout0, &scenario.p_bs, &scenario.p_ue)?;

    let theta = phase_profile_config(&imp0);
    let z0 = imp0.z_ss[(0, 0)];
    let (base_cfg, clamps) = phases_to_loads(&theta, z0, scenario.r0, &scenario.b_box)?;
    let base_state = ChannelState::new(imp0.clone(), base_cfg.clone(), scenario.y0)?;
    let base_snr = scenario.snr_db(base_state.h());

    let set = scenario.feasible_set(&layout0);
    let (layout, cfg, trace) = run_t3dris(&scenario, &layout0, &set, &scenario.b_box, &scenario.solver)?;
    let imp = assemble(&layout, &scenario.p_bs, &scenario.p_ue)?;

    let (ue_theta, ue_phi) = angles_deg(&layout0.centroid(), &scenario.p_ue);
    let base_currents = induced_currents(&imp0, &base_cfg)?;
    let opt_currents = induced_currents(&imp, &cfg)?;
    let d_base = directivity_dbi(&layout0, &base_currents, ue_theta.to_radians(), ue_phi.to_radians(), 1.0)?;
    let d_opt = directivity_dbi(&layout, &opt_currents, ue_theta.to_radians(), ue_phi.to_radians(), 1.0)?;

    let grid = AngleGrid::uniform(1.0);
    let cut = |p: &conformal_ris::analysis::Pattern| {
        let (_, c) = p.azimuth_cut(ue_theta);
        hpbw(&grid.azimuth_deg, &c)
    };
    let base_pattern = beampattern_from_currents(&layout0, &base_currents, &grid)?;
    let opt_pattern = beampattern_from_currents(&layout, &opt_currents, &grid)?;

    println!("cylinder N={n}, UE at polar {ue_theta:.1} deg, azimuth {ue_phi:.1} deg");
    println!("baseline : SNR {base_snr:.4} dB, directivity {d_base:.3} dBi, HPBW {:?} ({clamps} clamped loads)", cut(&base_pattern).ok());
    println!(
        "optimized: SNR {:.4} dB, directivity {d_opt:.3} dBi, HPBW {:?} ({} iterations)",
        trace.final_snr_db(),
        cut(&opt_pattern).ok(),
        trace.iterations()
    );
    Ok(())
}
