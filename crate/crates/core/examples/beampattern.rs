//! Radiation pattern of an optimized RIS: the azimuth cut through the UE
//! direction printed as a coarse text plot, with the HPBW and directivity.
//!
//! Usage: `cargo run --release --example beampattern -- [shape] [n]`

use conformal_ris::analysis::{angles_deg, beampattern_from_currents, directivity_dbi, hpbw, induced_currents, AngleGrid};
use conformal_ris::impedance::assemble;
use conformal_ris::scenario::parse_scenario_with_overrides;
use conformal_ris::shape_opt::run_t3dris;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let shape = args.next().unwrap_or_else(|| "cylinder".into());
    let n = args.next().unwrap_or_else(|| "16".into());
    let scenario = parse_scenario_with_overrides(
        "",
        &[
            format!("initial_shape.kind=\"{shape}\""),
            format!("scenario.n={n}"),
            "feasible_set.mode=\"constrained\"".into(),
            "solver.i_max=200".into(),
        ],
    )?;
    let layout0 = scenario.initial_layout()?;
    let set = scenario.feasible_set(&layout0);
    let (layout, cfg, _) = run_t3dris(&scenario, &layout0, &set, &scenario.b_box, &scenario.solver)?;
    let imp = assemble(&layout, &scenario.p_bs, &scenario.p_ue)?;
    let currents = induced_currents(&imp, &cfg)?;

    let grid = AngleGrid::uniform(2.0);
    let pattern = beampattern_from_currents(&layout, &currents, &grid)?;
    let (ue_el, ue_az) = angles_deg(&layout.centroid(), &scenario.p_ue);
    let (el, cut) = pattern.azimuth_cut(ue_el);
    let d = directivity_dbi(&layout, &currents, ue_el.to_radians(), ue_az.to_radians(), 1.0)?;

    println!("{shape}, N = {n}; UE at polar {ue_el:.1} deg, azimuth {ue_az:.1} deg");
    println!("directivity toward the UE: {d:.3} dBi");
    match hpbw(&grid.azimuth_deg, &cut) {
        Ok(w) => println!("HPBW of the cut at {el:.0} deg: {w:.1} deg"),
        Err(e) => println!("HPBW of the cut at {el:.0} deg: {e}"),
    }
    println!();
    for (az, db) in grid.azimuth_deg.iter().zip(&cut).step_by(5) {
        let bar = ((db + 30.0).max(0.0) * 2.0) as usize;
        println!("{az:>7.1} {db:>7.2} dB |{}", "#".repeat(bar));
    }
    Ok(())
}
