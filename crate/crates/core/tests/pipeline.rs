use conformal_ris::analysis::{angles_deg, beampattern_from_currents, hpbw, induced_currents, spacing_distribution, AngleGrid};
use conformal_ris::baseline::{phase_profile_config, phases_to_loads};
use conformal_ris::impedance::assemble;
use conformal_ris::scenario::parse_scenario_with_overrides;
use conformal_ris::shape_opt::run_t3dris;

#[test]
fn optimization_reshapes_spacing_distribution() {
    let s = parse_scenario_with_overrides("", &["scenario.n=16".into(), "solver.i_max=50".into()]).unwrap();
    let layout0 = s.initial_layout().unwrap();
    let set = s.feasible_set(&layout0);
    let (layout, _, _) = run_t3dris(&s, &layout0, &set, &s.b_box, &s.solver).unwrap();
    let before = spacing_distribution(&layout0, s.lambda, 90.0, 10).unwrap();
    let after = spacing_distribution(&layout, s.lambda, 90.0, 10).unwrap();
    assert_ne!(before.values, after.values);
    assert_ne!(before.threshold, after.threshold);
}

#[test]
fn optimized_cylinder_beam_is_not_wider_than_baseline() {
    let s = parse_scenario_with_overrides(
        "",
        &[
            "scenario.n=16".into(),
            "initial_shape.kind=cylinder".into(),
            "feasible_set.mode=constrained".into(),
            "solver.i_max=200".into(),
        ],
    )
    .unwrap();
    let layout0 = s.initial_layout().unwrap();
    let imp0 = assemble(&layout0, &s.p_bs, &s.p_ue).unwrap();
    let (base_cfg, _) = phases_to_loads(&phase_profile_config(&imp0), imp0.z_ss[(0, 0)], s.r0, &s.b_box).unwrap();
    let set = s.feasible_set(&layout0);
    let (layout, cfg, _) = run_t3dris(&s, &layout0, &set, &s.b_box, &s.solver).unwrap();
    let imp = assemble(&layout, &s.p_bs, &s.p_ue).unwrap();

    let grid = AngleGrid::uniform(0.5);
    let (ue_el, _) = angles_deg(&layout0.centroid(), &s.p_ue);
    let width = |l, currents| {
        let p = beampattern_from_currents(l, &currents, &grid).unwrap();
        hpbw(&grid.azimuth_deg, &p.azimuth_cut(ue_el).1).unwrap()
    };
    let base = width(&layout0, induced_currents(&imp0, &base_cfg).unwrap());
    let opt = width(&layout, induced_currents(&imp, &cfg).unwrap());
    assert!(opt <= base, "optimized {opt} deg vs baseline {base} deg");
}
