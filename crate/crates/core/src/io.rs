//! CSV artifacts: comma separated, LF line endings, floats with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::analysis::{Pattern, SpacingHistogram};
use crate::channel::RisConfig;
use crate::error::{Error, Result};
use crate::impedance::{DipoleLayout, Vec3};
use crate::shape_opt::OptimizerTrace;

/// Scientific notation with 17 significant digits, which parses back exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

pub fn layout_csv(layout: &DipoleLayout) -> String {
    let mut s = String::from("index,x,y,z\n");
    for (i, p) in layout.positions().iter().enumerate() {
        push_row(&mut s, &[i.to_string(), fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.z)]);
    }
    s
}

pub fn reactances_csv(cfg: &RisConfig) -> String {
    let mut s = String::from("index,reactance_ohm,resistance_ohm\n");
    for (i, b) in cfg.b.iter().enumerate() {
        push_row(&mut s, &[i.to_string(), fmt_f64(*b), fmt_f64(cfg.r0)]);
    }
    s
}

/// One row per outer iteration; wall times are left out so the file is reproducible.
pub fn trace_csv(trace: &OptimizerTrace) -> String {
    let mut s = String::from(
        "iter,snr_db,gain,snr_after_config_db,config_iterations,accepted_moves,neumann_rejections,mean_step_m,max_displacement_m\n",
    );
    for r in &trace.records {
        let moved: Vec<f64> = r.steps.iter().copied().filter(|v| *v > 0.0).collect();
        let mean_step = if moved.is_empty() { 0.0 } else { moved.iter().sum::<f64>() / moved.len() as f64 };
        let max_disp = r.displacements.iter().fold(0.0f64, |m, v| m.max(*v));
        push_row(
            &mut s,
            &[
                r.iter.to_string(),
                fmt_f64(r.snr_db),
                fmt_f64(r.gain),
                fmt_f64(r.snr_after_config),
                r.config_iterations.to_string(),
                r.accepted.to_string(),
                r.neumann_rejections.to_string(),
                fmt_f64(mean_step),
                fmt_f64(max_disp),
            ],
        );
    }
    s
}

/// Header `elevation_deg,<azimuths...>`, then one row per elevation.
pub fn beampattern_csv(p: &Pattern) -> String {
    let mut s = String::from("elevation_deg");
    for az in &p.grid.azimuth_deg {
        let _ = write!(s, ",{}", fmt_f64(*az));
    }
    s.push('\n');
    for (i, el) in p.grid.elevation_deg.iter().enumerate() {
        let mut cells = vec![fmt_f64(*el)];
        cells.extend(p.db.row(i).iter().map(|v| fmt_f64(*v)));
        push_row(&mut s, &cells);
    }
    s
}

pub fn cut_csv(angles_deg: &[f64], db: &[f64]) -> String {
    let mut s = String::from("azimuth_deg,power_db\n");
    for (a, v) in angles_deg.iter().zip(db) {
        push_row(&mut s, &[fmt_f64(*a), fmt_f64(*v)]);
    }
    s
}

pub fn spacing_csv(h: &SpacingHistogram) -> String {
    let mut s = String::from("bin_lo,bin_hi,count\n");
    for (i, c) in h.counts.iter().enumerate() {
        push_row(&mut s, &[fmt_f64(h.edges[i]), fmt_f64(h.edges[i + 1]), c.to_string()]);
    }
    s
}

/// Parses a CSV with a header into rows of fields, checking the column names.
pub fn parse_csv(text: &str, expected_header: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        column: 1,
        message: "empty CSV".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols != expected_header {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: format!("expected header {}, got {header}", expected_header.join(",")),
        });
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let row: Vec<String> = l.split(',').map(str::to_string).collect();
            if row.len() != cols.len() {
                return Err(Error::Parse {
                    line: i + 2,
                    column: 1,
                    message: format!("expected {} fields, got {}", cols.len(), row.len()),
                });
            }
            Ok(row)
        })
        .collect()
}

fn field<T: std::str::FromStr>(row: &[String], col: usize, line: usize) -> Result<T> {
    row[col].parse().map_err(|_| Error::Parse {
        line,
        column: col + 1,
        message: format!("cannot parse `{}`", row[col]),
    })
}

/// Positions from a `layout.csv`.
pub fn parse_layout(text: &str) -> Result<Vec<Vec3>> {
    parse_csv(text, &["index", "x", "y", "z"])?
        .iter()
        .enumerate()
        .map(|(i, r)| Ok(Vec3::new(field(r, 1, i + 2)?, field(r, 2, i + 2)?, field(r, 3, i + 2)?)))
        .collect()
}

/// Configuration from a `reactances.csv`.
pub fn parse_reactances(text: &str) -> Result<RisConfig> {
    let rows = parse_csv(text, &["index", "reactance_ohm", "resistance_ohm"])?;
    let b = rows
        .iter()
        .enumerate()
        .map(|(i, r)| field(r, 1, i + 2))
        .collect::<Result<Vec<f64>>>()?;
    let r0 = match rows.first() {
        Some(r) => field(r, 2, 2)?,
        None => 0.0,
    };
    RisConfig::new(b, r0)
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::write(dir.join(name), contents).map_err(|e| Error::Io(format!("{}: {e}", dir.join(name).display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 68.27919191919191] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn layout_round_trip() {
        let pts = vec![Vec3::new(0.1, -0.2, 1.0 / 3.0), Vec3::new(1e-9, 2.0, -7.25)];
        let layout = DipoleLayout::half_wave(pts.clone(), 0.01, 2e-5).unwrap();
        let text = layout_csv(&layout);
        assert!(!text.contains('\r'));
        assert_eq!(parse_layout(&text).unwrap(), pts);
    }

    #[test]
    fn reactances_round_trip() {
        let cfg = RisConfig::new(vec![-4999.123456789, 187.99999999999997, 0.0], 0.2).unwrap();
        assert_eq!(parse_reactances(&reactances_csv(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(matches!(parse_layout("i,x,y,z\n0,1,2,3\n"), Err(Error::Parse { .. })));
    }
}
