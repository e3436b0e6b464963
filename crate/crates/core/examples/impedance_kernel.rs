//! Mutual impedance of two parallel half-wave dipoles as the transverse
//! spacing grows, the self impedance for a few wire radii, and the
//! position gradient of one pair.
//!
//! Usage: `cargo run --release --example impedance_kernel`

use conformal_ris::impedance::{impedance_gradient, mutual_impedance, self_impedance, Vec3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lambda = 0.01;
    let h = lambda / 4.0;

    println!("spacing/lambda, Re Z (ohm), Im Z (ohm), |Z| (ohm)");
    for d in [0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 2.0, 5.0, 10.0] {
        let z = mutual_impedance(&Vec3::zeros(), &Vec3::new(0.0, d * lambda, 0.0), lambda, h, lambda / 500.0)?;
        println!("{d:>6}, {:>10.4}, {:>10.4}, {:>10.4}", z.re, z.im, z.norm());
    }

    println!();
    for a in [lambda / 200.0, lambda / 500.0, lambda / 1000.0] {
        let z = self_impedance(lambda, h, a)?;
        println!("self impedance, a = lambda/{:.0}: {:.4} {:+.4}j ohm", lambda / a, z.re, z.im);
    }

    let q = Vec3::new(0.0, 0.0, 0.0);
    let p = Vec3::new(0.0012, 0.0047, 0.0031);
    let g = impedance_gradient(&q, &p, lambda, h, lambda / 500.0)?;
    println!();
    println!("dZ/dq for a skewed pair (ohm/m):");
    for (axis, c) in ["x", "y", "z"].iter().zip(g) {
        println!("  {axis}: {:.6e} {:+.6e}j", c.re, c.im);
    }
    Ok(())
}
