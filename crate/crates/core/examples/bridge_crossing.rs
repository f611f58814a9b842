//! Crossing probability of a pinned Brownian bridge and its crossing-time
//! density, checked against a trapezoid sum.

use fptmc::bridge::{crossing_density, crossing_probability, IntervalEndpoints};

fn main() -> fptmc::Result<()> {
    let e = IntervalEndpoints {
        t_prev: 0.0,
        t_next: 1.0,
        x_prev: 0.3,
        x_next: 0.2,
        mu: -0.05,
        sigma: 0.4,
        boundary: 0.0,
    };
    let q = crossing_probability(&e)?;
    println!("crossing probability {q:.6}");

    let n = 20_000;
    let h = e.tau() / n as f64;
    let mut mass = 0.0;
    let mut prev = 0.0;
    for k in 1..n {
        let g = crossing_density(&e, e.t_prev + k as f64 * h)?;
        mass += 0.5 * h * (prev + g);
        prev = g;
    }
    mass += 0.5 * h * prev;
    println!("integral of the density {mass:.6}");

    for t in [0.1, 0.25, 0.5, 0.75, 0.9] {
        println!("g({t:.2}) = {:.5}", crossing_density(&e, t)?);
    }
    Ok(())
}
