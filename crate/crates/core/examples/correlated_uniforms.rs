//! Sum-of-uniforms pairs: mixing weight, exact and sample correlation.

use fptmc::stochastic::{calibrate_mixing, sample_correlated_uniforms, RngStream, SumOfUniforms, UniformTarget};

fn main() -> fptmc::Result<()> {
    let n = 200_000;
    for target in [0.0, 0.25, 0.5, 0.767] {
        let a = calibrate_mixing(target)?;
        let exact = SumOfUniforms::with_mixing(a)?.correlation();
        let mut stream = RngStream::new(7, 0);
        let (mut sx, mut sy, mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let u = sample_correlated_uniforms(2, &UniformTarget::Equicorrelated(target), &mut stream)?;
            sx += u[0];
            sy += u[1];
            sxy += u[0] * u[1];
            sxx += u[0] * u[0];
            syy += u[1] * u[1];
        }
        let nf = n as f64;
        let cov = sxy / nf - sx * sy / (nf * nf);
        let r = cov / ((sxx / nf - (sx / nf).powi(2)) * (syy / nf - (sy / nf).powi(2))).sqrt();
        println!("target {target:<5} mixing {a:<10.6} exact {exact:.5} sample {r:.5}");
    }
    Ok(())
}
