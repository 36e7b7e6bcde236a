//! Heralding statistics of M two-mode squeezers and the Gaussian law of
//! Alice's heterodyne outcomes once Bob reports no counts.

use lonchar::network::haar_random_unitary;
use lonchar::squeezing::{conditional_covariance, no_count_probability, single_count_distribution, thermal_count_distribution};
use lonchar::{Result, SqueezeParam, TransferMatrix};

fn main() -> Result<()> {
    let m = 6;
    let sq = SqueezeParam::inverse_sqrt_modes(m)?;
    println!("chi^2 = {:.4}, mean photons per mode = {:.4}", sq.chi_sq(), sq.mean_photon());

    let all = thermal_count_distribution(sq, m, 6);
    let single = single_count_distribution(sq, m, 6);
    println!(" N   P(N)       P(N, no bunching)");
    for (n, (p, s)) in all.iter().zip(&single).enumerate() {
        println!("{n:2}   {p:.6}   {s:.6}");
    }

    let l = TransferMatrix::uniform(&haar_random_unitary(m, 3)?, 0.9)?;
    println!("P(no count in mode 0) = {:.6}", no_count_probability(sq, &l, 0)?);
    let g = conditional_covariance(sq, &l, &[0])?;
    println!("<|alpha_0|^2> given no count there = {:.6}", g.covariance[(0, 0)].re);
    println!("<alpha_1 alpha_0*> given no count  = {:.6}", g.covariance[(1, 0)]);
    Ok(())
}
