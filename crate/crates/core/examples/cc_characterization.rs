//! Phase-randomized input: recover |L_ji| from heralded intensities and
//! relative phases from heralded intensity covariances.

use lonchar::cc::{cc_magnitudes_from, cc_phase_difference_estimate, CcVariant};
use lonchar::estimate::{AccumulatorOptions, MomentAccumulator};
use lonchar::network::haar_random_unitary;
use lonchar::simulate::{run_rng, sample_cc_characterization_run};
use lonchar::{Result, SqueezeParam};

fn main() -> Result<()> {
    let m = 3;
    let l = haar_random_unitary(m, 11)?.to_transfer();
    let sq = SqueezeParam::new(0.3)?;
    let opts = AccumulatorOptions { full_covariance: false, pairs: vec![(0, 1)], blocks: 20 };
    let mut acc = MomentAccumulator::new(m, opts)?;
    for k in 0..1_000_000u64 {
        acc.accumulate(&sample_cc_characterization_run(sq, &l, &mut run_rng(2, k)))?;
    }
    let mags = cc_magnitudes_from(sq, &acc, CcVariant::Exact)?;
    println!("estimated |L|:\n{:.4}", mags.magnitude);
    println!("true |L|:\n{:.4}", l.matrix().map(|z| z.norm()));

    let col = |i: usize| -> Vec<f64> { mags.magnitude.column(i).iter().copied().collect() };
    let pair = acc.total().pair_moments().remove(0);
    let phases = cc_phase_difference_estimate(sq, &pair, &col(0), &col(1))?;
    for j in 1..m {
        let truth = (l.matrix()[(j, 1)].arg() - l.matrix()[(j, 0)].arg() - l.matrix()[(0, 1)].arg() + l.matrix()[(0, 0)].arg()).cos();
        match phases.cos_theta(j) {
            Some(c) => println!("row {j}: cos estimate {c:+.3} +- {:.3}, true {truth:+.3}", phases.sigma[(j, 0)]),
            None => println!("row {j}: unresolved"),
        }
    }
    Ok(())
}
