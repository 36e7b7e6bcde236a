//! Characterize a 4-mode lossy network from simulated heterodyne runs and
//! compare both estimators with the truth.

use lonchar::estimate::{mode_losses_from, reconstruct_from, AccumulatorOptions, Method, MomentAccumulator};
use lonchar::linalg::max_abs_diff;
use lonchar::network::{column_aligned_distance, haar_random_unitary, loss_measure, normalize_phases};
use lonchar::simulate::{run_rng, sample_characterization_run};
use lonchar::{Result, SqueezeParam, TransferMatrix};

fn main() -> Result<()> {
    let m = 4;
    let l = TransferMatrix::from_parts(&haar_random_unitary(m, 5)?, &[0.95, 0.9, 0.85, 0.8], &haar_random_unitary(m, 6)?)?;
    let truth = normalize_phases(l.matrix()).0;
    let sq = SqueezeParam::new(0.25)?;

    for runs in [10_000u64, 100_000, 400_000] {
        let mut acc = MomentAccumulator::new(m, AccumulatorOptions::default())?;
        for k in 0..runs {
            acc.accumulate(&sample_characterization_run(sq, &l, &mut run_rng(1, k)))?;
        }
        let exact = reconstruct_from(sq, &acc, Method::Exact)?;
        let first = reconstruct_from(sq, &acc, Method::FirstOrder)?;
        let losses = mode_losses_from(sq, &acc)?;
        println!(
            "T = {runs:>7}: max error exact {:.4} (column-aligned {:.4}), first-order {:.4}; E(L_hat) = {:.4} (true {:.4})",
            max_abs_diff(&exact.estimate, &truth),
            column_aligned_distance(&exact.estimate, l.matrix()),
            max_abs_diff(&first.estimate, &truth),
            losses.average_loss,
            loss_measure(l.matrix()),
        );
        if !first.flags.is_empty() {
            // a small true diagonal makes the first-order division blow up
            println!("            first-order flags: {:?}", first.flags);
        }
    }
    Ok(())
}
