//! Exact photocount tables for a two-mode network: the classical distances
//! sit between the bounds set by the quantum fidelity.

use lonchar::fock::{joint_distribution, lossy_conditional_distribution};
use lonchar::metrics::{sector_fidelity, truncated_chain};
use lonchar::network::haar_random_unitary;
use lonchar::{Result, SqueezeParam, TransferMatrix};

fn main() -> Result<()> {
    let u = haar_random_unitary(2, 4)?;
    let l = TransferMatrix::from_parts(&u, &[0.95, 0.8], &haar_random_unitary(2, 9)?)?;

    let out = lossy_conditional_distribution(&l, &[1, 1])?;
    println!("two photons in, output distribution:");
    for (n, p) in out.outcomes().iter().zip(out.probs()) {
        println!("  {n:?}  {p:.6}");
    }

    let sq = SqueezeParam::new(0.3)?;
    let joint = joint_distribution(sq, &l, 4)?;
    println!("joint table: {} records, tail mass {:.3e}", joint.len(), joint.residual_mass());
    for n in 1..=3 {
        println!("sector {n} fidelity {:.6}", sector_fidelity(&u, &l, n)?);
    }
    let tc = truncated_chain(sq, &u, &l, 4)?;
    println!("{:#?}", tc);
    println!("minimum slack {:.3e}", tc.min_slack());
    Ok(())
}
