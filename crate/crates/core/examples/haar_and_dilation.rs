//! Build a lossy network, split it into lossless and loss parts, and embed it
//! in a unitary on twice as many modes.

use lonchar::linalg::{max_abs_diff, unitarity_deviation};
use lonchar::network::{haar_random_unitary, loss_measure, polar_decompose, unitary_dilation};
use lonchar::{Result, TransferMatrix};

fn main() -> Result<()> {
    let m = 4;
    let u = haar_random_unitary(m, 7)?;
    let v = haar_random_unitary(m, 8)?;
    let l = TransferMatrix::from_parts(&u, &[0.97, 0.9, 0.8, 0.6], &v)?;
    println!("U unitarity deviation      {:.2e}", unitarity_deviation(u.matrix()));
    println!("average loss per mode E(L) {:.4}", loss_measure(l.matrix()));

    let polar = polar_decompose(l.matrix())?;
    println!("singular transmissions     {:?}", polar.t);
    let back = &polar.sqrt_llt * &polar.v;
    println!("|sqrt(LL†) V - L|          {:.2e}", max_abs_diff(&back, l.matrix()));

    let dil = unitary_dilation(&l)?;
    println!("dilation is {}x{}, deviation {:.2e}", 2 * m, 2 * m, unitarity_deviation(dil.matrix()));
    println!("|top-left block - L|       {:.2e}", max_abs_diff(&dil.l_block(), l.matrix()));
    Ok(())
}
