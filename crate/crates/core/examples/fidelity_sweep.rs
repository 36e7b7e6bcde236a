//! Uniform-loss fidelity and distance bound as the network grows, with
//! chi^2 = 1/sqrt(M), written as CSV.

use lonchar::metrics::{uniform_loss_sweep, write_sweep_csv};
use lonchar::squeezing::ChiSqRule;
use lonchar::Result;

fn main() -> Result<()> {
    let modes: Vec<usize> = (1..=30).map(|k| 50 * k).collect();
    let rows = uniform_loss_sweep(&modes, &[0.85, 0.9, 0.95, 0.99], ChiSqRule::InverseSqrtModes)?;
    write_sweep_csv(&rows, std::io::stdout())
}
