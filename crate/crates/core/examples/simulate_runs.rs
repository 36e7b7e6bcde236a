//! Generate a mixed stream of boson-sampling and characterization runs and
//! write it as NDJSON to stdout.

use std::io::Write;

use lonchar::network::haar_random_unitary;
use lonchar::simulate::{write_record, ExperimentConfig, Simulator};
use lonchar::squeezing::ChiSqRule;
use lonchar::{Result, TransferMatrix};

fn main() -> Result<()> {
    let config = ExperimentConfig {
        modes: 3,
        chi_sq: ChiSqRule::Fixed(0.2),
        runs: 12,
        run_mix: 0.5,
        seed: 42,
        photon_cutoff: 6,
        input_kind: Default::default(),
        cutoff_policy: Default::default(),
        schedule: Default::default(),
    };
    let l = TransferMatrix::uniform(&haar_random_unitary(3, 1)?, 0.9)?;
    let sim = Simulator::new(config, l)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let summary = sim.stream(|r| write_record(&mut out, r))?;
    out.flush()?;
    eprintln!("{summary:?}");
    Ok(())
}
