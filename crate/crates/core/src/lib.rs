//! Simulation and in-situ characterization of lossy linear optical networks
//! driven by two-mode squeezed vacuum.
//!
//! Alice holds one half of each squeezed pair and either counts photons or
//! heterodynes; Bob sends the other half through the network `L` and counts.
//! Heralded heterodyne moments on runs where Bob saw nothing in mode `i`
//! reveal column `i` of `L`, and the estimate is scored against the ideal
//! unitary with fidelity and total-variation bounds.
//!
//! | module | contents |
//! |---|---|
//! | [`network`] | unitary and subunitary matrices, Haar sampling, polar parts, dilation |
//! | [`permanent`] | Ryser permanents |
//! | [`squeezing`] | thermal statistics and heralded Gaussian laws |
//! | [`fock`] | exact photocount tables for small networks |
//! | [`simulate`] | run generation and the NDJSON stream format |
//! | [`estimate`] | moment accumulators and transfer-matrix reconstruction |
//! | [`cc`] | magnitudes and phases from phase-randomized inputs |
//! | [`metrics`] | fidelity, distance bounds and sweeps |
//! | [`app`] | the `lonchar` command line |
//!
//! Runnable examples live in `examples/`: `haar_and_dilation`,
//! `thermal_statistics`, `simulate_runs`, `characterize_network`,
//! `cc_characterization`, `fidelity_sweep` and `fock_oracle_check`.

pub mod app;
pub mod cc;
pub mod error;
pub mod estimate;
pub mod fock;
pub mod linalg;
pub mod metrics;
pub mod network;
pub mod permanent;
pub mod simulate;
pub mod squeezing;

pub use error::{Error, Result};
pub use network::{TransferMatrix, UnitaryMatrix};
pub use squeezing::SqueezeParam;
