//! Shared fixtures for the benchmarks.

use fedsae_core::datagen::{self, ClientShard, SyntheticSpec};

/// A Synthetic(1,1) dataset scaled down to `clients` clients.
pub fn synthetic_fixture(clients: usize, total_samples: usize) -> Vec<ClientShard> {
    datagen::generate_synthetic(&SyntheticSpec {
        num_clients: clients,
        total_samples,
        seed: 1,
        ..SyntheticSpec::default()
    })
    .expect("valid fixture spec")
}
