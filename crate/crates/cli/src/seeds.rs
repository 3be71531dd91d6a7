//! Per-cell seed derivation from the master seed.

use ponsim::fiber::Band;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Frame,
    Train,
    Validation,
    Test,
    Oracle,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Frame => "frame",
            Role::Train => "train",
            Role::Validation => "validation",
            Role::Test => "test",
            Role::Oracle => "oracle",
        }
    }
}

/// Seed of item `counter` in a cell. The inputs are hashed as a canonical
/// string, so distinct cells get unrelated streams and the mapping does not
/// depend on sweep order.
pub fn cell_seed(master: u64, band: Band, power_dbm: f64, model: &str, role: Role, counter: u64) -> u64 {
    let key = format!(
        "{master}|{}|{:016x}|{model}|{}|{counter}",
        band.name(),
        power_dbm.to_bits(),
        role.name()
    );
    let digest = Sha256::digest(key.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
