use std::path::Path;
use std::time::Instant;

use depcap::Error;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Provenance block attached to every JSON output.
pub struct Manifest {
    pub subcommand: String,
    pub flags: Value,
    pub seed: Option<u64>,
    hasher: Option<Sha256>,
    started: Instant,
}

impl Manifest {
    pub fn new(subcommand: String, flags: Value) -> Self {
        Self {
            subcommand,
            flags,
            seed: None,
            hasher: None,
            started: Instant::now(),
        }
    }

    /// Folds a file's bytes into the input digest.
    pub fn digest_file(&mut self, path: &Path) -> Result<(), Error> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
        self.hasher.get_or_insert_with(Sha256::new).update(&bytes);
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let digest = self.hasher.clone().map(|h| {
            h.finalize()
                .iter()
                .map(|b| format!("{b:02x}"))
                .collect::<String>()
        });
        json!({
            "subcommand": self.subcommand,
            "flags": self.flags,
            "seed": self.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "input_sha256": digest,
            "wall_time_s": self.started.elapsed().as_secs_f64(),
        })
    }
}
