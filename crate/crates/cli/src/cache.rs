//! Result directories keyed by a hash of everything that affects the output.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

/// Marker written after every output file of a run is in place.
pub const COMPLETE: &str = ".complete";

/// SHA-256 over the config (output section excluded), the command and its arguments.
pub fn run_key(cfg: &ExperimentConfig, command: &str, args: &[(&str, String)]) -> String {
    let mut keyed = cfg.clone();
    keyed.output = Default::default();
    let mut h = Sha256::new();
    h.update(keyed.to_toml().as_bytes());
    h.update([0]);
    h.update(command.as_bytes());
    for (k, v) in args {
        h.update([0]);
        h.update(k.as_bytes());
        h.update(b"=");
        h.update(v.as_bytes());
    }
    hex::encode(h.finalize())
}

pub struct RunDir {
    pub path: PathBuf,
    pub hit: bool,
}

impl RunDir {
    pub fn open(out: &Path, key: &str, use_cache: bool) -> std::io::Result<Self> {
        let path = out.join(key);
        let hit = use_cache && path.join(COMPLETE).is_file();
        if !hit {
            std::fs::create_dir_all(&path)?;
            let _ = std::fs::remove_file(path.join(COMPLETE));
        }
        Ok(Self { path, hit })
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn finish(&self) -> std::io::Result<()> {
        std::fs::write(self.path.join(COMPLETE), b"")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_ignores_output_section_only() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.output.dir = "elsewhere".into();
        b.output.cache = false;
        let args = [("t", "-3".to_string())];
        assert_eq!(run_key(&a, "le", &args), run_key(&b, "le", &args));
        b.numerics.grid = 1024;
        assert_ne!(run_key(&a, "le", &args), run_key(&b, "le", &args));
        assert_ne!(run_key(&a, "le", &args), run_key(&a, "bundles", &args));
        assert_ne!(run_key(&a, "le", &args), run_key(&a, "le", &[("t", "-2.5".to_string())]));
    }
}
