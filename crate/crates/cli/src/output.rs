//! Output directory with atomic writes and a per-command manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::fail::Failure;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct OutDir {
    dir: PathBuf,
    written: Vec<(String, String)>,
    inputs: Vec<(PathBuf, String)>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            inputs: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `name` through a temporary file in the same directory and a rename.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let target = self.dir.join(name);
        let io = |e: std::io::Error| Failure::io(format!("cannot write {}: {e}", target.display()));
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io)?;
        tmp.write_all(bytes).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&target).map_err(|e| io(e.error))?;
        log::info!("wrote {}", target.display());
        self.written.push((name.to_string(), sha256_hex(bytes)));
        Ok(())
    }

    pub fn write_str(&mut self, name: &str, text: &str) -> Result<(), Failure> {
        self.write(name, text.as_bytes())
    }

    /// Reads an input file and records its hash for the manifest.
    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>, Failure> {
        let bytes = fs::read(path).map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.push((path.to_path_buf(), sha256_hex(&bytes)));
        Ok(bytes)
    }

    /// Writes `<command>.manifest`: version, seed, input and output hashes
    /// and a verbatim copy of the config.
    pub fn finish(mut self, command: &str, cfg: &Config, seed: Option<u64>) -> Result<(), Failure> {
        let mut m = String::new();
        m.push_str(&format!("command = {command}\n"));
        m.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
        if let Some(s) = seed {
            m.push_str(&format!("seed = {s}\n"));
        }
        m.push_str(&format!("config = {}\n", cfg.path.display()));
        m.push_str(&format!("config_sha256 = {}\n", sha256_hex(cfg.text.as_bytes())));
        if let Ok(t) = std::env::var("INFLAB_THREADS") {
            m.push_str(&format!("inflab_threads = {t}\n"));
        }
        m.push_str("\n[inputs]\n");
        for (p, h) in &self.inputs {
            m.push_str(&format!("{h}  {}\n", p.display()));
        }
        m.push_str("\n[outputs]\n");
        for (n, h) in &self.written {
            m.push_str(&format!("{h}  {n}\n"));
        }
        m.push_str("\n[config]\n");
        m.push_str(&cfg.text);
        if !cfg.text.ends_with('\n') {
            m.push('\n');
        }
        let name = format!("{command}.manifest");
        self.write_str(&name, &m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn writes_replace_and_manifest_lists_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = Config::parse("[gap]\nlambda = 1600\n", dir.path().to_path_buf()).unwrap();
        let mut out = OutDir::create(&dir.path().join("o")).unwrap();
        out.write_str("a.txt", "first").unwrap();
        out.write_str("a.txt", "second").unwrap();
        assert_eq!(fs::read_to_string(out.path("a.txt")).unwrap(), "second");
        out.finish("gap", &cfg, Some(9)).unwrap();
        let m = fs::read_to_string(dir.path().join("o/gap.manifest")).unwrap();
        assert!(m.contains("seed = 9"));
        assert!(m.contains(&format!("{}  a.txt", sha256_hex(b"second"))));
        assert!(m.ends_with("[config]\n[gap]\nlambda = 1600\n"));
        // No stray temporary files.
        assert_eq!(fs::read_dir(dir.path().join("o")).unwrap().count(), 2);
    }
}
