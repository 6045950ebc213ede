use sha2::{Digest, Sha256};

/// Provenance header written at the top of every report as `# key: value`
/// lines. It holds no wall-clock time unless one is supplied, so identical
/// manifests give identical files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// `(role, sha256)` of each input, in argument order.
    pub inputs: Vec<(String, String)>,
    pub config_digest: String,
    pub seed: Option<u64>,
    pub timestamp: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(command: &str, config_digest: String, timestamp: Option<String>) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: Vec::new(),
            config_digest,
            seed: None,
            timestamp,
        }
    }

    pub fn input(&mut self, role: &str, bytes: &[u8]) {
        self.inputs.push((role.to_string(), sha256_hex(bytes)));
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "# command: {}\n# tool_version: {}\n",
            self.command, self.tool_version
        );
        for (role, digest) in &self.inputs {
            out.push_str(&format!("# input.{role}: sha256:{digest}\n"));
        }
        out.push_str(&format!("# config: sha256:{}\n", self.config_digest));
        if let Some(seed) = self.seed {
            out.push_str(&format!("# seed: {seed}\n"));
        }
        if let Some(ts) = &self.timestamp {
            out.push_str(&format!("# timestamp: {ts}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_is_stable() {
        let mut m = RunManifest::new("value", "ab".into(), None);
        m.input("contracts", b"x");
        let text = m.render();
        assert!(text.starts_with("# command: value\n"));
        assert!(text.contains(
            "# input.contracts: sha256:2d711642b726b04401627ca9fbac32f5c8530fb1903cc4db02258717921a4881\n"
        ));
        assert!(!text.contains("timestamp"));
        assert_eq!(text, m.clone().render());
    }
}
