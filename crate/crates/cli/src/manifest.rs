use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::exit::{CliError, CliResult};

/// Record written next to every primary output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, as given.
    pub args: Vec<String>,
    /// Working directory the arguments are relative to.
    pub cwd: PathBuf,
    pub parameters: serde_json::Value,
    pub master_seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    /// `<output>.manifest.json`
    pub fn path_for(primary: &Path) -> PathBuf {
        let mut name = primary.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        primary.with_file_name(name)
    }

    pub fn write(&self, primary: &Path) -> CliResult<PathBuf> {
        let path = Self::path_for(primary);
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::internal(e.to_string()))?;
        crate::output::write_text(&path, &(text + "\n"))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("reading manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("manifest {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(RunManifest::path_for(Path::new("out/fig.csv")), PathBuf::from("out/fig.csv.manifest.json"));
    }
}
