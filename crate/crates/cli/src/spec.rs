use std::path::PathBuf;

use cantyp::bns::{bns_channel, restricted_bns_channel};
use cantyp::channels::{depolarizing, identity, reshuffle_then_trace, ChannelFile};
use cantyp::restriction::{enumerate_basis, PartialTraceScenario};
use cantyp::QuantumChannel;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::exit::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    Identity,
    Depolarizing,
    PartialTrace,
    Reshuffle,
    Bns,
    File,
}

/// A channel described on the command line or in a JSON config.
///
/// `partial-trace` takes either `--d-s/--d-e` (full bipartite space) or
/// `--N/--Np/--s-qubits` (first `s-qubits` sites of an excitation subspace).
/// `bns` restricts to the `Np` subspace when `--Np` is given.
#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct ChannelSpec {
    /// Builtin channel family, or `file` to load Kraus operators from JSON.
    #[arg(long = "channel", value_enum)]
    #[serde(rename = "kind")]
    pub kind: Option<ChannelKind>,
    /// Dimension for identity and depolarizing.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[arg(long = "d-s")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_s: Option<usize>,
    #[arg(long = "d-e")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_e: Option<usize>,
    /// Number of sites.
    #[arg(long = "N")]
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<usize>,
    /// Number of excitations.
    #[arg(long = "Np")]
    #[serde(default, rename = "Np", skip_serializing_if = "Option::is_none")]
    pub n_excited: Option<usize>,
    /// Number of BnS blocks.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// System qubits kept by a restricted partial trace.
    #[arg(long = "s-qubits")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_qubits: Option<usize>,
    /// Seed of the random unitary for `reshuffle`.
    #[arg(long = "unitary-seed")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary_seed: Option<u64>,
    /// Kraus JSON file for `file`.
    #[arg(long = "kraus-file")]
    #[serde(default, rename = "kraus_file", skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

fn need<T: Copy>(v: Option<T>, kind: &str, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::usage(format!("channel {kind} requires --{flag}")))
}

impl ChannelSpec {
    pub fn build(&self) -> CliResult<QuantumChannel> {
        let kind = self.kind.ok_or_else(|| CliError::usage("missing --channel"))?;
        let ch = match kind {
            ChannelKind::Identity => identity(need(self.d, "identity", "d")?)?,
            ChannelKind::Depolarizing => {
                depolarizing(need(self.d, "depolarizing", "d")?, need(self.lambda, "depolarizing", "lambda")?)?
            }
            ChannelKind::PartialTrace => match self.partial_trace_scenario()? {
                Some(s) => s.channel()?,
                None => unreachable!("partial-trace always yields a scenario"),
            },
            ChannelKind::Reshuffle => reshuffle_then_trace(
                need(self.d_s, "reshuffle", "d-s")?,
                need(self.d_e, "reshuffle", "d-e")?,
                need(self.unitary_seed, "reshuffle", "unitary-seed")?,
            )?,
            ChannelKind::Bns => {
                let n = need(self.n_sites, "bns", "N")?;
                let k = need(self.k, "bns", "k")?;
                match self.n_excited {
                    Some(np) => restricted_bns_channel(k, &enumerate_basis(n, np)?)?,
                    None => bns_channel(n, k)?,
                }
            }
            ChannelKind::File => {
                let path = self.path.as_ref().ok_or_else(|| CliError::usage("channel file requires --kraus-file"))?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::data(format!("reading {}: {e}", path.display())))?;
                let file = ChannelFile::from_json(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
                file.to_channel().map_err(|e| CliError::data(format!("{}: {e}", path.display())))?
            }
        };
        Ok(ch)
    }

    /// The partial-trace scenario behind a `partial-trace` spec, if any.
    pub fn partial_trace_scenario(&self) -> CliResult<Option<PartialTraceScenario>> {
        if self.kind != Some(ChannelKind::PartialTrace) {
            return Ok(None);
        }
        let scenario = match (self.d_s, self.d_e, self.n_sites) {
            (Some(d_s), Some(d_e), None) => PartialTraceScenario::full(d_s, d_e)?,
            (None, None, Some(n)) => {
                let np = need(self.n_excited, "partial-trace", "Np")?;
                let s = need(self.s_qubits, "partial-trace", "s-qubits")?;
                if s > n {
                    return Err(CliError::usage(format!("--s-qubits {s} exceeds --N {n}")));
                }
                PartialTraceScenario::restricted(enumerate_basis(n, np)?, (s, n - s))?
            }
            _ => {
                return Err(CliError::usage(
                    "partial-trace needs either --d-s and --d-e, or --N, --Np and --s-qubits",
                ))
            }
        };
        Ok(Some(scenario))
    }

    /// Replaces a relative Kraus file path by one relative to `base`.
    pub fn resolve_relative(&mut self, base: &std::path::Path) {
        if let Some(p) = &self.path {
            if p.is_relative() {
                self.path = Some(base.join(p));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_form_keeps_symbol_names() {
        let spec: ChannelSpec = serde_json::from_str(r#"{"kind": "bns", "N": 4, "k": 2, "Np": 2}"#).unwrap();
        assert_eq!(spec.kind, Some(ChannelKind::Bns));
        let ch = spec.build().unwrap();
        assert_eq!((ch.dim_in(), ch.dim_out()), (6, 4));
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(text, r#"{"kind":"bns","N":4,"Np":2,"k":2}"#);
    }

    #[test]
    fn missing_parameters_are_usage_errors() {
        let spec = ChannelSpec { kind: Some(ChannelKind::Depolarizing), d: Some(2), ..Default::default() };
        assert_eq!(spec.build().unwrap_err().code, 2);
        let spec = ChannelSpec { kind: Some(ChannelKind::PartialTrace), d_s: Some(2), ..Default::default() };
        assert_eq!(spec.build().unwrap_err().code, 2);
    }

    #[test]
    fn partial_trace_variants() {
        let full = ChannelSpec { kind: Some(ChannelKind::PartialTrace), d_s: Some(2), d_e: Some(4), ..Default::default() };
        assert_eq!(full.build().unwrap().dim_in(), 8);
        let restricted = ChannelSpec {
            kind: Some(ChannelKind::PartialTrace),
            n_sites: Some(4),
            n_excited: Some(2),
            s_qubits: Some(2),
            ..Default::default()
        };
        let ch = restricted.build().unwrap();
        assert_eq!((ch.dim_in(), ch.dim_out()), (6, 4));
    }
}
