//! Problem files: one JSON document per run, selecting the operation and its inputs.

use std::path::Path;

use mellin_lab::conormal::FuchsFile;
use mellin_lab::merosym::{make_index_symbol, MeroSymbol, PoleRecord, ToeplitzConfig};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "operation", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemFile {
    /// Admissible weights of a Fuchs-type operator over `gamma_range`.
    Weights {
        operator: FuchsFile,
        gamma_range: (f64, f64),
    },
    /// Winding number against the Toeplitz index oracle for `1 + f` on the weight line of `gamma`.
    Index {
        symbol: SymbolSpec,
        gamma: f64,
        #[serde(default)]
        toeplitz: Option<ToeplitzConfig>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SymbolSpec {
    /// The smoothing symbol with `1 + f_k = exp(iπk(1 + tanh τ))` on the line.
    IndexSymbol { k: i64 },
    /// `Σ_j Σ_k L_{jk} (w - p_j)^{-(k+1)}`.
    Rational { dim: usize, poles: Vec<PoleRecord> },
}

impl SymbolSpec {
    pub fn build(&self, gamma: f64) -> Result<MeroSymbol, Failure> {
        match self {
            SymbolSpec::IndexSymbol { k } => {
                make_index_symbol(*k, gamma).map_err(|e| Failure::Inconclusive(e.into()))
            }
            SymbolSpec::Rational { dim, poles } => {
                if *dim == 0 {
                    return Err(Failure::Input(anyhow::anyhow!(
                        "symbol dimension must be positive"
                    )));
                }
                let poles = poles
                    .iter()
                    .map(PoleRecord::to_pole)
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| Failure::Input(e.into()))?;
                MeroSymbol::rational(*dim, poles).map_err(|e| Failure::Input(e.into()))
            }
        }
    }
}

pub fn load(path: &Path) -> Result<ProblemFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(anyhow::anyhow!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Input(anyhow::anyhow!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let ok =
            r#"{"operation": "index", "symbol": {"kind": "index-symbol", "k": 1}, "gamma": 0.0}"#;
        assert!(serde_json::from_str::<ProblemFile>(ok).is_ok());
        for bad in [
            r#"{"operation": "index", "symbol": {"kind": "index-symbol", "k": 1}, "gamma": 0.0, "extra": 1}"#,
            r#"{"operation": "index", "symbol": {"kind": "index-symbol", "k": 1, "j": 2}, "gamma": 0.0}"#,
            r#"{"operation": "weights", "operator": {"mu": 1, "coeffs": [], "x": 0}, "gamma_range": [0, 1]}"#,
            r#"{"operation": "spectrum"}"#,
        ] {
            assert!(serde_json::from_str::<ProblemFile>(bad).is_err(), "{bad}");
        }
    }
}
