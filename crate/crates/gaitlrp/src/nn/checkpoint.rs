//! Model checkpoint: JSON with the layer list and decimal parameter arrays.
//! Serialization uses shortest round-trip float formatting, so save/load is
//! bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Network;

const FORMAT: &str = "gaitlrp-checkpoint-v1";

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    network: Network,
}

pub fn save_network(network: &Network, path: impl AsRef<Path>) -> Result<()> {
    let doc = Checkpoint {
        format: FORMAT.to_string(),
        network: network.clone(),
    };
    fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    let text = fs::read_to_string(path)?;
    let doc: Checkpoint = serde_json::from_str(&text)?;
    if doc.format != FORMAT {
        return Err(Error::InvalidConfig(format!(
            "unknown checkpoint format `{}`",
            doc.format
        )));
    }
    Ok(doc.network)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let net = Network::default_architecture(6, 100, 42);
        let f = tempfile::NamedTempFile::new().unwrap();
        save_network(&net, f.path()).unwrap();
        let loaded = load_network(f.path()).unwrap();
        assert_eq!(net, loaded);
        for (a, b) in net.layers().iter().zip(loaded.layers()) {
            if let (Some((wa, _)), Some((wb, _))) = (a.params(), b.params()) {
                for (x, y) in wa.data().iter().zip(wb.data()) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    #[test]
    fn rejects_unknown_format() {
        let f = tempfile::NamedTempFile::new().unwrap();
        fs::write(f.path(), r#"{"format":"other","network":{"layers":[]}}"#).unwrap();
        assert!(load_network(f.path()).is_err());
    }
}
