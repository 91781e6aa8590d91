//! JSON input with path-qualified diagnostics.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::CliError;

/// Reads `path` (or standard input for `-`) and decodes it. Errors name the
/// JSON path of the offending value, e.g. `points[1].Z1.terms`.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = if path.as_os_str() == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf).map_err(|e| CliError::Input(format!("stdin: {e}")))?;
        buf
    } else {
        fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
    };
    parse_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            e.into_inner().to_string()
        } else {
            format!("at {path}: {}", e.into_inner())
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use supermoduli::superconf::ProjectivePoint;

    #[test]
    fn errors_carry_the_json_path() {
        let bad = r#"{"Z1": {"s": 1, "terms": []}, "Z2": {"s": 1, "terms": [[[], "x", 0]]}, "Theta": {"s": 1, "terms": []}}"#;
        let err = parse_json::<ProjectivePoint>(bad).unwrap_err();
        assert!(err.contains("Z2.terms"), "{err}");
    }
}
