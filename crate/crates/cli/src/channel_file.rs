//! JSON channel description.
//!
//! ```json
//! { "h11": {"mag": 2.031, "phase_rad": -0.6858}, "h12": [1.2, -0.3],
//!   "h21": [0.5, 0.5], "h22": [1.0, 0.0], "noise1": 1.0, "noise2": 1.0 }
//! ```
//! Coefficients are given either as `[re, im]` or in polar form.

use std::fs;
use std::path::Path;

use gic_tin::model::ChannelRealization;
use num_complex::Complex64;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Cartesian([f64; 2]),
    Polar { mag: f64, phase_rad: f64 },
}

impl Coefficient {
    fn value(&self, name: &str) -> Result<Complex64, String> {
        match *self {
            Coefficient::Cartesian([re, im]) => Ok(Complex64::new(re, im)),
            Coefficient::Polar { mag, phase_rad } if mag >= 0.0 => Ok(Complex64::from_polar(mag, phase_rad)),
            Coefficient::Polar { mag, .. } => Err(format!("{name}: negative magnitude {mag}")),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub h11: Coefficient,
    pub h12: Coefficient,
    pub h21: Coefficient,
    pub h22: Coefficient,
    pub noise1: f64,
    pub noise2: f64,
}

impl ChannelFile {
    pub fn parse(text: &str) -> Result<ChannelRealization, String> {
        let file: ChannelFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        file.realization()
    }

    pub fn load(path: &Path) -> Result<ChannelRealization, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn realization(&self) -> Result<ChannelRealization, String> {
        ChannelRealization::new(
            self.h11.value("h11")?,
            self.h12.value("h12")?,
            self.h21.value("h21")?,
            self.h22.value("h22")?,
            self.noise1,
            self.noise2,
        )
        .map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gic_tin::model::scenario::reference_channel;

    #[test]
    fn bundled_fixture_is_the_reference_channel() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/reference.json");
        let ch = ChannelFile::load(&path).unwrap();
        assert_eq!(ch, reference_channel());
    }

    #[test]
    fn cartesian_and_polar() {
        let ch = ChannelFile::parse(
            r#"{"h11": [1, 0], "h12": {"mag": 2, "phase_rad": 0}, "h21": [0, 1], "h22": [3, 4],
                "noise1": 1, "noise2": 0.5}"#,
        )
        .unwrap();
        assert_eq!(ch.gain(0, 1), 4.0);
        assert_eq!(ch.gain(1, 1), 25.0);
        assert_eq!(ch.noise(1), 0.5);
    }

    #[test]
    fn rejects_bad_files() {
        let ok = r#""h11": [1, 0], "h12": [1, 0], "h21": [1, 0], "h22": [1, 0]"#;
        assert!(ChannelFile::parse(&format!("{{{ok}, \"noise1\": 0, \"noise2\": 1}}")).is_err());
        assert!(ChannelFile::parse(&format!("{{{ok}, \"noise1\": -1, \"noise2\": 1}}")).is_err());
        assert!(ChannelFile::parse(&format!("{{{ok}, \"noise1\": 1}}")).is_err());
        assert!(ChannelFile::parse(&format!("{{{ok}, \"noise1\": 1, \"noise2\": 1, \"h33\": [0, 0]}}")).is_err());
        assert!(ChannelFile::parse(r#"{"h11": [1], "h12": [1, 0], "h21": [1, 0], "h22": [1, 0], "noise1": 1, "noise2": 1}"#).is_err());
        assert!(ChannelFile::parse(r#"{"h11": {"mag": -1, "phase_rad": 0}, "h12": [1, 0], "h21": [1, 0], "h22": [1, 0], "noise1": 1, "noise2": 1}"#).is_err());
        assert!(ChannelFile::parse("not json").is_err());
    }
}
