//! Calibration files: TOML with section headers and one scalar per line.

use std::path::Path;

use crate::calibration::Calibration;
use crate::error::{Error, Result};

pub fn to_config_string(calibration: &Calibration) -> Result<String> {
    toml::to_string(calibration).map_err(|e| Error::Config(e.to_string()))
}

pub fn from_config_str(text: &str) -> Result<Calibration> {
    let calibration: Calibration = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    calibration.validate()?;
    Ok(calibration)
}

pub fn load_calibration(path: &Path) -> Result<Calibration> {
    let text = std::fs::read_to_string(path)?;
    from_config_str(&text)
}

pub fn save_calibration(calibration: &Calibration, path: &Path) -> Result<()> {
    std::fs::write(path, to_config_string(calibration)?)?;
    Ok(())
}
