//! Soil retention databases: ingestion, quality control, strata and bootstrap.

mod bootstrap;
mod ingest;
mod qa;
mod strata;

use thiserror::Error;

pub use bootstrap::{bootstrap_split, BootstrapReplica};
pub use ingest::{ingest, ingest_str, write_samples, Schema, ThetaBasis};
pub use qa::{qa_filter, QaOutcome, THETA_FC_WP_MAX};
pub use strata::{
    oc_bin, stratify, SoilOrder, Stratification, StratificationScheme, StratumKey, TempRegime, DEFAULT_OC_EDGES,
};

use crate::ptf::{PredictorRecord, BULK_DENSITY_RANGE};

/// Pressure heads (cm) at which retention is recorded.
pub const ALLOWED_HEADS: [f64; 6] = [60.0, 100.0, 330.0, 1000.0, 2000.0, 15_000.0];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("schema: {0}")]
    Schema(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetentionObservation {
    /// cm
    pub psi: f64,
    /// cm³/cm³
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoilSample {
    pub sample_id: String,
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
    pub predictors: PredictorRecord,
    /// g/cm³ at 330 cm head; mirrored in `predictors.bulk_density`.
    pub bulk_density_330: f64,
    pub soil_order: Option<String>,
    pub temperature_regime: Option<String>,
    pub observations: Vec<RetentionObservation>,
}

impl SoilSample {
    pub fn theta_at_head(&self, psi: f64) -> Option<f64> {
        self.observations.iter().find(|o| o.psi == psi).map(|o| o.theta)
    }
}

/// Why a row, sample or observation was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReasonCode {
    TextureSum,
    MissingField,
    ParseError,
    BdRange,
    ThetaGtOne,
    ThetaNonPositive,
    ThetaGtFcWpMax,
    FcLtWp,
    NoObservations,
}

impl ReasonCode {
    pub fn code(self) -> &'static str {
        match self {
            ReasonCode::TextureSum => "TEXTURE_SUM",
            ReasonCode::MissingField => "MISSING_FIELD",
            ReasonCode::ParseError => "PARSE_ERROR",
            ReasonCode::BdRange => "BD_RANGE",
            ReasonCode::ThetaGtOne => "THETA_GT_1",
            ReasonCode::ThetaNonPositive => "THETA_LE_0",
            ReasonCode::ThetaGtFcWpMax => "THETA_GT_0_6",
            ReasonCode::FcLtWp => "FC_LT_WP",
            ReasonCode::NoObservations => "NO_OBSERVATIONS",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Qa,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Qa => "qa",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemovalEntry {
    pub sample_id: String,
    pub stage: Stage,
    pub reason: ReasonCode,
    pub detail: String,
}

/// Writes removal entries as `sample_id,stage,reason_code,detail`.
pub fn write_removal_log<W: std::io::Write>(out: W, entries: &[RemovalEntry]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample_id", "stage", "reason_code", "detail"])?;
    for e in entries {
        w.write_record([e.sample_id.as_str(), e.stage.name(), e.reason.code(), e.detail.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// Volumetric water content from gravimetric content and bulk density at 330 cm.
pub fn gravimetric_to_volumetric(theta_g: f64, bd330: f64) -> Result<f64, DatasetError> {
    if !(theta_g >= 0.0 && theta_g.is_finite()) {
        return Err(DatasetError::Input(format!("gravimetric water content {theta_g} must be >= 0")));
    }
    if !(BULK_DENSITY_RANGE.0..=BULK_DENSITY_RANGE.1).contains(&bd330) {
        return Err(DatasetError::Input(format!("bulk density {bd330} outside [0.5, 2.0]")));
    }
    Ok(theta_g * bd330)
}

/// Total number of retention points across samples.
pub fn point_count(samples: &[SoilSample]) -> usize {
    samples.iter().map(|s| s.observations.len()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn conversion_examples() {
        assert_relative_eq!(gravimetric_to_volumetric(0.2, 1.5).unwrap(), 0.30, epsilon = 1e-15);
        assert_eq!(gravimetric_to_volumetric(0.0, 1.1).unwrap(), 0.0);
        assert!(gravimetric_to_volumetric(0.2, 2.5).is_err());
        assert!(gravimetric_to_volumetric(-0.1, 1.5).is_err());
    }

    proptest! {
        #[test]
        fn conversion_is_linear(a in 0.0..1.0f64, b in 0.0..1.0f64, k in 0.0..5.0f64, bd in 0.5..2.0f64) {
            let lhs = gravimetric_to_volumetric(a + k * b, bd).unwrap();
            let rhs = gravimetric_to_volumetric(a, bd).unwrap() + k * gravimetric_to_volumetric(b, bd).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }
}
