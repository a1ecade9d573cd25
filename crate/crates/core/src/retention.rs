//! Closed-form water retention curves.
//!
//! Pressure head `psi` is always a positive suction magnitude in cm of water.
//! Every evaluator returns volumetric water content in cm³/cm³.

use std::fmt;

use thiserror::Error;

/// Pressure head at field capacity (cm).
pub const PSI_FIELD_CAPACITY: f64 = 330.0;
/// Pressure head at the permanent wilting point (cm).
pub const PSI_WILTING_POINT: f64 = 15_000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RetentionError {
    #[error("{family} parameters out of domain: {reason}")]
    ParameterDomain { family: Family, reason: String },
    #[error("pressure head must be finite and >= 0, got {0}")]
    InvalidHead(f64),
}

pub type Result<T> = std::result::Result<T, RetentionError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    VanGenuchten,
    BrooksCorey,
    Campbell,
}

impl Family {
    pub fn code(self) -> &'static str {
        match self {
            Family::VanGenuchten => "VG",
            Family::BrooksCorey => "BC",
            Family::Campbell => "CMP",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Exponent convention of a van Genuchten curve.
///
/// Almost every PTF ties `m = 1 - 1/n`. The Vereecken (1989) regressions were
/// fitted with `m = 1`, for which any `n > 0` yields a valid curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum VgShape {
    #[default]
    Mualem,
    UnitM,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanGenuchtenParams {
    pub theta_r: f64,
    pub theta_s: f64,
    /// 1/cm
    pub alpha: f64,
    pub n: f64,
    pub shape: VgShape,
}

impl VanGenuchtenParams {
    pub fn new(theta_r: f64, theta_s: f64, alpha: f64, n: f64) -> Self {
        Self { theta_r, theta_s, alpha, n, shape: VgShape::Mualem }
    }

    pub fn with_unit_m(theta_r: f64, theta_s: f64, alpha: f64, n: f64) -> Self {
        Self { theta_r, theta_s, alpha, n, shape: VgShape::UnitM }
    }

    pub fn m(&self) -> f64 {
        match self.shape {
            VgShape::Mualem => 1.0 - 1.0 / self.n,
            VgShape::UnitM => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_theta_range(Family::VanGenuchten, self.theta_r, self.theta_s)?;
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(domain(Family::VanGenuchten, format!("alpha = {} must be > 0", self.alpha)));
        }
        let n_ok = match self.shape {
            VgShape::Mualem => self.n > 1.0,
            VgShape::UnitM => self.n > 0.0,
        };
        if !(n_ok && self.n.is_finite()) {
            return Err(domain(Family::VanGenuchten, format!("n = {} out of range", self.n)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrooksCoreyParams {
    pub theta_r: f64,
    pub theta_s: f64,
    /// Air-entry head (cm).
    pub psi_b: f64,
    pub lambda: f64,
}

impl BrooksCoreyParams {
    pub fn new(theta_r: f64, theta_s: f64, psi_b: f64, lambda: f64) -> Self {
        Self { theta_r, theta_s, psi_b, lambda }
    }

    pub fn validate(&self) -> Result<()> {
        check_theta_range(Family::BrooksCorey, self.theta_r, self.theta_s)?;
        if !(self.psi_b > 0.0 && self.psi_b.is_finite()) {
            return Err(domain(Family::BrooksCorey, format!("psi_b = {} must be > 0", self.psi_b)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(domain(Family::BrooksCorey, format!("lambda = {} must be > 0", self.lambda)));
        }
        Ok(())
    }
}

/// Campbell (1974) curve; also carries the Clapp-Hornberger class parameters.
/// Residual water content is zero by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CampbellParams {
    pub theta_s: f64,
    /// Air-entry head (cm).
    pub psi_e: f64,
    pub b: f64,
}

impl CampbellParams {
    pub fn new(theta_s: f64, psi_e: f64, b: f64) -> Self {
        Self { theta_s, psi_e, b }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_s > 0.0 && self.theta_s <= 1.0) {
            return Err(domain(Family::Campbell, format!("theta_s = {} outside (0, 1]", self.theta_s)));
        }
        if !(self.psi_e > 0.0 && self.psi_e.is_finite()) {
            return Err(domain(Family::Campbell, format!("psi_e = {} must be > 0", self.psi_e)));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(domain(Family::Campbell, format!("b = {} must be > 0", self.b)));
        }
        Ok(())
    }
}

/// Parameters of one retention curve, tagged by family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RetentionParams {
    VanGenuchten(VanGenuchtenParams),
    BrooksCorey(BrooksCoreyParams),
    Campbell(CampbellParams),
}

impl RetentionParams {
    pub fn family(&self) -> Family {
        match self {
            RetentionParams::VanGenuchten(_) => Family::VanGenuchten,
            RetentionParams::BrooksCorey(_) => Family::BrooksCorey,
            RetentionParams::Campbell(_) => Family::Campbell,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RetentionParams::VanGenuchten(p) => p.validate(),
            RetentionParams::BrooksCorey(p) => p.validate(),
            RetentionParams::Campbell(p) => p.validate(),
        }
    }

    pub fn theta_s(&self) -> f64 {
        match self {
            RetentionParams::VanGenuchten(p) => p.theta_s,
            RetentionParams::BrooksCorey(p) => p.theta_s,
            RetentionParams::Campbell(p) => p.theta_s,
        }
    }

    /// Lower asymptote of the curve (zero for Campbell).
    pub fn theta_r(&self) -> f64 {
        match self {
            RetentionParams::VanGenuchten(p) => p.theta_r,
            RetentionParams::BrooksCorey(p) => p.theta_r,
            RetentionParams::Campbell(_) => 0.0,
        }
    }
}

impl From<VanGenuchtenParams> for RetentionParams {
    fn from(p: VanGenuchtenParams) -> Self {
        RetentionParams::VanGenuchten(p)
    }
}

impl From<BrooksCoreyParams> for RetentionParams {
    fn from(p: BrooksCoreyParams) -> Self {
        RetentionParams::BrooksCorey(p)
    }
}

impl From<CampbellParams> for RetentionParams {
    fn from(p: CampbellParams) -> Self {
        RetentionParams::Campbell(p)
    }
}

fn domain(family: Family, reason: String) -> RetentionError {
    RetentionError::ParameterDomain { family, reason }
}

fn check_theta_range(family: Family, theta_r: f64, theta_s: f64) -> Result<()> {
    if !(0.0 <= theta_r && theta_r < theta_s && theta_s <= 1.0) {
        return Err(domain(
            family,
            format!("need 0 <= theta_r < theta_s <= 1, got theta_r = {theta_r}, theta_s = {theta_s}"),
        ));
    }
    Ok(())
}

fn check_head(psi: f64) -> Result<()> {
    if psi.is_finite() && psi >= 0.0 {
        Ok(())
    } else {
        Err(RetentionError::InvalidHead(psi))
    }
}

pub fn vg_theta(p: &VanGenuchtenParams, psi: f64) -> Result<f64> {
    p.validate()?;
    check_head(psi)?;
    if psi == 0.0 {
        return Ok(p.theta_s);
    }
    let se = (1.0 + (p.alpha * psi).powf(p.n)).powf(-p.m());
    Ok((p.theta_r + (p.theta_s - p.theta_r) * se).clamp(p.theta_r, p.theta_s))
}

pub fn bc_theta(p: &BrooksCoreyParams, psi: f64) -> Result<f64> {
    p.validate()?;
    check_head(psi)?;
    if psi <= p.psi_b {
        return Ok(p.theta_s);
    }
    let se = (p.psi_b / psi).powf(p.lambda);
    Ok((p.theta_r + (p.theta_s - p.theta_r) * se).clamp(p.theta_r, p.theta_s))
}

pub fn campbell_theta(p: &CampbellParams, psi: f64) -> Result<f64> {
    p.validate()?;
    check_head(psi)?;
    if psi <= p.psi_e {
        return Ok(p.theta_s);
    }
    Ok((p.theta_s * (p.psi_e / psi).powf(1.0 / p.b)).min(p.theta_s))
}

/// Evaluates the curve described by `p` at suction `psi`.
pub fn theta_at(p: &RetentionParams, psi: f64) -> Result<f64> {
    match p {
        RetentionParams::VanGenuchten(v) => vg_theta(v, psi),
        RetentionParams::BrooksCorey(v) => bc_theta(v, psi),
        RetentionParams::Campbell(v) => campbell_theta(v, psi),
    }
}

/// Water content at saturation, field capacity and wilting point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedPoints {
    pub saturation: f64,
    pub field_capacity: f64,
    pub wilting_point: f64,
}

impl DerivedPoints {
    pub fn as_array(&self) -> [f64; 3] {
        [self.saturation, self.field_capacity, self.wilting_point]
    }
}

pub fn derived_points(p: &RetentionParams) -> Result<DerivedPoints> {
    Ok(DerivedPoints {
        saturation: theta_at(p, 0.0)?,
        field_capacity: theta_at(p, PSI_FIELD_CAPACITY)?,
        wilting_point: theta_at(p, PSI_WILTING_POINT)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn vg() -> VanGenuchtenParams {
        VanGenuchtenParams::new(0.1, 0.5, 0.01, 2.0)
    }

    #[test]
    fn vg_examples() {
        assert_eq!(vg_theta(&vg(), 0.0).unwrap(), 0.5);
        assert_abs_diff_eq!(vg_theta(&vg(), 100.0).unwrap(), 0.1 + 0.4 * 2f64.powf(-0.5), epsilon = 1e-12);
        assert_abs_diff_eq!(vg_theta(&vg(), 100.0).unwrap(), 0.38284, epsilon = 1e-5);
        assert!((vg_theta(&vg(), 1e9).unwrap() - 0.1).abs() < 1e-4);
    }

    #[test]
    fn bc_examples() {
        let p = BrooksCoreyParams::new(0.0, 0.4, 10.0, 0.5);
        assert_eq!(bc_theta(&p, 5.0).unwrap(), 0.4);
        assert_abs_diff_eq!(bc_theta(&p, 40.0).unwrap(), 0.2, epsilon = 1e-15);
        let q = BrooksCoreyParams::new(0.05, 0.4, 10.0, 0.5);
        assert_eq!(bc_theta(&q, 10.0).unwrap(), 0.4);
    }

    #[test]
    fn campbell_examples() {
        let p = CampbellParams::new(0.45, 5.0, 4.0);
        assert_eq!(campbell_theta(&p, 5.0).unwrap(), 0.45);
        assert_abs_diff_eq!(campbell_theta(&p, 80.0).unwrap(), 0.225, epsilon = 1e-15);
        assert_eq!(campbell_theta(&p, 0.0).unwrap(), 0.45);
    }

    #[test]
    fn dispatch_matches_family_evaluators() {
        let v: RetentionParams = vg().into();
        assert_eq!(theta_at(&v, 0.0).unwrap(), 0.5);
        let b: RetentionParams = BrooksCoreyParams::new(0.0, 0.4, 10.0, 0.5).into();
        assert_abs_diff_eq!(theta_at(&b, 40.0).unwrap(), 0.2, epsilon = 1e-15);
        let c: RetentionParams = CampbellParams::new(0.45, 5.0, 4.0).into();
        assert_eq!(theta_at(&c, 5.0).unwrap(), 0.45);
        assert_eq!(c.family(), Family::Campbell);
    }

    #[test]
    fn derived_points_examples() {
        let p: RetentionParams = vg().into();
        let d = derived_points(&p).unwrap();
        assert_eq!(d.saturation, 0.5);
        assert_abs_diff_eq!(d.field_capacity, 0.1 + 0.4 * (1.0 + 3.3f64 * 3.3).powf(-0.5), epsilon = 1e-12);
        assert_abs_diff_eq!(d.field_capacity, 0.2160, epsilon = 1e-4);
        assert!(d.field_capacity >= d.wilting_point);
        let c: RetentionParams = CampbellParams::new(0.45, 5.0, 4.0).into();
        assert_eq!(derived_points(&c).unwrap().saturation, 0.45);
    }

    #[test]
    fn unit_m_shape_accepts_small_n() {
        let p = VanGenuchtenParams::with_unit_m(0.05, 0.45, 0.02, 0.8);
        p.validate().unwrap();
        // m = 1: theta_r + (theta_s - theta_r) / (1 + (alpha psi)^n)
        let expected = 0.05 + 0.40 / (1.0 + (0.02f64 * 50.0).powf(0.8));
        assert_abs_diff_eq!(vg_theta(&p, 50.0).unwrap(), expected, epsilon = 1e-15);
        assert!(VanGenuchtenParams::new(0.05, 0.45, 0.02, 0.8).validate().is_err());
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(matches!(
            vg_theta(&VanGenuchtenParams::new(0.5, 0.4, 0.01, 2.0), 1.0),
            Err(RetentionError::ParameterDomain { .. })
        ));
        assert!(bc_theta(&BrooksCoreyParams::new(0.0, 0.4, 0.0, 0.5), 1.0).is_err());
        assert!(campbell_theta(&CampbellParams::new(0.45, 5.0, -1.0), 1.0).is_err());
        assert_eq!(vg_theta(&vg(), -1.0), Err(RetentionError::InvalidHead(-1.0)));
        assert!(vg_theta(&vg(), f64::NAN).is_err());
    }
}
