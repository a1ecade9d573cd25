//! The thirteen pedotransfer functions (PTFs) and their inputs.
//!
//! PTFs are grouped by the predictors they need:
//!
//! | group | predictors                              | members                          |
//! |-------|-----------------------------------------|----------------------------------|
//! | A     | USDA texture class                      | Cosby0, Carsel, Clapp, RosettaH1w |
//! | B     | sand, silt, clay                        | Cosby1, Cosby2, RosettaH2w       |
//! | C     | B + bulk density                        | Rawls, Campbell, RosettaH3w      |
//! | D     | C + organic carbon                      | Wosten, Weynants, Vereecken      |
//!
//! Coefficients live in `data/*.csv` next to this crate and are compiled in.
//! The Rosetta H2w/H3w networks are external assets loaded with
//! [`PtfLibrary::set_ann`] or [`PtfLibrary::load_ann_dir`].

mod ann;
mod regression;
mod table;
mod texture;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

pub use ann::{ann_forward, Activation, AnnSpec, DenseLayer, OutputTransform};
pub use regression::{Inputs as RegressionInputs, Regression, Term, Transform, Variable, MIN_POSITIVE_PREDICTOR};
pub use table::ClassLookupTable;
pub use texture::{classify_texture, normalize_fractions, UsdaClass, TEXTURE_SUM_TOLERANCE};

use crate::retention::{
    theta_at, BrooksCoreyParams, CampbellParams, Family, RetentionError, RetentionParams, VanGenuchtenParams,
};

/// Smallest step used when clamping an out-of-domain regression output.
pub const CLAMP_EPSILON: f64 = 1e-6;

/// Accepted bulk density range (g/cm³).
pub const BULK_DENSITY_RANGE: (f64, f64) = (0.5, 2.0);

#[derive(Debug, Error)]
pub enum PtfError {
    #[error("{ptf}: missing required predictor '{field}'")]
    MissingPredictor { ptf: String, field: String },
    #[error("texture: {0}")]
    Texture(String),
    #[error("{ptf}: no parameters for texture class '{class}'")]
    LookupMissing { ptf: String, class: UsdaClass },
    #[error("ann: {0}")]
    Ann(String),
    #[error("{ptf}: model asset not loaded (supply the network weight file)")]
    AssetMissing { ptf: String },
    #[error("{file}:{line}: {msg}")]
    Data { file: String, line: usize, msg: String },
    #[error("invalid predictor: {0}")]
    InvalidPredictor(String),
    #[error("unknown PTF '{0}'")]
    UnknownPtf(String),
    #[error(transparent)]
    Retention(#[from] RetentionError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl PtfError {
    pub(crate) fn data(file: &str, line: usize, msg: impl Into<String>) -> Self {
        PtfError::Data { file: file.to_string(), line, msg: msg.into() }
    }
}

/// Splits a data file into its `#` comment text and its numbered content lines.
pub(crate) fn data_lines(text: &str) -> (Vec<String>, std::vec::IntoIter<(usize, &str)>) {
    let mut comments = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(c) = t.strip_prefix('#') {
            comments.push(c.trim().to_string());
        } else if !t.is_empty() {
            rows.push((i + 1, t));
        }
    }
    (comments, rows.into_iter())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PtfId {
    Cosby0,
    Carsel,
    Clapp,
    RosettaH1w,
    Cosby1,
    Cosby2,
    RosettaH2w,
    Rawls,
    Campbell,
    RosettaH3w,
    Wosten,
    Weynants,
    Vereecken,
}

impl PtfId {
    pub const ALL: [PtfId; 13] = [
        PtfId::Cosby0,
        PtfId::Carsel,
        PtfId::Clapp,
        PtfId::RosettaH1w,
        PtfId::Cosby1,
        PtfId::Cosby2,
        PtfId::RosettaH2w,
        PtfId::Rawls,
        PtfId::Campbell,
        PtfId::RosettaH3w,
        PtfId::Wosten,
        PtfId::Weynants,
        PtfId::Vereecken,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PtfId::Cosby0 => "Cosby0",
            PtfId::Carsel => "Carsel",
            PtfId::Clapp => "Clapp",
            PtfId::RosettaH1w => "RosettaH1w",
            PtfId::Cosby1 => "Cosby1",
            PtfId::Cosby2 => "Cosby2",
            PtfId::RosettaH2w => "RosettaH2w",
            PtfId::Rawls => "Rawls",
            PtfId::Campbell => "Campbell",
            PtfId::RosettaH3w => "RosettaH3w",
            PtfId::Wosten => "Wosten",
            PtfId::Weynants => "Weynants",
            PtfId::Vereecken => "Vereecken",
        }
    }

    pub fn group(self) -> PtfGroup {
        match self {
            PtfId::Cosby0 | PtfId::Carsel | PtfId::Clapp | PtfId::RosettaH1w => PtfGroup::A,
            PtfId::Cosby1 | PtfId::Cosby2 | PtfId::RosettaH2w => PtfGroup::B,
            PtfId::Rawls | PtfId::Campbell | PtfId::RosettaH3w => PtfGroup::C,
            PtfId::Wosten | PtfId::Weynants | PtfId::Vereecken => PtfGroup::D,
        }
    }

    /// Retention family of the parameters this PTF emits.
    pub fn family(self) -> Family {
        match self {
            PtfId::Cosby0 | PtfId::Clapp | PtfId::Cosby1 | PtfId::Cosby2 | PtfId::Campbell => Family::Campbell,
            PtfId::Rawls => Family::BrooksCorey,
            PtfId::Carsel
            | PtfId::RosettaH1w
            | PtfId::RosettaH2w
            | PtfId::RosettaH3w
            | PtfId::Wosten
            | PtfId::Weynants
            | PtfId::Vereecken => Family::VanGenuchten,
        }
    }

    fn data_file(self) -> Option<&'static str> {
        Some(match self {
            PtfId::Cosby0 => include_str!("../../data/cosby0.csv"),
            PtfId::Carsel => include_str!("../../data/carsel.csv"),
            PtfId::Clapp => include_str!("../../data/clapp.csv"),
            PtfId::RosettaH1w => include_str!("../../data/rosetta_h1w.csv"),
            PtfId::Cosby1 => include_str!("../../data/cosby1.csv"),
            PtfId::Cosby2 => include_str!("../../data/cosby2.csv"),
            PtfId::Rawls => include_str!("../../data/rawls.csv"),
            PtfId::Campbell => include_str!("../../data/campbell.csv"),
            PtfId::Wosten => include_str!("../../data/wosten.csv"),
            PtfId::Weynants => include_str!("../../data/weynants.csv"),
            PtfId::Vereecken => include_str!("../../data/vereecken.csv"),
            PtfId::RosettaH2w | PtfId::RosettaH3w => return None,
        })
    }

    /// Default asset file name looked up by [`PtfLibrary::load_ann_dir`].
    pub fn ann_file_name(self) -> Option<&'static str> {
        match self {
            PtfId::RosettaH2w => Some("rosetta_h2w.ann"),
            PtfId::RosettaH3w => Some("rosetta_h3w.ann"),
            _ => None,
        }
    }
}

impl fmt::Display for PtfId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PtfId {
    type Err = PtfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_lowercase().replace(['-', '_', ' '], "");
        let norm = norm.strip_prefix("rosetta3").map(|r| format!("rosetta{r}")).unwrap_or(norm);
        PtfId::ALL
            .into_iter()
            .find(|id| {
                let n = id.name().to_lowercase();
                n == norm || n.strip_prefix("rosetta") == Some(norm.as_str())
            })
            .ok_or_else(|| PtfError::UnknownPtf(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PtfGroup {
    A,
    B,
    C,
    D,
}

impl PtfGroup {
    pub const ALL: [PtfGroup; 4] = [PtfGroup::A, PtfGroup::B, PtfGroup::C, PtfGroup::D];

    pub fn members(self) -> Vec<PtfId> {
        PtfId::ALL.into_iter().filter(|id| id.group() == self).collect()
    }

    pub fn required_inputs(self) -> &'static [Predictor] {
        use Predictor::*;
        match self {
            PtfGroup::A => &[TextureClass],
            PtfGroup::B => &[Sand, Silt, Clay],
            PtfGroup::C => &[Sand, Silt, Clay, BulkDensity],
            PtfGroup::D => &[Sand, Silt, Clay, BulkDensity, OrganicCarbon],
        }
    }
}

impl FromStr for PtfGroup {
    type Err = PtfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(PtfGroup::A),
            "B" => Ok(PtfGroup::B),
            "C" => Ok(PtfGroup::C),
            "D" => Ok(PtfGroup::D),
            _ => Err(PtfError::UnknownPtf(format!("group '{s}'"))),
        }
    }
}

impl fmt::Display for PtfGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Predictor {
    /// Satisfied by an explicit class or by sand/silt/clay.
    TextureClass,
    Sand,
    Silt,
    Clay,
    BulkDensity,
    OrganicCarbon,
}

impl Predictor {
    pub fn name(self) -> &'static str {
        match self {
            Predictor::TextureClass => "texture_class",
            Predictor::Sand => "sand",
            Predictor::Silt => "silt",
            Predictor::Clay => "clay",
            Predictor::BulkDensity => "bulk_density",
            Predictor::OrganicCarbon => "organic_carbon",
        }
    }
}

/// Predictors needed by `id`. Wosten's topsoil flag is not listed; it defaults
/// to topsoil when a record does not say otherwise.
pub fn required_inputs(id: PtfId) -> &'static [Predictor] {
    id.group().required_inputs()
}

/// Sand, silt and clay mass percentages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Texture {
    pub sand: f64,
    pub silt: f64,
    pub clay: f64,
}

/// The predictor vector one PTF evaluation sees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorRecord {
    pub texture: Option<Texture>,
    /// g/cm³, at 330 cm head.
    pub bulk_density: Option<f64>,
    /// mass %
    pub organic_carbon: Option<f64>,
    pub texture_class: Option<UsdaClass>,
    /// Wosten topsoil indicator.
    pub topsoil: bool,
}

impl Default for PredictorRecord {
    fn default() -> Self {
        Self { texture: None, bulk_density: None, organic_carbon: None, texture_class: None, topsoil: true }
    }
}

impl PredictorRecord {
    pub fn from_texture(sand: f64, silt: f64, clay: f64) -> Self {
        Self { texture: Some(Texture { sand, silt, clay }), ..Default::default() }
    }

    pub fn from_class(class: UsdaClass) -> Self {
        Self { texture_class: Some(class), ..Default::default() }
    }

    pub fn with_bulk_density(mut self, bd: f64) -> Self {
        self.bulk_density = Some(bd);
        self
    }

    pub fn with_organic_carbon(mut self, oc: f64) -> Self {
        self.organic_carbon = Some(oc);
        self
    }

    /// Explicit class if present, otherwise derived from the texture.
    pub fn class(&self) -> Result<UsdaClass, PtfError> {
        match (self.texture_class, self.texture) {
            (Some(c), _) => Ok(c),
            (None, Some(t)) => classify_texture(t.sand, t.silt, t.clay),
            (None, None) => Err(PtfError::Texture("no texture class or fractions".into())),
        }
    }

    pub fn has(&self, p: Predictor) -> bool {
        match p {
            Predictor::TextureClass => self.texture_class.is_some() || self.texture.is_some(),
            Predictor::Sand | Predictor::Silt | Predictor::Clay => self.texture.is_some(),
            Predictor::BulkDensity => self.bulk_density.is_some(),
            Predictor::OrganicCarbon => self.organic_carbon.is_some(),
        }
    }

    /// First predictor required by `id` that this record lacks.
    pub fn missing_for(&self, id: PtfId) -> Option<Predictor> {
        required_inputs(id).iter().copied().find(|p| !self.has(*p))
    }

    pub fn validate(&self) -> Result<(), PtfError> {
        if let Some(t) = self.texture {
            normalize_fractions(t.sand, t.silt, t.clay)?;
        }
        if let Some(bd) = self.bulk_density {
            if !(BULK_DENSITY_RANGE.0..=BULK_DENSITY_RANGE.1).contains(&bd) {
                return Err(PtfError::InvalidPredictor(format!("bulk density {bd} outside [0.5, 2.0]")));
            }
        }
        if let Some(oc) = self.organic_carbon {
            if !(oc >= 0.0 && oc.is_finite()) {
                return Err(PtfError::InvalidPredictor(format!("organic carbon {oc} must be >= 0")));
            }
        }
        Ok(())
    }

    fn regression_inputs(&self) -> Result<RegressionInputs, PtfError> {
        let (sand, silt, clay) = match self.texture {
            Some(t) => {
                let (s, i, c) = normalize_fractions(t.sand, t.silt, t.clay)?;
                (Some(s), Some(i), Some(c))
            }
            None => (None, None, None),
        };
        Ok(RegressionInputs {
            sand,
            silt,
            clay,
            bulk_density: self.bulk_density,
            organic_carbon: self.organic_carbon,
            topsoil: self.topsoil,
        })
    }
}

/// Parameters emitted by a PTF, with notes on any clamping applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub params: RetentionParams,
    pub clamped: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct CampbellConstants {
    d_clay_mm: f64,
    d_silt_mm: f64,
    d_sand_mm: f64,
    psi_es_coef: f64,
    b_psi_coef: f64,
    b_sigma_coef: f64,
    bd_ref: f64,
    bd_exponent: f64,
    particle_density: f64,
    cm_per_jkg: f64,
}

impl CampbellConstants {
    fn parse(text: &str) -> Result<Self, PtfError> {
        let (_, mut rows) = data_lines(text);
        let file = "Campbell";
        match rows.next() {
            Some((_, "name,value")) => {}
            _ => return Err(PtfError::data(file, 0, "expected header 'name,value'")),
        }
        let mut values = BTreeMap::new();
        for (line, row) in rows {
            let (k, v) = row.split_once(',').ok_or_else(|| PtfError::data(file, line, "expected name,value"))?;
            let v: f64 = v.trim().parse().map_err(|_| PtfError::data(file, line, format!("bad number '{v}'")))?;
            values.insert(k.trim().to_string(), v);
        }
        let get =
            |k: &str| values.get(k).copied().ok_or_else(|| PtfError::data(file, 0, format!("missing constant '{k}'")));
        Ok(Self {
            d_clay_mm: get("d_clay_mm")?,
            d_silt_mm: get("d_silt_mm")?,
            d_sand_mm: get("d_sand_mm")?,
            psi_es_coef: get("psi_es_coef")?,
            b_psi_coef: get("b_psi_coef")?,
            b_sigma_coef: get("b_sigma_coef")?,
            bd_ref: get("bd_ref")?,
            bd_exponent: get("bd_exponent")?,
            particle_density: get("particle_density")?,
            cm_per_jkg: get("cm_per_jkg")?,
        })
    }

    /// Returns (theta_s, psi_e [cm], b).
    fn evaluate(&self, sand: f64, silt: f64, clay: f64, bd: f64) -> (f64, f64, f64) {
        let parts = [(clay / 100.0, self.d_clay_mm), (silt / 100.0, self.d_silt_mm), (sand / 100.0, self.d_sand_mm)];
        let a: f64 = parts.iter().map(|(m, d)| m * d.ln()).sum();
        let second: f64 = parts.iter().map(|(m, d)| m * d.ln().powi(2)).sum();
        let dg = a.exp();
        let sigma_g = (second - a * a).max(0.0).sqrt().exp();
        let psi_es = self.psi_es_coef * dg.powf(-0.5);
        let b = self.b_psi_coef * psi_es + self.b_sigma_coef * sigma_g;
        let psi_e = psi_es.abs() * (bd / self.bd_ref).powf(self.bd_exponent * b) * self.cm_per_jkg;
        let theta_s = 1.0 - bd / self.particle_density;
        (theta_s, psi_e, b)
    }
}

#[derive(Debug, Clone)]
enum PtfModel {
    Table(ClassLookupTable),
    Regression(Regression),
    Campbell(CampbellConstants),
    Ann(AnnSpec),
}

/// All PTF definitions, immutable once built.
#[derive(Debug, Clone)]
pub struct PtfLibrary {
    models: BTreeMap<PtfId, PtfModel>,
    versions: BTreeMap<PtfId, String>,
}

impl PtfLibrary {
    /// Loads the compiled-in coefficient files. Rosetta H2w/H3w stay unavailable
    /// until their networks are supplied.
    pub fn builtin() -> Result<Self, PtfError> {
        let mut models = BTreeMap::new();
        let mut versions = BTreeMap::new();
        for id in PtfId::ALL {
            let Some(text) = id.data_file() else { continue };
            let (comments, _) = data_lines(text);
            let version = comments
                .iter()
                .find_map(|c| c.strip_prefix("version:").map(|v| v.trim().to_string()))
                .unwrap_or_else(|| "unversioned".into());
            versions.insert(id, version);
            let model = match id {
                PtfId::Cosby0 | PtfId::Carsel | PtfId::Clapp | PtfId::RosettaH1w => {
                    PtfModel::Table(ClassLookupTable::parse(id.name(), text)?)
                }
                PtfId::Campbell => PtfModel::Campbell(CampbellConstants::parse(text)?),
                _ => PtfModel::Regression(Regression::parse(id.name(), text)?),
            };
            models.insert(id, model);
        }
        Ok(Self { models, versions })
    }

    /// Registers a Rosetta network. H2w expects inputs (sand, silt, clay);
    /// H3w expects (sand, silt, clay, bulk density). Both must produce
    /// (theta_r, theta_s, alpha, n) after their output transforms.
    pub fn set_ann(&mut self, id: PtfId, spec: AnnSpec) -> Result<(), PtfError> {
        let n_in = match id {
            PtfId::RosettaH2w => 3,
            PtfId::RosettaH3w => 4,
            _ => return Err(PtfError::Ann(format!("{id} is not a network-backed PTF"))),
        };
        spec.validate()?;
        if spec.n_inputs() != n_in || spec.n_outputs() != 4 {
            return Err(PtfError::Ann(format!(
                "{id} needs {n_in} inputs and 4 outputs, spec has {} and {}",
                spec.n_inputs(),
                spec.n_outputs()
            )));
        }
        self.models.insert(id, PtfModel::Ann(spec));
        self.versions.insert(id, "external".into());
        Ok(())
    }

    /// Loads `rosetta_h2w.ann` / `rosetta_h3w.ann` from `dir` when present.
    /// Returns the ids that were loaded.
    pub fn load_ann_dir(&mut self, dir: &Path) -> Result<Vec<PtfId>, PtfError> {
        let mut loaded = Vec::new();
        for id in [PtfId::RosettaH2w, PtfId::RosettaH3w] {
            let path = dir.join(id.ann_file_name().unwrap());
            if !path.exists() {
                continue;
            }
            let text = std::fs::read_to_string(&path)
                .map_err(|source| PtfError::Io { path: path.display().to_string(), source })?;
            let spec = AnnSpec::parse(&text).map_err(|e| PtfError::Ann(format!("{}: {e}", path.display())))?;
            self.set_ann(id, spec)?;
            loaded.push(id);
        }
        Ok(loaded)
    }

    /// Replaces a class table (Group A members only).
    pub fn set_class_table(&mut self, id: PtfId, table: ClassLookupTable) -> Result<(), PtfError> {
        if id.group() != PtfGroup::A {
            return Err(PtfError::UnknownPtf(format!("{id} is not a class-table PTF")));
        }
        self.models.insert(id, PtfModel::Table(table));
        Ok(())
    }

    pub fn is_available(&self, id: PtfId) -> bool {
        self.models.contains_key(&id)
    }

    pub fn available(&self) -> Vec<PtfId> {
        self.models.keys().copied().collect()
    }

    /// `(ptf, version)` of every loaded coefficient set.
    pub fn versions(&self) -> impl Iterator<Item = (PtfId, &str)> {
        self.versions.iter().map(|(k, v)| (*k, v.as_str()))
    }

    pub fn class_table(&self, id: PtfId) -> Option<&ClassLookupTable> {
        match self.models.get(&id) {
            Some(PtfModel::Table(t)) => Some(t),
            _ => None,
        }
    }

    /// Retention parameters predicted by `id` for `rec`.
    pub fn predict(&self, id: PtfId, rec: &PredictorRecord) -> Result<Prediction, PtfError> {
        if let Some(p) = rec.missing_for(id) {
            return Err(PtfError::MissingPredictor { ptf: id.name().into(), field: p.name().into() });
        }
        let model = self.models.get(&id).ok_or_else(|| PtfError::AssetMissing { ptf: id.name().into() })?;
        let mut clamped = Vec::new();
        let params = match model {
            PtfModel::Table(t) => t.lookup(rec.class()?)?,
            PtfModel::Regression(r) => {
                let out = r.evaluate(&rec.regression_inputs()?)?;
                if out.floored {
                    clamped.push(format!("predictor floored at {MIN_POSITIVE_PREDICTOR} inside ln or reciprocal"));
                }
                let get = |k: &str| {
                    out.get(k).ok_or_else(|| PtfError::data(id.name(), 0, format!("coefficient file lacks '{k}'")))
                };
                match id.family() {
                    Family::Campbell => campbell_params(get("theta_s")?, get("psi_e")?, get("b")?, &mut clamped),
                    Family::BrooksCorey => {
                        bc_params(get("theta_r")?, get("theta_s")?, get("psi_b")?, get("lambda")?, &mut clamped)
                    }
                    Family::VanGenuchten => {
                        let unit_m = id == PtfId::Vereecken;
                        vg_params(get("theta_r")?, get("theta_s")?, get("alpha")?, get("n")?, unit_m, &mut clamped)
                    }
                }
            }
            PtfModel::Campbell(c) => {
                let inputs = rec.regression_inputs()?;
                let (theta_s, psi_e, b) = c.evaluate(
                    inputs.sand.unwrap(),
                    inputs.silt.unwrap(),
                    inputs.clay.unwrap(),
                    inputs.bulk_density.unwrap(),
                );
                campbell_params(theta_s, psi_e, b, &mut clamped)
            }
            PtfModel::Ann(spec) => {
                let inputs = rec.regression_inputs()?;
                let mut x = vec![inputs.sand.unwrap(), inputs.silt.unwrap(), inputs.clay.unwrap()];
                if id == PtfId::RosettaH3w {
                    x.push(inputs.bulk_density.unwrap());
                }
                let y = ann_forward(spec, &x)?;
                vg_params(y[0], y[1], y[2], y[3], false, &mut clamped)
            }
        };
        params.validate()?;
        Ok(Prediction { params, clamped })
    }

    /// Water content predicted by `id` at suction `psi` (cm).
    pub fn predict_theta(&self, id: PtfId, rec: &PredictorRecord, psi: f64) -> Result<f64, PtfError> {
        let p = self.predict(id, rec)?;
        Ok(theta_at(&p.params, psi)?)
    }
}

fn clamp_theta_pair(theta_r: f64, theta_s: f64, clamped: &mut Vec<String>) -> (f64, f64) {
    let mut ts = theta_s;
    if !(ts <= 1.0) {
        clamped.push(format!("theta_s {theta_s} -> 1"));
        ts = 1.0;
    }
    if !(ts > CLAMP_EPSILON) {
        clamped.push(format!("theta_s {theta_s} -> {CLAMP_EPSILON}"));
        ts = 2.0 * CLAMP_EPSILON;
    }
    let mut tr = theta_r;
    if !(tr >= 0.0) {
        clamped.push(format!("theta_r {theta_r} -> 0"));
        tr = 0.0;
    }
    if tr >= ts {
        clamped.push(format!("theta_r {theta_r} -> theta_s - {CLAMP_EPSILON}"));
        tr = ts - CLAMP_EPSILON;
    }
    (tr, ts)
}

fn positive(name: &str, v: f64, clamped: &mut Vec<String>) -> f64 {
    if v > 0.0 && v.is_finite() {
        v
    } else {
        clamped.push(format!("{name} {v} -> {CLAMP_EPSILON}"));
        CLAMP_EPSILON
    }
}

fn campbell_params(theta_s: f64, psi_e: f64, b: f64, clamped: &mut Vec<String>) -> RetentionParams {
    let (_, ts) = clamp_theta_pair(0.0, theta_s, clamped);
    CampbellParams::new(ts, positive("psi_e", psi_e, clamped), positive("b", b, clamped)).into()
}

fn bc_params(theta_r: f64, theta_s: f64, psi_b: f64, lambda: f64, clamped: &mut Vec<String>) -> RetentionParams {
    let (tr, ts) = clamp_theta_pair(theta_r, theta_s, clamped);
    BrooksCoreyParams::new(tr, ts, positive("psi_b", psi_b, clamped), positive("lambda", lambda, clamped)).into()
}

fn vg_params(
    theta_r: f64,
    theta_s: f64,
    alpha: f64,
    n: f64,
    unit_m: bool,
    clamped: &mut Vec<String>,
) -> RetentionParams {
    let (tr, ts) = clamp_theta_pair(theta_r, theta_s, clamped);
    let alpha = positive("alpha", alpha, clamped);
    if unit_m {
        VanGenuchtenParams::with_unit_m(tr, ts, alpha, positive("n", n, clamped)).into()
    } else {
        let n = if n > 1.0 && n.is_finite() {
            n
        } else {
            clamped.push(format!("n {n} -> 1 + {CLAMP_EPSILON}"));
            1.0 + CLAMP_EPSILON
        };
        VanGenuchtenParams::new(tr, ts, alpha, n).into()
    }
}
