use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::{DatasetError, SoilSample};
use crate::ptf::{PredictorRecord, UsdaClass};
use crate::retention::{PSI_FIELD_CAPACITY, PSI_WILTING_POINT};

/// Organic carbon bin edges (% OC); n edges give n + 1 bins.
pub const DEFAULT_OC_EDGES: [f64; 7] = [0.1, 0.3, 0.6, 1.0, 2.0, 4.0, 8.0];

macro_rules! named_enum {
    ($(#[$m:meta])* $name:ident { $($v:ident => $s:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name { $($v),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$v),+];

            pub fn name(self) -> &'static str {
                match self { $($name::$v => $s),+ }
            }

            pub fn index(self) -> usize {
                Self::ALL.iter().position(|x| *x == self).unwrap()
            }

            pub fn from_index(i: usize) -> Option<Self> {
                Self::ALL.get(i).copied()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

named_enum!(
    /// USDA soil taxonomy orders.
    SoilOrder {
        Alfisols => "alfisols", Andisols => "andisols", Aridisols => "aridisols",
        Entisols => "entisols", Gelisols => "gelisols", Histosols => "histosols",
        Inceptisols => "inceptisols", Mollisols => "mollisols", Oxisols => "oxisols",
        Spodosols => "spodosols", Ultisols => "ultisols", Vertisols => "vertisols",
    }
);

named_enum!(
    /// Soil temperature regimes.
    TempRegime {
        Frigid => "frigid", Hyperthermic => "hyperthermic", Isohyperthermic => "isohyperthermic",
        Isomesic => "isomesic", Mesic => "mesic", Thermic => "thermic",
    }
);

impl FromStr for SoilOrder {
    type Err = DatasetError;

    /// Accepts "Mollisols" or "mollisol", any case.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let plural = if s.ends_with('s') { s.clone() } else { format!("{s}s") };
        Self::ALL
            .iter()
            .copied()
            .find(|o| o.name() == plural)
            .ok_or_else(|| DatasetError::Input(format!("unknown soil order '{s}'")))
    }
}

impl FromStr for TempRegime {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        Self::ALL
            .iter()
            .copied()
            .find(|r| r.name() == s)
            .ok_or_else(|| DatasetError::Input(format!("unknown temperature regime '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StratumKey {
    Global,
    TextureClass(UsdaClass),
    /// Index into the bins defined by the scheme's edges.
    OcBin(usize),
    SoilOrder(SoilOrder),
    TempRegime(TempRegime),
    /// Pressure head in cm (330 or 15000).
    PressureHead(u32),
}

impl fmt::Display for StratumKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StratumKey::Global => f.write_str("global"),
            StratumKey::TextureClass(c) => write!(f, "texture.{}", c.name().to_ascii_lowercase().replace(' ', "_")),
            StratumKey::OcBin(i) => write!(f, "oc.{i}"),
            StratumKey::SoilOrder(o) => write!(f, "order.{o}"),
            StratumKey::TempRegime(r) => write!(f, "temperature.{r}"),
            StratumKey::PressureHead(h) => write!(f, "head.{h}"),
        }
    }
}

impl FromStr for StratumKey {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DatasetError::Input(format!("bad stratum key '{s}'"));
        if s == "global" {
            return Ok(StratumKey::Global);
        }
        let (kind, value) = s.split_once('.').ok_or_else(bad)?;
        Ok(match kind {
            "texture" => StratumKey::TextureClass(value.parse().map_err(|_| bad())?),
            "oc" => StratumKey::OcBin(value.parse().map_err(|_| bad())?),
            "order" => StratumKey::SoilOrder(value.parse()?),
            "temperature" => StratumKey::TempRegime(value.parse()?),
            "head" => match value {
                "330" => StratumKey::PressureHead(330),
                "15000" => StratumKey::PressureHead(15000),
                _ => return Err(bad()),
            },
            _ => return Err(bad()),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StratificationScheme {
    Global,
    TextureClass,
    OrganicCarbon {
        edges: Vec<f64>,
    },
    SoilOrder,
    TemperatureRegime,
    /// Splits each sample's observations at 330 and 15000 cm into partial samples.
    PressureHead,
}

impl StratificationScheme {
    pub fn organic_carbon() -> Self {
        StratificationScheme::OrganicCarbon { edges: DEFAULT_OC_EDGES.to_vec() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StratificationScheme::Global => "global",
            StratificationScheme::TextureClass => "texture",
            StratificationScheme::OrganicCarbon { .. } => "oc",
            StratificationScheme::SoilOrder => "order",
            StratificationScheme::TemperatureRegime => "temperature",
            StratificationScheme::PressureHead => "pressure_head",
        }
    }

    /// Every stratum the scheme can produce.
    pub fn keys(&self) -> Vec<StratumKey> {
        match self {
            StratificationScheme::Global => vec![StratumKey::Global],
            StratificationScheme::TextureClass => UsdaClass::ALL.iter().map(|c| StratumKey::TextureClass(*c)).collect(),
            StratificationScheme::OrganicCarbon { edges } => (0..=edges.len()).map(StratumKey::OcBin).collect(),
            StratificationScheme::SoilOrder => SoilOrder::ALL.iter().map(|o| StratumKey::SoilOrder(*o)).collect(),
            StratificationScheme::TemperatureRegime => {
                TempRegime::ALL.iter().map(|r| StratumKey::TempRegime(*r)).collect()
            }
            StratificationScheme::PressureHead => vec![
                StratumKey::PressureHead(PSI_FIELD_CAPACITY as u32),
                StratumKey::PressureHead(PSI_WILTING_POINT as u32),
            ],
        }
    }

    /// Stratum of a predictor record, for schemes derivable from predictors alone.
    pub fn key_for_record(&self, rec: &PredictorRecord) -> Option<StratumKey> {
        match self {
            StratificationScheme::Global => Some(StratumKey::Global),
            StratificationScheme::TextureClass => rec.class().ok().map(StratumKey::TextureClass),
            StratificationScheme::OrganicCarbon { edges } => {
                rec.organic_carbon.map(|oc| StratumKey::OcBin(oc_bin(oc, edges)))
            }
            _ => None,
        }
    }

    /// Stratum of a whole sample; `None` for the pressure-head scheme, which works per observation.
    pub fn key_for_sample(&self, s: &SoilSample) -> Option<StratumKey> {
        match self {
            StratificationScheme::SoilOrder => {
                s.soil_order.as_deref().and_then(|o| o.parse().ok()).map(StratumKey::SoilOrder)
            }
            StratificationScheme::TemperatureRegime => {
                s.temperature_regime.as_deref().and_then(|r| r.parse().ok()).map(StratumKey::TempRegime)
            }
            StratificationScheme::PressureHead => None,
            _ => self.key_for_record(&s.predictors),
        }
    }
}

impl FromStr for StratificationScheme {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "global" | "none" => StratificationScheme::Global,
            "texture" | "texture_class" => StratificationScheme::TextureClass,
            "oc" | "organic_carbon" => StratificationScheme::organic_carbon(),
            "order" | "soil_order" => StratificationScheme::SoilOrder,
            "temperature" | "temperature_regime" => StratificationScheme::TemperatureRegime,
            "pressure_head" | "head" => StratificationScheme::PressureHead,
            other => return Err(DatasetError::Config(format!("unknown stratification scheme '{other}'"))),
        })
    }
}

/// Bin index: values below the first edge fall in bin 0, values at or above
/// the last edge in bin `edges.len()`.
pub fn oc_bin(oc: f64, edges: &[f64]) -> usize {
    edges.iter().take_while(|e| oc >= **e).count()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stratification {
    pub strata: BTreeMap<StratumKey, Vec<SoilSample>>,
    /// Samples (or, for pressure heads, observations) the scheme cannot place.
    pub unassigned: Vec<SoilSample>,
}

pub fn stratify(samples: &[SoilSample], scheme: &StratificationScheme) -> Stratification {
    let mut out = Stratification::default();
    for s in samples {
        if *scheme == StratificationScheme::PressureHead {
            let mut rest = s.clone();
            rest.observations.clear();
            for o in &s.observations {
                if o.psi == PSI_FIELD_CAPACITY || o.psi == PSI_WILTING_POINT {
                    let mut part = s.clone();
                    part.observations = vec![*o];
                    out.strata.entry(StratumKey::PressureHead(o.psi as u32)).or_default().push(part);
                } else {
                    rest.observations.push(*o);
                }
            }
            if !rest.observations.is_empty() {
                out.unassigned.push(rest);
            }
            continue;
        }
        match scheme.key_for_sample(s) {
            Some(k) => out.strata.entry(k).or_default().push(s.clone()),
            None => out.unassigned.push(s.clone()),
        }
    }
    out
}
