use std::collections::BTreeMap;
use std::path::Path;

use super::{
    gravimetric_to_volumetric, DatasetError, ReasonCode, RemovalEntry, RetentionObservation, SoilSample, Stage,
    ALLOWED_HEADS,
};
use crate::ptf::{normalize_fractions, PredictorRecord, Texture, UsdaClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Field {
    SampleId,
    Sand,
    Silt,
    Clay,
    BulkDensity,
    OrganicCarbon,
    Latitude,
    Longitude,
    SoilOrder,
    TemperatureRegime,
    TextureClass,
    Topsoil,
}

impl Field {
    const ALL: [Field; 12] = [
        Field::SampleId,
        Field::Latitude,
        Field::Longitude,
        Field::Sand,
        Field::Silt,
        Field::Clay,
        Field::BulkDensity,
        Field::OrganicCarbon,
        Field::TextureClass,
        Field::SoilOrder,
        Field::TemperatureRegime,
        Field::Topsoil,
    ];

    fn key(self) -> &'static str {
        match self {
            Field::SampleId => "sample_id",
            Field::Sand => "sand",
            Field::Silt => "silt",
            Field::Clay => "clay",
            Field::BulkDensity => "bulk_density",
            Field::OrganicCarbon => "organic_carbon",
            Field::Latitude => "latitude",
            Field::Longitude => "longitude",
            Field::SoilOrder => "soil_order",
            Field::TemperatureRegime => "temperature_regime",
            Field::TextureClass => "texture_class",
            Field::Topsoil => "topsoil",
        }
    }

    fn mandatory(self) -> bool {
        matches!(self, Field::SampleId | Field::Sand | Field::Silt | Field::Clay | Field::BulkDensity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThetaBasis {
    #[default]
    Volumetric,
    /// g/g; converted with the sample's bulk density at 330 cm.
    Gravimetric,
}

impl ThetaBasis {
    fn parse(s: &str) -> Result<Self, DatasetError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "volumetric" => Ok(ThetaBasis::Volumetric),
            "gravimetric" => Ok(ThetaBasis::Gravimetric),
            other => Err(DatasetError::Schema(format!("unknown basis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ThetaColumn {
    psi: f64,
    column: String,
    basis: ThetaBasis,
}

/// Column mapping for a delimited sample file, read from `key = value` lines.
///
/// ```text
/// delimiter = ,             # or "tab"; default: detected from the header
/// sample_id = pedon_key     # mandatory: sample_id, sand, silt, clay, bulk_density
/// sand = sand_total
/// ...
/// theta_330 = w3cld         # one line per pressure head present in the file
/// basis = gravimetric       # default basis for every theta column
/// basis_15000 = volumetric  # per-head override
/// theta_scale = 0.01        # multiplies raw theta values (e.g. percent)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    delimiter: Option<u8>,
    columns: BTreeMap<Field, String>,
    thetas: Vec<ThetaColumn>,
    theta_scale: f64,
}

impl Schema {
    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let mut delimiter = None;
        let mut columns = BTreeMap::new();
        let mut theta_cols: BTreeMap<u64, String> = BTreeMap::new();
        let mut bases: BTreeMap<u64, ThetaBasis> = BTreeMap::new();
        let mut default_basis = ThetaBasis::Volumetric;
        let mut theta_scale = 1.0;
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| DatasetError::Schema(format!("line {}: expected key = value", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if let Some(f) = Field::ALL.into_iter().find(|f| f.key() == k) {
                columns.insert(f, v.to_string());
            } else if k == "delimiter" {
                delimiter = Some(match v {
                    "tab" | "\\t" => b'\t',
                    s if s.len() == 1 => s.as_bytes()[0],
                    _ => return Err(DatasetError::Schema(format!("line {}: bad delimiter '{v}'", i + 1))),
                });
            } else if k == "basis" {
                default_basis = ThetaBasis::parse(v)?;
            } else if k == "theta_scale" {
                theta_scale =
                    v.parse().map_err(|_| DatasetError::Schema(format!("line {}: bad theta_scale '{v}'", i + 1)))?;
            } else if let Some(h) = k.strip_prefix("theta_") {
                theta_cols.insert(parse_head(h, i + 1)?, v.to_string());
            } else if let Some(h) = k.strip_prefix("basis_") {
                bases.insert(parse_head(h, i + 1)?, ThetaBasis::parse(v)?);
            } else {
                return Err(DatasetError::Schema(format!("line {}: unknown key '{k}'", i + 1)));
            }
        }
        for f in Field::ALL.into_iter().filter(|f| f.mandatory()) {
            if !columns.contains_key(&f) {
                return Err(DatasetError::Schema(format!("missing mandatory mapping '{}'", f.key())));
            }
        }
        if theta_cols.is_empty() {
            return Err(DatasetError::Schema("no theta_<head> column mapped".into()));
        }
        if let Some(h) = bases.keys().find(|h| !theta_cols.contains_key(h)) {
            return Err(DatasetError::Schema(format!("basis_{h} given without theta_{h}")));
        }
        let thetas = theta_cols
            .into_iter()
            .map(|(h, column)| ThetaColumn {
                psi: h as f64,
                column,
                basis: bases.get(&h).copied().unwrap_or(default_basis),
            })
            .collect();
        Ok(Self { delimiter, columns, thetas, theta_scale })
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        Self::parse(&read(path)?)
    }

    /// Schema of the files written by [`write_samples`].
    pub fn canonical() -> Self {
        Self {
            delimiter: Some(b','),
            columns: Field::ALL.into_iter().map(|f| (f, f.key().to_string())).collect(),
            thetas: ALLOWED_HEADS
                .iter()
                .map(|h| ThetaColumn { psi: *h, column: format!("theta_{h}"), basis: ThetaBasis::Volumetric })
                .collect(),
            theta_scale: 1.0,
        }
    }
}

fn parse_head(h: &str, line: usize) -> Result<u64, DatasetError> {
    let v: u64 = h.parse().map_err(|_| DatasetError::Schema(format!("line {line}: bad pressure head '{h}'")))?;
    if !ALLOWED_HEADS.contains(&(v as f64)) {
        return Err(DatasetError::Schema(format!("line {line}: pressure head {v} not in {ALLOWED_HEADS:?}")));
    }
    Ok(v)
}

fn read(path: &Path) -> Result<String, DatasetError> {
    std::fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.display().to_string(), source })
}

/// Reads a sample file. Rows that cannot become a [`SoilSample`] are reported
/// in the returned log; row order is preserved.
pub fn ingest(path: &Path, schema: &Schema) -> Result<(Vec<SoilSample>, Vec<RemovalEntry>), DatasetError> {
    ingest_str(&read(path)?, schema)
}

pub fn ingest_str(text: &str, schema: &Schema) -> Result<(Vec<SoilSample>, Vec<RemovalEntry>), DatasetError> {
    let delimiter = schema.delimiter.unwrap_or_else(|| {
        let header = text.lines().next().unwrap_or("");
        if header.contains('\t') {
            b'\t'
        } else {
            b','
        }
    });
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| DatasetError::Schema(format!("header: {e}")))?.clone();
    let index_of = |name: &str| header.iter().position(|h| h == name);
    let mut cols: BTreeMap<Field, usize> = BTreeMap::new();
    for (f, name) in &schema.columns {
        match index_of(name) {
            Some(i) => {
                cols.insert(*f, i);
            }
            None if f.mandatory() => {
                return Err(DatasetError::Schema(format!("column '{name}' ({}) not in header", f.key())));
            }
            None => {}
        }
    }
    let mut thetas = Vec::new();
    for t in &schema.thetas {
        let i = index_of(&t.column)
            .ok_or_else(|| DatasetError::Schema(format!("column '{}' (theta_{}) not in header", t.column, t.psi)))?;
        thetas.push((t, i));
    }

    let mut samples = Vec::new();
    let mut log = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                log.push(reject(format!("line {line}"), ReasonCode::ParseError, e.to_string()));
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        let row_label = format!("line {line}");
        if record.len() != header.len() {
            log.push(reject(
                row_label,
                ReasonCode::ParseError,
                format!("line {line}: expected {} fields, found {}", header.len(), record.len()),
            ));
            continue;
        }
        let cell = |f: Field| cols.get(&f).map(|i| &record[*i]).filter(|s| !s.is_empty());
        let id = match cell(Field::SampleId) {
            Some(id) => id.to_string(),
            None => {
                log.push(reject(row_label, ReasonCode::MissingField, "sample_id".into()));
                continue;
            }
        };
        match build_sample(&id, &cell, &record, &thetas, schema.theta_scale) {
            Ok(s) => samples.push(s),
            Err((reason, detail)) => log.push(reject(id, reason, detail)),
        }
    }
    Ok((samples, log))
}

fn reject(sample_id: String, reason: ReasonCode, detail: String) -> RemovalEntry {
    RemovalEntry { sample_id, stage: Stage::Ingest, reason, detail }
}

fn build_sample<'r>(
    id: &str,
    cell: &dyn Fn(Field) -> Option<&'r str>,
    record: &'r csv::StringRecord,
    thetas: &[(&ThetaColumn, usize)],
    theta_scale: f64,
) -> Result<SoilSample, (ReasonCode, String)> {
    let num = |f: Field| -> Result<Option<f64>, (ReasonCode, String)> {
        match cell(f) {
            None => Ok(None),
            Some(s) => s.parse::<f64>().map(Some).map_err(|_| (ReasonCode::ParseError, format!("{} = '{s}'", f.key()))),
        }
    };
    let required = |f: Field| -> Result<f64, (ReasonCode, String)> {
        num(f)?.ok_or_else(|| (ReasonCode::MissingField, f.key().to_string()))
    };
    let (sand, silt, clay) = (required(Field::Sand)?, required(Field::Silt)?, required(Field::Clay)?);
    let bd = required(Field::BulkDensity)?;
    let (sand, silt, clay) =
        normalize_fractions(sand, silt, clay).map_err(|e| (ReasonCode::TextureSum, e.to_string()))?;
    let organic_carbon = num(Field::OrganicCarbon)?;
    let texture_class = match cell(Field::TextureClass) {
        None => None,
        Some(s) => {
            Some(s.parse::<UsdaClass>().map_err(|_| (ReasonCode::ParseError, format!("texture_class = '{s}'")))?)
        }
    };
    let topsoil = match cell(Field::Topsoil).map(|s| s.to_ascii_lowercase()) {
        None => true,
        Some(s) => match s.as_str() {
            "1" | "true" | "topsoil" | "yes" => true,
            "0" | "false" | "subsoil" | "no" => false,
            _ => return Err((ReasonCode::ParseError, format!("topsoil = '{s}'"))),
        },
    };
    let mut observations = Vec::new();
    for (t, i) in thetas {
        let raw = &record[*i];
        if raw.is_empty() {
            continue;
        }
        let v: f64 =
            raw.parse::<f64>().map_err(|_| (ReasonCode::ParseError, format!("{} = '{raw}'", t.column)))? * theta_scale;
        let theta = match t.basis {
            ThetaBasis::Volumetric => v,
            // out-of-range densities are left for the quality filter to remove
            ThetaBasis::Gravimetric => gravimetric_to_volumetric(v, bd).unwrap_or(v * bd),
        };
        observations.push(RetentionObservation { psi: t.psi, theta });
    }
    let predictors = PredictorRecord {
        texture: Some(Texture { sand, silt, clay }),
        bulk_density: Some(bd),
        organic_carbon,
        texture_class,
        topsoil,
    };
    Ok(SoilSample {
        sample_id: id.to_string(),
        latitude: num(Field::Latitude)?,
        longitude: num(Field::Longitude)?,
        predictors,
        bulk_density_330: bd,
        soil_order: cell(Field::SoilOrder).map(str::to_string),
        temperature_regime: cell(Field::TemperatureRegime).map(str::to_string),
        observations,
    })
}

/// Writes samples in the canonical layout read back by [`Schema::canonical`].
pub fn write_samples<W: std::io::Write>(out: W, samples: &[SoilSample]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = Field::ALL.iter().map(|f| f.key().to_string()).collect();
    header.extend(ALLOWED_HEADS.iter().map(|h| format!("theta_{h}")));
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in samples {
        let p = &s.predictors;
        let t = p.texture;
        let mut row = vec![
            s.sample_id.clone(),
            opt(s.latitude),
            opt(s.longitude),
            opt(t.map(|t| t.sand)),
            opt(t.map(|t| t.silt)),
            opt(t.map(|t| t.clay)),
            s.bulk_density_330.to_string(),
            opt(p.organic_carbon),
            p.texture_class.map(|c| c.name().to_string()).unwrap_or_default(),
            s.soil_order.clone().unwrap_or_default(),
            s.temperature_regime.clone().unwrap_or_default(),
            if p.topsoil { "1".into() } else { "0".into() },
        ];
        row.extend(ALLOWED_HEADS.iter().map(|h| opt(s.theta_at_head(*h))));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const SCHEMA: &str = "sample_id = id\nsand = sa\nsilt = si\nclay = cl\nbulk_density = bd\norganic_carbon = oc\n\
                          theta_330 = w330\ntheta_15000 = w15k\n";

    #[test]
    fn three_valid_rows() {
        let schema = Schema::parse(SCHEMA).unwrap();
        let data = "id,sa,si,cl,bd,oc,w330,w15k\na,40,40,20,1.4,1.0,0.30,0.15\nb,80,10,10,1.5,,0.12,0.05\nc,10,50,40,1.3,2,0.40,\n";
        let (samples, log) = ingest_str(data, &schema).unwrap();
        assert_eq!(samples.len(), 3);
        assert!(log.is_empty());
        assert_eq!(samples.iter().map(|s| s.sample_id.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
        assert_eq!(samples[1].predictors.organic_carbon, None);
        assert_eq!(samples[2].observations.len(), 1);
    }

    #[test]
    fn texture_sum_violation_is_rejected() {
        let schema = Schema::parse(SCHEMA).unwrap();
        let data = "id,sa,si,cl,bd,oc,w330,w15k\nbad,50,50,50,1.4,1.0,0.30,0.15\n";
        let (samples, log) = ingest_str(data, &schema).unwrap();
        assert!(samples.is_empty());
        assert_eq!(log[0].reason, ReasonCode::TextureSum);
        assert_eq!(log[0].sample_id, "bad");
    }

    #[test]
    fn gravimetric_columns_are_converted() {
        let schema = Schema::parse(&format!("{SCHEMA}basis_330 = gravimetric\n")).unwrap();
        let data = "id,sa,si,cl,bd,oc,w330,w15k\na,40,40,20,1.5,1.0,0.2,0.15\n";
        let (samples, _) = ingest_str(data, &schema).unwrap();
        assert_relative_eq!(samples[0].theta_at_head(330.0).unwrap(), 0.30, epsilon = 1e-15);
        assert_eq!(samples[0].theta_at_head(15000.0).unwrap(), 0.15);
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(Schema::parse("sand = a\n"), Err(DatasetError::Schema(_))));
        assert!(matches!(Schema::parse(&format!("{SCHEMA}theta_500 = x\n")), Err(DatasetError::Schema(_))));
        let schema = Schema::parse(SCHEMA).unwrap();
        assert!(matches!(ingest_str("id,sa,si\n", &schema), Err(DatasetError::Schema(_))));
    }

    #[test]
    fn short_rows_are_parse_errors() {
        let schema = Schema::parse(SCHEMA).unwrap();
        let data = "id,sa,si,cl,bd,oc,w330,w15k\na,40,40,20\n";
        let (_, log) = ingest_str(data, &schema).unwrap();
        assert_eq!(log[0].reason, ReasonCode::ParseError);
        assert!(log[0].detail.contains("line 2"), "{}", log[0].detail);
    }

    #[test]
    fn canonical_round_trip() {
        let schema = Schema::parse(SCHEMA).unwrap();
        let data = "id,sa,si,cl,bd,oc,w330,w15k\na,40.5,40,19.5,1.4,1.0,0.301,0.15\nb,80,10,10,1.5,,0.12,0.05\n";
        let (samples, _) = ingest_str(data, &schema).unwrap();
        let mut buf = Vec::new();
        write_samples(&mut buf, &samples).unwrap();
        let (back, log) = ingest_str(std::str::from_utf8(&buf).unwrap(), &Schema::canonical()).unwrap();
        assert!(log.is_empty());
        assert_eq!(back, samples);
    }
}
