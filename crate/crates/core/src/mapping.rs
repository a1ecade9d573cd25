//! ESRI ASCII grids and cell-by-cell application of ensemble replicas.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::dataset::{StratificationScheme, StratumKey};
use crate::ensemble::{EnsembleError, EnsembleModel};
use crate::ptf::{PredictorRecord, PtfId, PtfLibrary};
use crate::retention::{theta_at, PSI_FIELD_CAPACITY, PSI_WILTING_POINT};

/// Suctions (cm) of the mapped products: saturation, field capacity, wilting point.
pub const MAP_HEADS: [f64; 3] = [0.0, PSI_FIELD_CAPACITY, PSI_WILTING_POINT];

#[derive(Debug, Error)]
pub enum MappingError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("layers are not co-registered: {0}")]
    CoRegistration(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridHeader {
    pub ncols: usize,
    pub nrows: usize,
    pub xllcorner: f64,
    pub yllcorner: f64,
    pub cellsize: f64,
    pub nodata: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub header: GridHeader,
    /// Row-major, top row first.
    pub values: Vec<f64>,
}

impl Grid {
    pub fn new(header: GridHeader, values: Vec<f64>) -> Result<Self, MappingError> {
        if values.len() != header.ncols * header.nrows {
            return Err(MappingError::Input(format!(
                "{} values for a {}x{} grid",
                values.len(),
                header.ncols,
                header.nrows
            )));
        }
        if !(header.cellsize > 0.0) {
            return Err(MappingError::Input(format!("cellsize {} must be > 0", header.cellsize)));
        }
        Ok(Self { header, values })
    }

    pub fn filled(header: GridHeader, value: f64) -> Self {
        Self { header, values: vec![value; header.ncols * header.nrows] }
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        v == self.header.nodata || v.is_nan()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.header.ncols + col]
    }

    pub fn parse(text: &str) -> Result<Self, MappingError> {
        const KEYS: [&str; 6] = ["ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"];
        let mut lines = text.lines().enumerate();
        let mut head = [0.0; 6];
        for (k, key) in KEYS.iter().enumerate() {
            let (i, line) =
                lines.next().ok_or(MappingError::Format { line: k + 1, msg: format!("missing '{key}'") })?;
            let fmt = |msg: String| MappingError::Format { line: i + 1, msg };
            let mut parts = line.split_whitespace();
            let name = parts.next().unwrap_or("");
            if !name.eq_ignore_ascii_case(key) {
                return Err(fmt(format!("expected '{key}', found '{name}'")));
            }
            let value = parts.next().ok_or_else(|| fmt(format!("'{key}' has no value")))?;
            head[k] = value.parse().map_err(|_| fmt(format!("bad {key} value '{value}'")))?;
            if parts.next().is_some() {
                return Err(fmt(format!("trailing text after {key}")));
            }
        }
        let count = |v: f64, line: usize, key: &str| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(MappingError::Format { line, msg: format!("{key} must be a positive integer") })
            }
        };
        let header = GridHeader {
            ncols: count(head[0], 1, "ncols")?,
            nrows: count(head[1], 2, "nrows")?,
            xllcorner: head[2],
            yllcorner: head[3],
            cellsize: head[4],
            nodata: head[5],
        };
        if !(header.cellsize > 0.0) {
            return Err(MappingError::Format { line: 5, msg: "cellsize must be > 0".into() });
        }
        let mut values = Vec::with_capacity(header.ncols * header.nrows);
        let mut rows = 0;
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fmt = |msg: String| MappingError::Format { line: i + 1, msg };
            if rows == header.nrows {
                return Err(fmt(format!("more than {} rows", header.nrows)));
            }
            let before = values.len();
            for tok in line.split_whitespace() {
                values.push(tok.parse::<f64>().map_err(|_| fmt(format!("bad value '{tok}'")))?);
            }
            let n = values.len() - before;
            if n != header.ncols {
                return Err(fmt(format!("expected {} values, found {n}", header.ncols)));
            }
            rows += 1;
        }
        if rows != header.nrows {
            return Err(MappingError::Format {
                line: text.lines().count(),
                msg: format!("expected {} rows, found {rows}", header.nrows),
            });
        }
        Ok(Self { header, values })
    }

    pub fn to_text(&self) -> String {
        let h = &self.header;
        let mut s = format!(
            "ncols {}\nnrows {}\nxllcorner {}\nyllcorner {}\ncellsize {}\nNODATA_value {}\n",
            h.ncols, h.nrows, h.xllcorner, h.yllcorner, h.cellsize, h.nodata
        );
        for row in self.values.chunks(h.ncols) {
            for (i, v) in row.iter().enumerate() {
                let v = if v.is_nan() { h.nodata } else { *v };
                if i > 0 {
                    s.push(' ');
                }
                write!(s, "{v}").unwrap();
            }
            s.push('\n');
        }
        s
    }
}

pub fn read_grid(path: &Path) -> Result<Grid, MappingError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| MappingError::Io { path: path.display().to_string(), source })?;
    Grid::parse(&text).map_err(|e| match e {
        MappingError::Format { line, msg } => MappingError::Format { line, msg: format!("{}: {msg}", path.display()) },
        e => e,
    })
}

pub fn write_grid(grid: &Grid, path: &Path) -> Result<(), MappingError> {
    std::fs::write(path, grid.to_text()).map_err(|source| MappingError::Io { path: path.display().to_string(), source })
}

/// Co-registered predictor layers: sand, silt, clay (%), bulk density (g/cm³), organic carbon (%).
#[derive(Debug, Clone, PartialEq)]
pub struct SoilLayerStack {
    pub sand: Grid,
    pub silt: Grid,
    pub clay: Grid,
    pub bulk_density: Grid,
    pub organic_carbon: Grid,
    /// Integer stratum codes (index into the scheme's stratum list), needed
    /// for schemes that cannot be derived from the other layers.
    pub stratum: Option<Grid>,
}

impl SoilLayerStack {
    pub fn new(
        sand: Grid,
        silt: Grid,
        clay: Grid,
        bulk_density: Grid,
        organic_carbon: Grid,
    ) -> Result<Self, MappingError> {
        let stack = Self { sand, silt, clay, bulk_density, organic_carbon, stratum: None };
        for (name, g) in stack.named().into_iter().skip(1) {
            check_header(&stack.sand, g, name)?;
        }
        Ok(stack)
    }

    pub fn with_stratum(mut self, stratum: Grid) -> Result<Self, MappingError> {
        check_header(&self.sand, &stratum, "stratum")?;
        self.stratum = Some(stratum);
        Ok(self)
    }

    pub fn header(&self) -> GridHeader {
        self.sand.header
    }

    fn named(&self) -> [(&'static str, &Grid); 5] {
        [
            ("sand", &self.sand),
            ("silt", &self.silt),
            ("clay", &self.clay),
            ("bulk_density", &self.bulk_density),
            ("organic_carbon", &self.organic_carbon),
        ]
    }
}

fn check_header(reference: &Grid, g: &Grid, name: &str) -> Result<(), MappingError> {
    if g.header != reference.header {
        return Err(MappingError::CoRegistration(format!(
            "{name} header {:?} differs from sand {:?}",
            g.header, reference.header
        )));
    }
    Ok(())
}

/// Mean and CV grids for each of [`MAP_HEADS`].
#[derive(Debug, Clone, PartialEq)]
pub struct MapProduct {
    pub mean: [Grid; 3],
    pub cv: [Grid; 3],
    /// Cells with valid inputs whose CV was set to nodata because the mean was 0.
    pub zero_mean_cells: usize,
    /// Cells set to nodata because the predictors were out of range.
    pub invalid_cells: usize,
    /// Cells where some replica used its stratified model's fallback vector.
    pub fallback_cells: usize,
}

impl MapProduct {
    /// `(file stem, grid)` pairs, e.g. `theta_mean_330`.
    pub fn outputs(&self) -> Vec<(String, &Grid)> {
        let mut out = Vec::new();
        for (k, psi) in MAP_HEADS.iter().enumerate() {
            out.push((format!("theta_mean_{psi}"), &self.mean[k]));
            out.push((format!("theta_cv_{psi}"), &self.cv[k]));
        }
        out
    }
}

#[derive(Default)]
struct RowOut {
    cells: Vec<[f64; 6]>,
    zero_mean: usize,
    invalid: usize,
    fallback: usize,
}

/// Applies every replica model to every cell and aggregates the replicas
/// into a mean and a coefficient of variation (sample standard deviation / mean).
pub fn apply_ensemble_map(
    lib: &PtfLibrary,
    layers: &SoilLayerStack,
    replicas: &[EnsembleModel],
) -> Result<MapProduct, MappingError> {
    if replicas.len() < 2 {
        return Err(MappingError::Input(format!(
            "the coefficient of variation needs at least 2 replicas, got {}",
            replicas.len()
        )));
    }
    let mut members: Vec<PtfId> = Vec::new();
    for r in replicas {
        for m in r.members() {
            if !members.contains(m) {
                members.push(*m);
            }
        }
    }
    for r in replicas {
        if let EnsembleModel::Stratified(m) = r {
            let derivable = matches!(
                m.scheme,
                StratificationScheme::Global
                    | StratificationScheme::TextureClass
                    | StratificationScheme::OrganicCarbon { .. }
                    | StratificationScheme::PressureHead
            );
            if !derivable && layers.stratum.is_none() {
                return Err(MappingError::Input(format!(
                    "the '{}' stratification needs a stratum raster",
                    m.scheme.name()
                )));
            }
        }
    }
    let h = layers.header();
    let rows: Vec<usize> = (0..h.nrows).collect();
    let results = crate::par::map(&rows, |&row| map_row(lib, layers, replicas, &members, row));
    let mut product = MapProduct {
        mean: std::array::from_fn(|_| Grid::filled(h, h.nodata)),
        cv: std::array::from_fn(|_| Grid::filled(h, h.nodata)),
        zero_mean_cells: 0,
        invalid_cells: 0,
        fallback_cells: 0,
    };
    for (row, r) in results.into_iter().enumerate() {
        let r = r?;
        product.zero_mean_cells += r.zero_mean;
        product.invalid_cells += r.invalid;
        product.fallback_cells += r.fallback;
        for (col, c) in r.cells.iter().enumerate() {
            let i = row * h.ncols + col;
            for k in 0..3 {
                product.mean[k].values[i] = c[2 * k];
                product.cv[k].values[i] = c[2 * k + 1];
            }
        }
    }
    Ok(product)
}

fn map_row(
    lib: &PtfLibrary,
    layers: &SoilLayerStack,
    replicas: &[EnsembleModel],
    members: &[PtfId],
    row: usize,
) -> Result<RowOut, MappingError> {
    let h = layers.header();
    let nodata = h.nodata;
    let mut out = RowOut { cells: vec![[nodata; 6]; h.ncols], ..RowOut::default() };
    let n = replicas.len() as f64;
    let mut member_theta = vec![[0.0; 3]; members.len()];
    let mut values = vec![[0.0; 3]; replicas.len()];
    for col in 0..h.ncols {
        let v: Vec<f64> = layers.named().iter().map(|(_, g)| g.get(row, col)).collect();
        if v.iter().any(|x| layers.sand.is_nodata(*x)) {
            continue;
        }
        let code = match &layers.stratum {
            Some(g) => {
                let c = g.get(row, col);
                if g.is_nodata(c) {
                    continue;
                }
                Some(c)
            }
            None => None,
        };
        let rec = PredictorRecord::from_texture(v[0], v[1], v[2]).with_bulk_density(v[3]).with_organic_carbon(v[4]);
        if rec.validate().is_err() {
            out.invalid += 1;
            continue;
        }
        for (j, &id) in members.iter().enumerate() {
            let params = lib.predict(id, &rec).map_err(|source| EnsembleError::Member { ptf: id, source })?.params;
            for (k, &psi) in MAP_HEADS.iter().enumerate() {
                member_theta[j][k] =
                    theta_at(&params, psi).map_err(|e| EnsembleError::Member { ptf: id, source: e.into() })?;
            }
        }
        let mut fell_back = false;
        for (r, model) in replicas.iter().enumerate() {
            for (k, &psi) in MAP_HEADS.iter().enumerate() {
                let w = match model {
                    EnsembleModel::Global(w) => w,
                    EnsembleModel::Stratified(m) => {
                        let hint = code.and_then(|c| stratum_from_code(&m.scheme, c));
                        let (w, fb) = m.weights_for(m.resolve(&rec, hint, psi));
                        fell_back |= fb && m.scheme != StratificationScheme::Global;
                        w
                    }
                };
                values[r][k] = w
                    .members()
                    .iter()
                    .zip(w.weights())
                    .map(|(id, a)| a * member_theta[members.iter().position(|m| m == id).unwrap()][k])
                    .sum();
            }
        }
        if fell_back {
            out.fallback += 1;
        }
        let cell = &mut out.cells[col];
        let mut zero_mean = false;
        for k in 0..3 {
            // shifted by the first replica so identical replicas give an exact zero spread
            let x0 = values[0][k];
            let mean = x0 + values.iter().map(|v| v[k] - x0).sum::<f64>() / n;
            let var = values.iter().map(|v| (v[k] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            cell[2 * k] = mean;
            if mean == 0.0 {
                zero_mean = true;
            } else {
                cell[2 * k + 1] = var.sqrt() / mean;
            }
        }
        if zero_mean {
            out.zero_mean += 1;
        }
    }
    Ok(out)
}

fn stratum_from_code(scheme: &StratificationScheme, code: f64) -> Option<StratumKey> {
    if code < 0.0 || code.fract() != 0.0 {
        return None;
    }
    match scheme {
        StratificationScheme::SoilOrder | StratificationScheme::TemperatureRegime => {
            scheme.keys().get(code as usize).copied()
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::WeightVector;

    const TWO_BY_TWO: &str =
        "ncols 2\nnrows 2\nxllcorner -10.5\nyllcorner 20\ncellsize 0.5\nNODATA_value -9999\n1 2.5\n-9999 4\n";

    fn header(n: usize) -> GridHeader {
        GridHeader { ncols: n, nrows: n, xllcorner: 0.0, yllcorner: 0.0, cellsize: 1.0, nodata: -9999.0 }
    }

    #[test]
    fn parse_and_round_trip() {
        let g = Grid::parse(TWO_BY_TWO).unwrap();
        assert_eq!(g.values, [1.0, 2.5, -9999.0, 4.0]);
        assert!(g.is_nodata(g.get(1, 0)));
        assert_eq!(g.header.xllcorner, -10.5);
        assert_eq!(g.to_text(), TWO_BY_TWO);
        assert_eq!(Grid::parse(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn row_length_error_names_line() {
        let bad = TWO_BY_TWO.replace("1 2.5\n", "1 2.5 3\n");
        match Grid::parse(&bad) {
            Err(MappingError::Format { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
        assert!(matches!(Grid::parse("ncols 2\nnrows 2\n"), Err(MappingError::Format { line: 3, .. })));
    }

    #[test]
    fn single_nodata_cell() {
        let g = Grid::filled(header(1), -9999.0);
        assert_eq!(g.to_text().lines().last().unwrap(), "-9999");
    }

    fn stack(clay_nodata: bool) -> SoilLayerStack {
        let h = header(2);
        let mut clay = Grid::filled(h, 20.0);
        if clay_nodata {
            clay.values[3] = -9999.0;
        }
        SoilLayerStack::new(
            Grid::filled(h, 40.0),
            Grid::filled(h, 40.0),
            clay,
            Grid::filled(h, 1.4),
            Grid::filled(h, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn co_registration() {
        let s = stack(false);
        let mut other = s.clay.clone();
        other.header.xllcorner = 1.0;
        assert!(matches!(
            SoilLayerStack::new(
                s.sand.clone(),
                s.silt.clone(),
                other,
                s.bulk_density.clone(),
                s.organic_carbon.clone()
            ),
            Err(MappingError::CoRegistration(_))
        ));
    }

    #[test]
    fn identical_replicas_have_zero_cv_and_nodata_closes() {
        let lib = PtfLibrary::builtin().unwrap();
        let w = WeightVector::new(vec![PtfId::Cosby1, PtfId::Rawls], vec![0.3, 0.7]).unwrap();
        let reps = vec![EnsembleModel::Global(w.clone()), EnsembleModel::Global(w)];
        let p = apply_ensemble_map(&lib, &stack(true), &reps).unwrap();
        for k in 0..3 {
            assert_eq!(&p.cv[k].values[..3], &[0.0; 3]);
            assert_eq!(p.cv[k].values[3], -9999.0);
            assert_eq!(p.mean[k].values[3], -9999.0);
        }
        assert!(p.mean[0].values[0] >= p.mean[1].values[0] && p.mean[1].values[0] >= p.mean[2].values[0]);
        assert!(apply_ensemble_map(&lib, &stack(false), &reps[..1]).is_err());
    }
}
