//! Weight-vector files and calibration tables.
//!
//! A weight file is CSV with `# key=value` metadata lines in front:
//!
//! ```text
//! # scheme=texture
//! # stratum=texture.sand
//! # replicas=100
//! # seed=42
//! ptf_id,weight
//! Cosby0,0.1509
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{CalibrationResult, EnsembleError, EnsembleModel, StratifiedModel, WeightVector};
use crate::dataset::{StratificationScheme, StratumKey};
use crate::ptf::PtfId;

const FALLBACK_FILE: &str = "weights_fallback.csv";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightFileMeta {
    pub scheme: Option<String>,
    /// Stratum key, or `fallback` for a stratified model's global vector.
    pub stratum: Option<String>,
    pub replicas: Option<usize>,
    pub seed: Option<u64>,
    pub oc_edges: Option<Vec<f64>>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> EnsembleError {
    EnsembleError::Input(format!("{}: {e}", path.display()))
}

pub fn write_weight_file<W: std::io::Write>(
    mut out: W,
    w: &WeightVector,
    meta: &WeightFileMeta,
) -> std::io::Result<()> {
    if let Some(s) = &meta.scheme {
        writeln!(out, "# scheme={s}")?;
    }
    if let Some(s) = &meta.stratum {
        writeln!(out, "# stratum={s}")?;
    }
    if let Some(e) = &meta.oc_edges {
        let e: Vec<String> = e.iter().map(f64::to_string).collect();
        writeln!(out, "# oc_edges={}", e.join(";"))?;
    }
    if let Some(r) = meta.replicas {
        writeln!(out, "# replicas={r}")?;
    }
    if let Some(s) = meta.seed {
        writeln!(out, "# seed={s}")?;
    }
    writeln!(out, "ptf_id,weight")?;
    for (m, a) in w.members().iter().zip(w.weights()) {
        writeln!(out, "{m},{a}")?;
    }
    Ok(())
}

pub fn read_weight_file(text: &str) -> Result<(WeightVector, WeightFileMeta), EnsembleError> {
    let mut meta = WeightFileMeta::default();
    let mut members = Vec::new();
    let mut weights = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        let bad = |m: String| EnsembleError::Input(format!("weight file line {}: {m}", i + 1));
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let Some((k, v)) = rest.split_once('=') else { continue };
            let v = v.trim();
            match k.trim() {
                "scheme" => meta.scheme = Some(v.to_string()),
                "stratum" => meta.stratum = Some(v.to_string()),
                "replicas" => meta.replicas = Some(v.parse().map_err(|_| bad(format!("bad replicas '{v}'")))?),
                "seed" => meta.seed = Some(v.parse().map_err(|_| bad(format!("bad seed '{v}'")))?),
                "oc_edges" => {
                    let e: Result<Vec<f64>, _> = v.split(';').map(|x| x.trim().parse::<f64>()).collect();
                    meta.oc_edges = Some(e.map_err(|_| bad(format!("bad oc_edges '{v}'")))?);
                }
                _ => {}
            }
            continue;
        }
        if !header_seen {
            if line.replace(' ', "") != "ptf_id,weight" {
                return Err(bad(format!("expected header 'ptf_id,weight', found '{line}'")));
            }
            header_seen = true;
            continue;
        }
        let (id, w) = line.split_once(',').ok_or_else(|| bad("expected ptf_id,weight".into()))?;
        members.push(id.trim().parse::<PtfId>().map_err(|e| bad(e.to_string()))?);
        weights.push(w.trim().parse::<f64>().map_err(|_| bad(format!("bad weight '{}'", w.trim())))?);
    }
    Ok((WeightVector::new(members, weights)?, meta))
}

fn scheme_from_meta(meta: &WeightFileMeta) -> Result<StratificationScheme, EnsembleError> {
    let name = meta.scheme.as_deref().unwrap_or("global");
    let mut scheme: StratificationScheme = name.parse()?;
    if let (StratificationScheme::OrganicCarbon { edges }, Some(e)) = (&mut scheme, &meta.oc_edges) {
        *edges = e.clone();
    }
    Ok(scheme)
}

fn scheme_meta(scheme: &StratificationScheme, replicas: usize, seed: u64) -> WeightFileMeta {
    WeightFileMeta {
        scheme: Some(scheme.name().to_string()),
        stratum: None,
        replicas: Some(replicas),
        seed: Some(seed),
        oc_edges: match scheme {
            StratificationScheme::OrganicCarbon { edges } => Some(edges.clone()),
            _ => None,
        },
    }
}

/// Writes `weights_fallback.csv` and one `weights_<stratum>.csv` per stratum into `dir`.
pub fn save_stratified_model(
    model: &StratifiedModel,
    dir: &Path,
    replicas: usize,
    seed: u64,
) -> Result<Vec<PathBuf>, EnsembleError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let base = scheme_meta(&model.scheme, replicas, seed);
    let mut written = Vec::new();
    let mut write = |name: String, w: &WeightVector, stratum: String| -> Result<(), EnsembleError> {
        let path = dir.join(name);
        let meta = WeightFileMeta { stratum: Some(stratum), ..base.clone() };
        let file = std::fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        write_weight_file(std::io::BufWriter::new(file), w, &meta).map_err(|e| io_err(&path, e))?;
        written.push(path);
        Ok(())
    };
    write(FALLBACK_FILE.into(), &model.fallback, "fallback".into())?;
    for (k, w) in &model.strata {
        write(format!("weights_{k}.csv"), w, k.to_string())?;
    }
    Ok(written)
}

/// Loads a global weight file, or a directory written by [`save_stratified_model`].
pub fn load_model(path: &Path) -> Result<EnsembleModel, EnsembleError> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| io_err(p, e));
    if !path.is_dir() {
        let (w, meta) = read_weight_file(&read(path)?)?;
        if meta.stratum.as_deref().is_some_and(|s| s != "global") {
            return Err(EnsembleError::Input(format!(
                "{} holds one stratum of a stratified model; pass its directory",
                path.display()
            )));
        }
        return Ok(EnsembleModel::Global(w));
    }
    let (fallback, meta) = read_weight_file(&read(&path.join(FALLBACK_FILE))?)?;
    let scheme = scheme_from_meta(&meta)?;
    let mut strata = BTreeMap::new();
    let mut entries: Vec<PathBuf> =
        std::fs::read_dir(path).map_err(|e| io_err(path, e))?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    for p in entries {
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if !name.starts_with("weights_") || !name.ends_with(".csv") || name == FALLBACK_FILE {
            continue;
        }
        let (w, m) = read_weight_file(&read(&p)?)?;
        let key: StratumKey = m.stratum.as_deref().ok_or_else(|| io_err(&p, "missing '# stratum=' line"))?.parse()?;
        if w.members() != fallback.members() {
            return Err(io_err(&p, "member list differs from the fallback vector"));
        }
        strata.insert(key, w);
    }
    Ok(EnsembleModel::Stratified(StratifiedModel { scheme, strata, fallback }))
}

/// Per-replica weights of global or stratified models, as
/// `replica,stratum,member,weight` rows; `stratum` is `fallback` for the global vector.
pub fn write_replica_table<W: std::io::Write>(
    mut out: W,
    scheme: &StratificationScheme,
    seed: u64,
    models: &[EnsembleModel],
) -> std::io::Result<()> {
    let meta = scheme_meta(scheme, models.len(), seed);
    writeln!(out, "# scheme={}", scheme.name())?;
    if let Some(e) = &meta.oc_edges {
        let e: Vec<String> = e.iter().map(f64::to_string).collect();
        writeln!(out, "# oc_edges={}", e.join(";"))?;
    }
    writeln!(out, "# seed={seed}")?;
    writeln!(out, "replica,stratum,member,weight")?;
    for (r, m) in models.iter().enumerate() {
        let mut rows: Vec<(String, &WeightVector)> = Vec::new();
        match m {
            EnsembleModel::Global(w) => rows.push(("fallback".into(), w)),
            EnsembleModel::Stratified(s) => {
                rows.push(("fallback".into(), &s.fallback));
                rows.extend(s.strata.iter().map(|(k, w)| (k.to_string(), w)));
            }
        }
        for (stratum, w) in rows {
            for (id, a) in w.members().iter().zip(w.weights()) {
                writeln!(out, "{r},{stratum},{id},{a}")?;
            }
        }
    }
    Ok(())
}

type Column = (Vec<PtfId>, Vec<f64>);

pub fn read_replica_table(text: &str) -> Result<Vec<EnsembleModel>, EnsembleError> {
    let mut meta = WeightFileMeta::default();
    // replica -> stratum -> (members, weights)
    let mut table: BTreeMap<usize, BTreeMap<String, Column>> = BTreeMap::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        let bad = |m: String| EnsembleError::Input(format!("replica table line {}: {m}", i + 1));
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                let v = v.trim();
                match k.trim() {
                    "scheme" => meta.scheme = Some(v.to_string()),
                    "oc_edges" => {
                        let e: Result<Vec<f64>, _> = v.split(';').map(|x| x.trim().parse::<f64>()).collect();
                        meta.oc_edges = Some(e.map_err(|_| bad(format!("bad oc_edges '{v}'")))?);
                    }
                    _ => {}
                }
            }
            continue;
        }
        if !header_seen {
            if line.replace(' ', "") != "replica,stratum,member,weight" {
                return Err(bad(format!("expected header 'replica,stratum,member,weight', found '{line}'")));
            }
            header_seen = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", f.len())));
        }
        let r: usize = f[0].parse().map_err(|_| bad(format!("bad replica '{}'", f[0])))?;
        let id: PtfId = f[2].parse().map_err(|e: crate::ptf::PtfError| bad(e.to_string()))?;
        let w: f64 = f[3].parse().map_err(|_| bad(format!("bad weight '{}'", f[3])))?;
        let entry = table.entry(r).or_default().entry(f[1].to_string()).or_default();
        entry.0.push(id);
        entry.1.push(w);
    }
    let scheme = scheme_from_meta(&meta)?;
    let mut models = Vec::new();
    for (r, mut strata) in table {
        let (m, w) = strata
            .remove("fallback")
            .ok_or_else(|| EnsembleError::Input(format!("replica {r} has no fallback rows")))?;
        let fallback = WeightVector::new(m, w)?;
        if scheme == StratificationScheme::Global && strata.is_empty() {
            models.push(EnsembleModel::Global(fallback));
            continue;
        }
        let mut map = BTreeMap::new();
        for (k, (m, w)) in strata {
            map.insert(k.parse::<StratumKey>()?, WeightVector::new(m, w)?);
        }
        models.push(EnsembleModel::Stratified(StratifiedModel { scheme: scheme.clone(), strata: map, fallback }));
    }
    Ok(models)
}

/// One row per (replica, member): `replica,member,weight,cal_rmse,val_rmse`.
pub fn write_calibration_table<W: std::io::Write>(out: W, result: &CalibrationResult) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["replica", "member", "weight", "cal_rmse", "val_rmse"])?;
    for r in &result.replicas {
        for (m, a) in r.weights.members().iter().zip(r.weights.weights()) {
            w.write_record([
                r.index.to_string(),
                m.to_string(),
                a.to_string(),
                r.cal_rmse.to_string(),
                r.val_rmse.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `member,mean_weight,std_weight`.
pub fn write_weight_summary<W: std::io::Write>(out: W, result: &CalibrationResult) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["member", "mean_weight", "std_weight"])?;
    for ((m, a), s) in result.members().iter().zip(result.mean_weights.weights()).zip(&result.weight_std) {
        w.write_record([m.to_string(), a.to_string(), s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
