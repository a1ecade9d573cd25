//! Weighted PTF ensembles: prediction, GA weight calibration with bootstrap
//! replicas, and stratified models.

mod ga;
mod io;

use std::collections::BTreeMap;

use thiserror::Error;

pub use ga::{minimize as ga_minimize, normalize as normalize_weights, GaConfig};
pub use io::{
    load_model, read_replica_table, read_weight_file, save_stratified_model, write_calibration_table,
    write_replica_table, write_weight_file, write_weight_summary, WeightFileMeta,
};

use crate::dataset::{
    bootstrap_split, point_count, stratify, DatasetError, SoilSample, StratificationScheme, StratumKey,
};
use crate::ptf::{PredictorRecord, PtfError, PtfId, PtfLibrary};
use crate::retention::{theta_at, PSI_FIELD_CAPACITY, PSI_WILTING_POINT};
use crate::seed::derive_seed;

/// Default minimum number of retention points for a stratum to get its own weights.
pub const DEFAULT_MIN_STRATUM_POINTS: usize = 50;

const GA_STREAM: u64 = 0x6A;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("member {ptf} failed on sample '{sample}': {source}")]
    MemberOnSample { ptf: PtfId, sample: String, source: PtfError },
    #[error("member {ptf}: {source}")]
    Member { ptf: PtfId, source: PtfError },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Ensemble weights over an ordered member list; always on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    members: Vec<PtfId>,
    weights: Vec<f64>,
}

impl WeightVector {
    /// Normalizes `weights` to sum to one.
    pub fn new(members: Vec<PtfId>, weights: Vec<f64>) -> Result<Self, EnsembleError> {
        if members.is_empty() {
            return Err(EnsembleError::Input("weight vector has no members".into()));
        }
        if members.len() != weights.len() {
            return Err(EnsembleError::Input(format!("{} members but {} weights", members.len(), weights.len())));
        }
        for (i, m) in members.iter().enumerate() {
            if members[..i].contains(m) {
                return Err(EnsembleError::Input(format!("duplicate member {m}")));
            }
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(EnsembleError::Input(format!("weight {w} must be finite and >= 0")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(EnsembleError::Input("weights sum to zero".into()));
        }
        let weights = weights.iter().map(|w| (w / total).min(1.0)).collect();
        Ok(Self { members, weights })
    }

    pub fn uniform(members: Vec<PtfId>) -> Result<Self, EnsembleError> {
        let w = vec![1.0; members.len()];
        Self::new(members, w)
    }

    pub fn one_hot(members: Vec<PtfId>, index: usize) -> Result<Self, EnsembleError> {
        let mut w = vec![0.0; members.len()];
        *w.get_mut(index).ok_or_else(|| EnsembleError::Input(format!("member index {index} out of range")))? = 1.0;
        Self::new(members, w)
    }

    pub fn members(&self) -> &[PtfId] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_of(&self, id: PtfId) -> Option<f64> {
        self.members.iter().position(|m| *m == id).map(|i| self.weights[i])
    }
}

/// Weighted mean of member predictions at `psi`. Members with zero weight are not evaluated.
pub fn ensemble_theta(
    lib: &PtfLibrary,
    w: &WeightVector,
    rec: &PredictorRecord,
    psi: f64,
) -> Result<f64, EnsembleError> {
    let mut acc = 0.0;
    let mut total = 0.0;
    for (&id, &a) in w.members.iter().zip(&w.weights) {
        if a == 0.0 {
            continue;
        }
        let t = lib.predict_theta(id, rec, psi).map_err(|source| EnsembleError::Member { ptf: id, source })?;
        acc += a * t;
        total += a;
    }
    Ok(acc / total)
}

/// Sum of squared residuals of the weighted-mean prediction.
pub fn chi2(weights: &[f64], member_preds: &[Vec<f64>], observed: &[f64]) -> Result<f64, EnsembleError> {
    if weights.len() != member_preds.len() || weights.is_empty() {
        return Err(EnsembleError::Input(format!("{} weights for {} members", weights.len(), member_preds.len())));
    }
    if let Some(p) = member_preds.iter().find(|p| p.len() != observed.len()) {
        return Err(EnsembleError::Input(format!("{} predictions for {} observations", p.len(), observed.len())));
    }
    let total: f64 = weights.iter().sum();
    Ok((0..observed.len())
        .map(|i| {
            let e: f64 = weights.iter().zip(member_preds).map(|(a, p)| a * p[i]).sum::<f64>() / total;
            (e - observed[i]).powi(2)
        })
        .sum())
}

/// Quadratic form of chi² in the normalized weights: aᵀGa − 2aᵀb + c.
#[derive(Debug, Clone)]
struct Quadratic {
    m: usize,
    gram: Vec<f64>,
    b: Vec<f64>,
    c: f64,
}

impl Quadratic {
    fn zero(m: usize) -> Self {
        Self { m, gram: vec![0.0; m * m], b: vec![0.0; m], c: 0.0 }
    }

    fn add(&mut self, preds: &[f64], obs: f64, count: f64) {
        let m = self.m;
        for j in 0..m {
            let pj = preds[j] * count;
            self.b[j] += pj * obs;
            for k in j..m {
                self.gram[j * m + k] += pj * preds[k];
            }
        }
        self.c += count * obs * obs;
    }

    fn eval(&self, a: &[f64]) -> f64 {
        let m = self.m;
        let mut q = self.c;
        for j in 0..m {
            q -= 2.0 * a[j] * self.b[j];
            q += a[j] * a[j] * self.gram[j * m + j];
            for k in j + 1..m {
                q += 2.0 * a[j] * a[k] * self.gram[j * m + k];
            }
        }
        q.max(0.0)
    }
}

/// GA search followed by an exact comparison against every single member,
/// so the result never does worse than the best one-hot vector.
fn optimize(m: usize, normal: &Quadratic, exact: impl Fn(&[f64]) -> f64, cfg: &GaConfig) -> Vec<f64> {
    let ga_best = ga::minimize(m, cfg, |a| normal.eval(a));
    let mut best = (exact(&ga_best), ga_best);
    for k in 0..m {
        let mut e = vec![0.0; m];
        e[k] = 1.0;
        let v = exact(&e);
        if v < best.0 {
            best = (v, e);
        }
    }
    best.1
}

/// Simplex weights minimizing [`chi2`] for the given member predictions.
pub fn optimize_weights(
    member_preds: &[Vec<f64>],
    observed: &[f64],
    cfg: &GaConfig,
) -> Result<Vec<f64>, EnsembleError> {
    cfg.validate()?;
    if member_preds.is_empty() || observed.is_empty() {
        return Err(EnsembleError::Input("no members or no observations".into()));
    }
    let m = member_preds.len();
    chi2(&vec![1.0; m], member_preds, observed)?;
    let mut normal = Quadratic::zero(m);
    let mut row = vec![0.0; m];
    for (i, &o) in observed.iter().enumerate() {
        for j in 0..m {
            row[j] = member_preds[j][i];
        }
        normal.add(&row, o, 1.0);
    }
    let exact = |a: &[f64]| chi2(a, member_preds, observed).expect("shapes checked");
    Ok(optimize(m, &normal, exact, cfg))
}

/// Member predictions at every observation of a sample set, computed once.
#[derive(Debug, Clone)]
pub struct PredictionMatrix {
    members: Vec<PtfId>,
    /// point-major: `preds[p * m + j]`
    preds: Vec<f64>,
    observed: Vec<f64>,
    psi: Vec<f64>,
    /// Point range of sample `s` is `offsets[s]..offsets[s + 1]`.
    offsets: Vec<usize>,
}

impl PredictionMatrix {
    pub fn build(lib: &PtfLibrary, members: &[PtfId], samples: &[SoilSample]) -> Result<Self, EnsembleError> {
        if members.is_empty() {
            return Err(EnsembleError::Input("no ensemble members".into()));
        }
        let rows = crate::par::map(samples, |s| -> Result<Vec<f64>, EnsembleError> {
            let mut out = vec![0.0; s.observations.len() * members.len()];
            for (j, &id) in members.iter().enumerate() {
                let fail = |source| EnsembleError::MemberOnSample { ptf: id, sample: s.sample_id.clone(), source };
                let params = lib.predict(id, &s.predictors).map_err(fail)?.params;
                for (p, o) in s.observations.iter().enumerate() {
                    out[p * members.len() + j] = theta_at(&params, o.psi).map_err(|e| fail(e.into()))?;
                }
            }
            Ok(out)
        });
        let mut preds = Vec::new();
        for r in rows {
            preds.extend(r?);
        }
        let mut offsets = vec![0];
        let (mut observed, mut psi) = (Vec::new(), Vec::new());
        for s in samples {
            observed.extend(s.observations.iter().map(|o| o.theta));
            psi.extend(s.observations.iter().map(|o| o.psi));
            offsets.push(observed.len());
        }
        Ok(Self { members: members.to_vec(), preds, observed, psi, offsets })
    }

    /// Builds from explicit per-sample predictions, `preds[s][point][member]`.
    pub fn from_parts(
        members: Vec<PtfId>,
        preds: &[Vec<Vec<f64>>],
        observed: &[Vec<(f64, f64)>],
    ) -> Result<Self, EnsembleError> {
        if preds.len() != observed.len() {
            return Err(EnsembleError::Input("sample count mismatch".into()));
        }
        let m = members.len();
        let mut out = Self { members, preds: vec![], observed: vec![], psi: vec![], offsets: vec![0] };
        for (ps, os) in preds.iter().zip(observed) {
            if ps.len() != os.len() || ps.iter().any(|p| p.len() != m) {
                return Err(EnsembleError::Input("prediction shape mismatch".into()));
            }
            for (p, &(psi, theta)) in ps.iter().zip(os) {
                out.preds.extend(p);
                out.psi.push(psi);
                out.observed.push(theta);
            }
            out.offsets.push(out.observed.len());
        }
        Ok(out)
    }

    pub fn members(&self) -> &[PtfId] {
        &self.members
    }

    pub fn n_samples(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_points(&self) -> usize {
        self.observed.len()
    }

    fn point(&self, p: usize) -> &[f64] {
        let m = self.members.len();
        &self.preds[p * m..(p + 1) * m]
    }

    fn points(&self, s: usize) -> std::ops::Range<usize> {
        self.offsets[s]..self.offsets[s + 1]
    }

    /// Residual sum of squares of weights `a` over samples with multiplicities.
    fn sse(&self, a: &[f64], counts: &[(usize, f64)]) -> f64 {
        let mut total = 0.0;
        for &(s, c) in counts {
            let mut acc = 0.0;
            for p in self.points(s) {
                let e: f64 = self.point(p).iter().zip(a).map(|(x, w)| x * w).sum();
                acc += (e - self.observed[p]).powi(2);
            }
            total += c * acc;
        }
        total
    }

    fn normal(&self, counts: &[(usize, f64)]) -> Quadratic {
        let mut n = Quadratic::zero(self.members.len());
        for &(s, c) in counts {
            for p in self.points(s) {
                n.add(self.point(p), self.observed[p], c);
            }
        }
        n
    }

    fn n_points_of(&self, counts: &[(usize, f64)]) -> f64 {
        counts.iter().map(|&(s, c)| c * self.points(s).len() as f64).sum()
    }

    fn all(&self) -> Vec<(usize, f64)> {
        (0..self.n_samples()).map(|s| (s, 1.0)).collect()
    }

    /// RMSE of member `j` alone over all points.
    pub fn member_rmse(&self, j: usize) -> f64 {
        let mut e = vec![0.0; self.members.len()];
        e[j] = 1.0;
        self.rmse(&e)
    }

    /// RMSE of simplex weights `a` over all points.
    pub fn rmse(&self, a: &[f64]) -> f64 {
        (self.sse(a, &self.all()) / self.n_points() as f64).sqrt()
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    /// Predictions of member `j` at every point.
    pub fn member_column(&self, j: usize) -> Vec<f64> {
        (0..self.n_points()).map(|p| self.point(p)[j]).collect()
    }
}

fn multiplicities(indices: &[usize]) -> Vec<(usize, f64)> {
    let mut m: BTreeMap<usize, f64> = BTreeMap::new();
    for &i in indices {
        *m.entry(i).or_default() += 1.0;
    }
    m.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaFit {
    pub index: usize,
    pub weights: WeightVector,
    pub cal_rmse: f64,
    /// `None` when the replica has no out-of-bag samples.
    pub val_rmse: Option<f64>,
    /// Each member's own RMSE on the replica's calibration points.
    pub member_cal_rmse: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub replicas: Vec<ReplicaFit>,
    pub mean_weights: WeightVector,
    /// Per-member sample standard deviation of weights across replicas (0 for one replica).
    pub weight_std: Vec<f64>,
}

impl CalibrationResult {
    pub fn members(&self) -> &[PtfId] {
        self.mean_weights.members()
    }
}

/// Bootstrap calibration: optimizes weights on each replica's resampled
/// samples and scores them on the out-of-bag samples.
pub fn calibrate(
    lib: &PtfLibrary,
    members: &[PtfId],
    samples: &[SoilSample],
    n_replicas: usize,
    ga: &GaConfig,
    seed: u64,
) -> Result<CalibrationResult, EnsembleError> {
    let matrix = PredictionMatrix::build(lib, members, samples)?;
    calibrate_matrix(&matrix, n_replicas, ga, seed)
}

/// As [`calibrate`], on precomputed member predictions. `ga.seed` is ignored;
/// each replica's GA stream is derived from `(seed, replica index)`.
pub fn calibrate_matrix(
    matrix: &PredictionMatrix,
    n_replicas: usize,
    ga: &GaConfig,
    seed: u64,
) -> Result<CalibrationResult, EnsembleError> {
    ga.validate()?;
    if matrix.n_points() == 0 {
        return Err(EnsembleError::Input("no retention observations to calibrate on".into()));
    }
    let m = matrix.members.len();
    let replicas = bootstrap_split(&matrix.offsets[1..], n_replicas, seed)?;
    let fits = crate::par::map(&replicas, |r| {
        let cal = multiplicities(&r.calibration);
        let val: Vec<_> = r.validation.iter().map(|&s| (s, 1.0)).collect();
        let cfg = GaConfig { seed: derive_seed(derive_seed(seed, r.index as u64), GA_STREAM), ..ga.clone() };
        let normal = matrix.normal(&cal);
        let a = optimize(m, &normal, |a| matrix.sse(a, &cal), &cfg);
        let n_cal = matrix.n_points_of(&cal);
        let n_val = matrix.n_points_of(&val);
        let member_cal_rmse = (0..m)
            .map(|j| {
                let mut e = vec![0.0; m];
                e[j] = 1.0;
                (matrix.sse(&e, &cal) / n_cal).sqrt()
            })
            .collect();
        ReplicaFit {
            index: r.index,
            cal_rmse: (matrix.sse(&a, &cal) / n_cal).sqrt(),
            val_rmse: (n_val > 0.0).then(|| (matrix.sse(&a, &val) / n_val).sqrt()),
            weights: WeightVector::new(matrix.members.clone(), a).expect("simplex weights"),
            member_cal_rmse,
        }
    });
    summarize(matrix.members.clone(), fits)
}

fn summarize(members: Vec<PtfId>, replicas: Vec<ReplicaFit>) -> Result<CalibrationResult, EnsembleError> {
    let m = members.len();
    let n = replicas.len() as f64;
    let mean: Vec<f64> = (0..m).map(|j| replicas.iter().map(|r| r.weights.weights[j]).sum::<f64>() / n).collect();
    let weight_std = (0..m)
        .map(|j| {
            if replicas.len() < 2 {
                return 0.0;
            }
            let ss: f64 = replicas.iter().map(|r| (r.weights.weights[j] - mean[j]).powi(2)).sum();
            (ss / (n - 1.0)).sqrt()
        })
        .collect();
    Ok(CalibrationResult { mean_weights: WeightVector::new(members, mean)?, weight_std, replicas })
}

/// Per-stratum weights with a global fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedModel {
    pub scheme: StratificationScheme,
    pub strata: BTreeMap<StratumKey, WeightVector>,
    pub fallback: WeightVector,
}

impl StratifiedModel {
    pub fn members(&self) -> &[PtfId] {
        self.fallback.members()
    }

    /// Stratum for a prediction at `psi`: the hint if given, else derived from
    /// the record (or from `psi` for the pressure-head scheme).
    pub fn resolve(&self, rec: &PredictorRecord, hint: Option<StratumKey>, psi: f64) -> Option<StratumKey> {
        if hint.is_some() {
            return hint;
        }
        match self.scheme {
            StratificationScheme::PressureHead => {
                (psi == PSI_FIELD_CAPACITY || psi == PSI_WILTING_POINT).then_some(StratumKey::PressureHead(psi as u32))
            }
            _ => self.scheme.key_for_record(rec),
        }
    }

    fn key_for_point(&self, s: &SoilSample, psi: f64) -> Option<StratumKey> {
        match self.scheme {
            StratificationScheme::PressureHead => self.resolve(&s.predictors, None, psi),
            _ => self.scheme.key_for_sample(s),
        }
    }

    /// Weights for a stratum; `(weights, true)` when the fallback is used.
    pub fn weights_for(&self, key: Option<StratumKey>) -> (&WeightVector, bool) {
        match key.and_then(|k| self.strata.get(&k)) {
            Some(w) => (w, false),
            None => (&self.fallback, true),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleModel {
    Global(WeightVector),
    Stratified(StratifiedModel),
}

impl EnsembleModel {
    pub fn members(&self) -> &[PtfId] {
        match self {
            EnsembleModel::Global(w) => w.members(),
            EnsembleModel::Stratified(m) => m.members(),
        }
    }

    /// Weights applied to `sample` at `psi`.
    pub fn weights_for_sample(&self, s: &SoilSample, psi: f64) -> &WeightVector {
        match self {
            EnsembleModel::Global(w) => w,
            EnsembleModel::Stratified(m) => m.weights_for(m.key_for_point(s, psi)).0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelPrediction {
    pub theta: f64,
    pub stratum: Option<StratumKey>,
    /// True when a stratified model fell back to its global vector.
    pub used_fallback: bool,
}

pub fn predict_with_model(
    lib: &PtfLibrary,
    model: &EnsembleModel,
    rec: &PredictorRecord,
    hint: Option<StratumKey>,
    psi: f64,
) -> Result<ModelPrediction, EnsembleError> {
    match model {
        EnsembleModel::Global(w) => {
            Ok(ModelPrediction { theta: ensemble_theta(lib, w, rec, psi)?, stratum: None, used_fallback: false })
        }
        EnsembleModel::Stratified(m) => {
            let key = m.resolve(rec, hint, psi);
            let (w, used_fallback) = m.weights_for(key);
            Ok(ModelPrediction { theta: ensemble_theta(lib, w, rec, psi)?, stratum: key, used_fallback })
        }
    }
}

/// Pooled RMSE of a model over every observation of `samples`.
pub fn model_rmse(
    matrix: &PredictionMatrix,
    samples: &[SoilSample],
    model: &EnsembleModel,
) -> Result<f64, EnsembleError> {
    if matrix.members != model.members() || matrix.n_samples() != samples.len() {
        return Err(EnsembleError::Input("model and prediction matrix do not match".into()));
    }
    let mut sse = 0.0;
    for (s, sample) in samples.iter().enumerate() {
        for p in matrix.points(s) {
            let w = model.weights_for_sample(sample, matrix.psi[p]);
            let e: f64 = matrix.point(p).iter().zip(&w.weights).map(|(x, a)| x * a).sum();
            sse += (e - matrix.observed[p]).powi(2);
        }
    }
    Ok((sse / matrix.n_points() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedOptions {
    pub min_stratum_points: usize,
    pub n_replicas: usize,
    pub ga: GaConfig,
    pub seed: u64,
}

impl Default for StratifiedOptions {
    fn default() -> Self {
        Self { min_stratum_points: DEFAULT_MIN_STRATUM_POINTS, n_replicas: 100, ga: GaConfig::default(), seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StratumOutcome {
    /// Stratum has its own weights.
    Calibrated(CalibrationResult),
    /// Fewer points than the minimum; the fallback applies.
    TooFewPoints(usize),
    /// Own weights fit the stratum worse than the global weights; the fallback applies.
    WorseThanGlobal(CalibrationResult),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedCalibration {
    pub model: StratifiedModel,
    pub global: CalibrationResult,
    pub outcomes: BTreeMap<StratumKey, StratumOutcome>,
    /// Retention points per stratum.
    pub points: BTreeMap<StratumKey, usize>,
    /// Samples the scheme could not place; they are covered by the fallback.
    pub unassigned: usize,
}

impl StratifiedCalibration {
    /// One stratified model per bootstrap replica, using the strata that kept their own weights.
    pub fn replica_models(&self) -> Vec<StratifiedModel> {
        self.global
            .replicas
            .iter()
            .enumerate()
            .map(|(r, g)| StratifiedModel {
                scheme: self.model.scheme.clone(),
                strata: self
                    .outcomes
                    .iter()
                    .filter_map(|(k, o)| match o {
                        StratumOutcome::Calibrated(c) => Some((*k, c.replicas[r].weights.clone())),
                        _ => None,
                    })
                    .collect(),
                fallback: g.weights.clone(),
            })
            .collect()
    }
}

/// Calibrates a global vector and one vector per sufficiently large stratum.
/// A stratum keeps its own mean weights only if they fit its data at least as
/// well as the global mean weights.
pub fn calibrate_stratified(
    lib: &PtfLibrary,
    members: &[PtfId],
    samples: &[SoilSample],
    scheme: &StratificationScheme,
    opts: &StratifiedOptions,
) -> Result<StratifiedCalibration, EnsembleError> {
    let global = calibrate(lib, members, samples, opts.n_replicas, &opts.ga, opts.seed)?;
    let split = stratify(samples, scheme);
    let keys = scheme.keys();
    let strata: Vec<(StratumKey, Vec<SoilSample>)> = split.strata.into_iter().collect();
    let outcomes = crate::par::map(&strata, |(key, group)| -> Result<StratumOutcome, EnsembleError> {
        let n = point_count(group);
        if n < opts.min_stratum_points {
            return Ok(StratumOutcome::TooFewPoints(n));
        }
        let stream = keys.iter().position(|k| k == key).unwrap_or(keys.len()) as u64 + 1;
        let matrix = PredictionMatrix::build(lib, members, group)?;
        let result = calibrate_matrix(&matrix, opts.n_replicas, &opts.ga, derive_seed(opts.seed, stream))?;
        let all = matrix.all();
        let own = matrix.sse(result.mean_weights.weights(), &all);
        let fallback = matrix.sse(global.mean_weights.weights(), &all);
        Ok(if own <= fallback { StratumOutcome::Calibrated(result) } else { StratumOutcome::WorseThanGlobal(result) })
    });
    let mut model =
        StratifiedModel { scheme: scheme.clone(), strata: BTreeMap::new(), fallback: global.mean_weights.clone() };
    let mut out = BTreeMap::new();
    let points = strata.iter().map(|(k, g)| (*k, point_count(g))).collect();
    for ((key, _), outcome) in strata.iter().zip(outcomes) {
        let outcome = outcome?;
        if let StratumOutcome::Calibrated(r) = &outcome {
            model.strata.insert(*key, r.mean_weights.clone());
        }
        out.insert(*key, outcome);
    }
    Ok(StratifiedCalibration { model, global, outcomes: out, points, unassigned: split.unassigned.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn weight_vector_normalizes() {
        let w = WeightVector::new(vec![PtfId::Cosby0, PtfId::Clapp], vec![1.0, 3.0]).unwrap();
        assert_eq!(w.weights(), [0.25, 0.75]);
        assert!(WeightVector::new(vec![PtfId::Cosby0], vec![-1.0]).is_err());
        assert!(WeightVector::new(vec![PtfId::Cosby0, PtfId::Cosby0], vec![1.0, 1.0]).is_err());
        assert!(WeightVector::new(vec![PtfId::Cosby0], vec![0.0]).is_err());
    }

    #[test]
    fn chi2_examples() {
        let obs = [0.3, 0.2];
        assert_eq!(chi2(&[1.0, 0.0], &[obs.to_vec(), vec![0.0, 0.0]], &obs).unwrap(), 0.0);
        let lo = vec![0.2, 0.1];
        let hi = vec![0.4, 0.3];
        assert!(chi2(&[0.5, 0.5], &[lo, hi], &obs).unwrap() < 1e-30);
        assert_relative_eq!(chi2(&[1.0], &[vec![0.4, 0.3]], &obs).unwrap(), 0.02, epsilon = 1e-15);
        assert!(chi2(&[1.0], &[vec![0.4]], &obs).is_err());
    }

    #[test]
    fn optimizer_examples() {
        let cfg = GaConfig::default();
        let obs: Vec<f64> = (0..30).map(|i| 0.1 + 0.01 * i as f64).collect();
        assert_eq!(optimize_weights(std::slice::from_ref(&obs), &obs, &cfg).unwrap(), [1.0]);
        let noisy: Vec<f64> = obs.iter().enumerate().map(|(i, o)| o + if i % 2 == 0 { 0.05 } else { 0.02 }).collect();
        let w = optimize_weights(&[obs.clone(), noisy], &obs, &cfg).unwrap();
        assert!(w[0] >= 0.999, "{w:?}");
        assert!(optimize_weights(&[vec![]], &[], &cfg).is_err());
    }

    #[test]
    fn two_member_grid_brackets_optimum() {
        let obs: Vec<f64> = (0..40).map(|i| 0.2 + 0.005 * i as f64).collect();
        let a: Vec<f64> = obs.iter().enumerate().map(|(i, o)| o - 0.03 + 0.001 * (i % 3) as f64).collect();
        let b: Vec<f64> = obs.iter().enumerate().map(|(i, o)| o + 0.05 - 0.002 * (i % 5) as f64).collect();
        let preds = [a, b];
        let grid: Vec<(f64, f64)> =
            (0..=100).map(|k| k as f64 / 100.0).map(|w| (w, chi2(&[w, 1.0 - w], &preds, &obs).unwrap())).collect();
        let best = grid.iter().min_by(|x, y| x.1.total_cmp(&y.1)).unwrap().0;
        let w = optimize_weights(&preds, &obs, &GaConfig::default()).unwrap();
        assert!((w[0] - best).abs() <= 0.01 + 1e-12, "{} vs grid {}", w[0], best);
    }

    #[test]
    fn stratified_dispatch() {
        let members = vec![PtfId::Cosby0, PtfId::Clapp];
        let sand = WeightVector::one_hot(members.clone(), 0).unwrap();
        let fallback = WeightVector::one_hot(members.clone(), 1).unwrap();
        let m = StratifiedModel {
            scheme: StratificationScheme::TextureClass,
            strata: [(StratumKey::TextureClass(crate::ptf::UsdaClass::Sand), sand.clone())].into(),
            fallback: fallback.clone(),
        };
        let rec = PredictorRecord::from_texture(92.0, 4.0, 4.0);
        assert_eq!(m.weights_for(m.resolve(&rec, None, 330.0)), (&sand, false));
        let clay = PredictorRecord::from_texture(10.0, 20.0, 70.0);
        assert_eq!(m.weights_for(m.resolve(&clay, None, 330.0)), (&fallback, true));
        let ph = StratifiedModel { scheme: StratificationScheme::PressureHead, ..m };
        assert_eq!(ph.resolve(&rec, None, 330.0), Some(StratumKey::PressureHead(330)));
        assert_eq!(ph.resolve(&rec, None, 0.0), None);
    }

    proptest! {
        #[test]
        fn permutation_leaves_chi2_unchanged(
            rows in prop::collection::vec(prop::collection::vec(0.0..0.6f64, 3), 1..30),
            w in prop::collection::vec(0.0..1.0f64, 3),
        ) {
            prop_assume!(w.iter().sum::<f64>() > 1e-6);
            let obs: Vec<f64> = rows.iter().map(|r| r[0] * 0.5 + 0.1).collect();
            let cols: Vec<Vec<f64>> = (0..3).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
            let base = chi2(&w, &cols, &obs).unwrap();
            let perm = [2usize, 0, 1];
            let pcols: Vec<Vec<f64>> = perm.iter().map(|&j| cols[j].clone()).collect();
            let pw: Vec<f64> = perm.iter().map(|&j| w[j]).collect();
            let permuted = chi2(&pw, &pcols, &obs).unwrap();
            prop_assert!((base - permuted).abs() <= 1e-12 * base.max(1e-300));
        }

        #[test]
        fn optimizer_dominates_one_hots(
            rows in prop::collection::vec(prop::collection::vec(0.0..0.6f64, 4), 2..25),
            seed: u64,
        ) {
            let obs: Vec<f64> = rows.iter().map(|r| r.iter().sum::<f64>() / 4.0 + 0.01).collect();
            let cols: Vec<Vec<f64>> = (0..3).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
            let cfg = GaConfig { seed, max_generations: 20, ..GaConfig::default() };
            let w = optimize_weights(&cols, &obs, &cfg).unwrap();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            let c = chi2(&w, &cols, &obs).unwrap();
            for k in 0..3 {
                let mut e = vec![0.0; 3];
                e[k] = 1.0;
                prop_assert!(c <= chi2(&e, &cols, &obs).unwrap());
            }
        }
    }
}
