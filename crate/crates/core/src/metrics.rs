//! Goodness of fit and information criteria for comparing PTFs and ensembles.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("invalid input: {0}")]
    Input(String),
}

pub fn rmse(predicted: &[f64], observed: &[f64]) -> Result<f64, MetricsError> {
    Ok((sum_sq(predicted, observed)? / predicted.len() as f64).sqrt())
}

fn sum_sq(predicted: &[f64], observed: &[f64]) -> Result<f64, MetricsError> {
    if predicted.len() != observed.len() {
        return Err(MetricsError::Input(format!(
            "length mismatch: {} predicted, {} observed",
            predicted.len(),
            observed.len()
        )));
    }
    if predicted.is_empty() {
        return Err(MetricsError::Input("empty vectors".into()));
    }
    Ok(predicted.iter().zip(observed).map(|(p, o)| (p - o) * (p - o)).sum())
}

/// Fit of one model on an evaluation set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSummary {
    /// N_z
    pub n_points: usize,
    pub rmse: f64,
    /// Sum of squared residuals.
    pub j: f64,
    /// N_k
    pub n_params: usize,
}

impl FitSummary {
    pub fn from_residuals(predicted: &[f64], observed: &[f64], n_params: usize) -> Result<Self, MetricsError> {
        let j = sum_sq(predicted, observed)?;
        let n = predicted.len();
        Self::check_params(n_params)?;
        Ok(Self { n_points: n, rmse: (j / n as f64).sqrt(), j, n_params })
    }

    /// Builds a summary from a reported RMSE; J is reconstructed as N_z·RMSE².
    pub fn from_rmse(rmse: f64, n_points: usize, n_params: usize) -> Result<Self, MetricsError> {
        if n_points == 0 {
            return Err(MetricsError::Input("n_points must be >= 1".into()));
        }
        if !(rmse >= 0.0) {
            return Err(MetricsError::Input(format!("rmse {rmse} must be >= 0")));
        }
        Self::check_params(n_params)?;
        Ok(Self { n_points, rmse, j: n_points as f64 * rmse * rmse, n_params })
    }

    fn check_params(n_params: usize) -> Result<(), MetricsError> {
        if n_params == 0 {
            return Err(MetricsError::Input("n_params must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionContext {
    pub j_star: f64,
    pub sigma_hat2: f64,
}

impl SelectionContext {
    pub fn new(j_values: &[f64], n_points: usize) -> Result<Self, MetricsError> {
        let j_star = j_star(j_values)?;
        Ok(Self { j_star, sigma_hat2: sigma_hat2(j_star, n_points)? })
    }
}

pub fn j_star(j_values: &[f64]) -> Result<f64, MetricsError> {
    if j_values.is_empty() {
        return Err(MetricsError::Input("no J values".into()));
    }
    Ok(j_values.iter().sum::<f64>() / j_values.len() as f64)
}

pub fn sigma_hat2(j_star: f64, n_points: usize) -> Result<f64, MetricsError> {
    if n_points == 0 {
        return Err(MetricsError::Input("n_points must be >= 1".into()));
    }
    Ok(j_star / n_points as f64)
}

pub fn aic(fit: &FitSummary, ctx: &SelectionContext) -> Result<f64, MetricsError> {
    if !(ctx.sigma_hat2 > 0.0) {
        return Err(MetricsError::Input(format!("error variance {} must be > 0", ctx.sigma_hat2)));
    }
    Ok(fit.j / ctx.sigma_hat2 + 2.0 * fit.n_params as f64)
}

pub fn aicc(fit: &FitSummary, ctx: &SelectionContext) -> Result<f64, MetricsError> {
    let k = fit.n_params as f64;
    let denom = fit.n_points as f64 - k - 1.0;
    if denom <= 0.0 {
        return Err(MetricsError::Input(format!("N_z = {} too small for N_k = {}", fit.n_points, fit.n_params)));
    }
    Ok(aic(fit, ctx)? + 2.0 * k * (k + 1.0) / denom)
}

/// Parameter count of an ensemble: one per member weight, per stratum.
pub fn ensemble_n_params(members: usize, strata: usize) -> usize {
    members * strata.max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub model: String,
    pub fit: FitSummary,
    pub aic: f64,
    pub aicc: f64,
}

impl ReportRow {
    pub fn new(model: impl Into<String>, fit: FitSummary, ctx: &SelectionContext) -> Result<Self, MetricsError> {
        Ok(Self { model: model.into(), fit, aic: aic(&fit, ctx)?, aicc: aicc(&fit, ctx)? })
    }
}

/// Writes `model,n_z,n_k,rmse,j,aic,aicc`.
pub fn write_report<W: std::io::Write>(out: W, rows: &[ReportRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "n_z", "n_k", "rmse", "j", "aic", "aicc"])?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.fit.n_points.to_string(),
            r.fit.n_params.to_string(),
            format!("{:.6}", r.fit.rmse),
            format!("{:.6}", r.fit.j),
            format!("{:.2}", r.aic),
            format!("{:.2}", r.aicc),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[0.1, 0.2], &[0.1, 0.2]).unwrap(), 0.0);
        assert_relative_eq!(rmse(&[0.4, 0.2], &[0.3, 0.3]).unwrap(), 0.1, epsilon = 1e-15);
        assert_relative_eq!(rmse(&[0.3, 0.0, 0.0, 0.0], &[0.0; 4]).unwrap(), 0.15, epsilon = 1e-15);
        assert!(rmse(&[0.1], &[0.1, 0.2]).is_err());
        assert!(rmse(&[], &[]).is_err());
    }

    #[test]
    fn j_star_and_variance() {
        assert_eq!(j_star(&[10.0, 20.0, 30.0]).unwrap(), 20.0);
        assert_eq!(j_star(&[513.27]).unwrap(), 513.27);
        assert!(j_star(&[]).is_err());
        assert!((sigma_hat2(513.27, 118_599).unwrap() - 0.004328).abs() < 1e-6);
        assert_eq!(sigma_hat2(0.0, 5).unwrap(), 0.0);
        assert_eq!(sigma_hat2(100.0, 100).unwrap(), 1.0);
    }

    #[test]
    fn aic_examples() {
        let ctx = SelectionContext { j_star: 0.5, sigma_hat2: 0.25 };
        let fit = FitSummary { n_points: 10, rmse: 0.5f64.sqrt() / 10f64.sqrt(), j: 0.25, n_params: 1 };
        assert_relative_eq!(aic(&fit, &ctx).unwrap(), 3.0);
        let zero = SelectionContext { j_star: 0.0, sigma_hat2: 0.0 };
        assert!(aic(&fit, &zero).is_err());
    }

    #[test]
    fn aicc_corrections() {
        let ctx = SelectionContext { j_star: 1.0, sigma_hat2: 0.004329 };
        let gap = |k: usize, n: usize| {
            let f = FitSummary::from_rmse(0.05, n, k).unwrap();
            aicc(&f, &ctx).unwrap() - aic(&f, &ctx).unwrap()
        };
        assert_relative_eq!(gap(1, 118_599), 4.0 / 118_597.0, max_relative = 1e-6);
        assert!((gap(156, 118_599) - 0.4136).abs() < 1e-4);
        let degenerate = FitSummary::from_rmse(0.05, 10, 9).unwrap();
        assert!(aicc(&degenerate, &ctx).is_err());
    }

    #[test]
    fn report_columns() {
        let ctx = SelectionContext { j_star: 1.0, sigma_hat2: 0.01 };
        let row = ReportRow::new("m", FitSummary::from_rmse(0.1, 100, 2).unwrap(), &ctx).unwrap();
        let mut buf = Vec::new();
        write_report(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "model,n_z,n_k,rmse,j,aic,aicc");
        assert_eq!(text.lines().count(), 2);
    }

    proptest! {
        #[test]
        fn j_identity(r in 0.0..1.0f64, n in 1usize..1_000_000) {
            let f = FitSummary::from_rmse(r, n, 1).unwrap();
            prop_assert!((f.j - n as f64 * r * r).abs() <= 1e-10 * f.j.max(1e-300));
        }

        #[test]
        fn aicc_not_below_aic(r in 0.0..1.0f64, k in 1usize..50, extra in 2usize..10_000) {
            let ctx = SelectionContext { j_star: 1.0, sigma_hat2: 0.004 };
            let f = FitSummary::from_rmse(r, k + extra, k).unwrap();
            prop_assert!(aicc(&f, &ctx).unwrap() >= aic(&f, &ctx).unwrap());
        }

        #[test]
        fn rmse_zero_iff_equal(v in prop::collection::vec(-1.0..1.0f64, 1..20), i in 0usize..20, d in 1e-6..1.0f64) {
            prop_assert_eq!(rmse(&v, &v).unwrap(), 0.0);
            let mut w = v.clone();
            let i = i % v.len();
            w[i] += d;
            prop_assert!(rmse(&w, &v).unwrap() > 0.0);
        }

        #[test]
        fn ranking_shift_invariant(js in prop::collection::vec(1.0..1000.0f64, 2..10), shift in -1e4..1e4f64) {
            let argmin = |v: &[f64]| v.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            let shifted: Vec<_> = js.iter().map(|j| j + shift).collect();
            prop_assert_eq!(argmin(&js), argmin(&shifted));
        }
    }
}
