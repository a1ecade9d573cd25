use super::{ReasonCode, RemovalEntry, SoilSample, Stage};
use crate::ptf::BULK_DENSITY_RANGE;
use crate::retention::{PSI_FIELD_CAPACITY, PSI_WILTING_POINT};

/// Upper bound for θ at field capacity and wilting point.
pub const THETA_FC_WP_MAX: f64 = 0.6;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QaOutcome {
    pub kept: Vec<SoilSample>,
    pub log: Vec<RemovalEntry>,
}

fn entry(id: &str, reason: ReasonCode, detail: String) -> RemovalEntry {
    RemovalEntry { sample_id: id.to_string(), stage: Stage::Qa, reason, detail }
}

/// Applies the quality rules in a fixed order:
/// bulk density range, θ > 1 (and θ ≤ 0), θ > 0.6 at 330/15000 cm,
/// θ(330) < θ(15000), and finally samples with no observations left.
pub fn qa_filter(samples: Vec<SoilSample>) -> QaOutcome {
    let mut out = QaOutcome::default();
    for mut s in samples {
        let bd = s.bulk_density_330;
        if !(BULK_DENSITY_RANGE.0..=BULK_DENSITY_RANGE.1).contains(&bd) {
            out.log.push(entry(&s.sample_id, ReasonCode::BdRange, format!("bulk_density={bd}")));
            continue;
        }
        s.observations.retain(|o| {
            let reason = if o.theta > 1.0 {
                ReasonCode::ThetaGtOne
            } else if !(o.theta > 0.0) {
                ReasonCode::ThetaNonPositive
            } else {
                return true;
            };
            out.log.push(entry(&s.sample_id, reason, format!("psi={} theta={}", o.psi, o.theta)));
            false
        });
        s.observations.retain(|o| {
            let at_fc_wp = o.psi == PSI_FIELD_CAPACITY || o.psi == PSI_WILTING_POINT;
            if at_fc_wp && o.theta > THETA_FC_WP_MAX {
                out.log.push(entry(
                    &s.sample_id,
                    ReasonCode::ThetaGtFcWpMax,
                    format!("psi={} theta={}", o.psi, o.theta),
                ));
                return false;
            }
            true
        });
        if let (Some(fc), Some(wp)) = (s.theta_at_head(PSI_FIELD_CAPACITY), s.theta_at_head(PSI_WILTING_POINT)) {
            if fc < wp {
                out.log.push(entry(&s.sample_id, ReasonCode::FcLtWp, format!("theta_330={fc} theta_15000={wp}")));
                continue;
            }
        }
        if s.observations.is_empty() {
            out.log.push(entry(&s.sample_id, ReasonCode::NoObservations, String::new()));
            continue;
        }
        out.kept.push(s);
    }
    out
}
