//! Member predictions for a loam record against values computed by hand
//! from the coefficient tables, outside this crate.

use ptfens::ptf::{PredictorRecord, PtfId, PtfLibrary};
use ptfens::retention::RetentionParams;
use ptfens::theta_at;

fn loam() -> PredictorRecord {
    PredictorRecord::from_texture(40.0, 40.0, 20.0).with_bulk_density(1.4).with_organic_carbon(1.0)
}

fn close(a: f64, b: f64) {
    assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
}

fn check_thetas(id: PtfId, fc: f64, wp: f64) {
    let lib = PtfLibrary::builtin().unwrap();
    close(lib.predict_theta(id, &loam(), 330.0).unwrap(), fc);
    close(lib.predict_theta(id, &loam(), 15000.0).unwrap(), wp);
}

fn params(id: PtfId) -> RetentionParams {
    PtfLibrary::builtin().unwrap().predict(id, &loam()).unwrap().params
}

#[test]
fn rawls() {
    match params(PtfId::Rawls) {
        RetentionParams::BrooksCorey(p) => {
            close(p.theta_r, 0.08242130028479887);
            close(p.theta_s, 0.4716981132075472);
            close(p.psi_b, 23.346063519537484);
            close(p.lambda, 0.3209711048312958);
        }
        other => panic!("{other:?}"),
    }
    check_thetas(PtfId::Rawls, 0.24877994941506054, 0.13128776960058217);
}

#[test]
fn wosten() {
    match params(PtfId::Wosten) {
        RetentionParams::VanGenuchten(p) => {
            close(p.theta_s, 0.4353337984141571);
            close(p.alpha, 0.0361463224132509);
            close(p.n, 1.2042544027779654);
        }
        other => panic!("{other:?}"),
    }
    check_thetas(PtfId::Wosten, 0.26019303306170277, 0.12031549754082525);
}

#[test]
fn weynants() {
    match params(PtfId::Weynants) {
        RetentionParams::VanGenuchten(p) => {
            close(p.theta_s, 0.43316);
            close(p.alpha, 0.007195496030632629);
            close(p.n, 1.1761181856377638);
        }
        other => panic!("{other:?}"),
    }
    check_thetas(PtfId::Weynants, 0.35516280766520153, 0.18980587589575712);
}

#[test]
fn vereecken() {
    match params(PtfId::Vereecken) {
        RetentionParams::VanGenuchten(p) => {
            close(p.theta_r, 0.129);
            close(p.theta_s, 0.4338);
            close(p.alpha, 0.002577848867801281);
            close(p.n, 0.721083743026607);
            assert_eq!(p.m(), 1.0);
        }
        other => panic!("{other:?}"),
    }
    check_thetas(PtfId::Vereecken, 0.29027521200092704, 0.14938633289757533);
}

#[test]
fn campbell() {
    match params(PtfId::Campbell) {
        RetentionParams::Campbell(p) => {
            close(p.theta_s, 0.4716981132075472);
            close(p.psi_e, 29.529762936210727);
            close(p.b, 6.86137906527094);
        }
        other => panic!("{other:?}"),
    }
    check_thetas(PtfId::Campbell, 0.3318089903827995, 0.19024242237697567);
}

#[test]
fn cosby_regressions() {
    match params(PtfId::Cosby2) {
        RetentionParams::Campbell(p) => {
            close(p.theta_s, 0.4408);
            close(p.psi_e, 25.82260190634597);
            close(p.b, 6.12);
        }
        other => panic!("{other:?}"),
    }
    match params(PtfId::Cosby1) {
        RetentionParams::Campbell(p) => {
            close(p.theta_s, 0.4386);
            close(p.psi_e, 22.698648518838212);
            close(p.b, 6.09);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn every_available_member_gives_a_monotone_curve() {
    let lib = PtfLibrary::builtin().unwrap();
    for id in lib.available() {
        let p = lib.predict(id, &loam()).unwrap().params;
        let t: Vec<f64> = [0.0, 60.0, 330.0, 1000.0, 15000.0].iter().map(|s| theta_at(&p, *s).unwrap()).collect();
        assert!(t.windows(2).all(|w| w[0] >= w[1]), "{id}: {t:?}");
        assert!(t.iter().all(|x| (0.0..=1.0).contains(x)), "{id}: {t:?}");
    }
    assert!(!lib.is_available(PtfId::RosettaH2w));
    assert!(lib.predict(PtfId::RosettaH3w, &loam()).is_err());
}
