//! Linear-in-coefficients regressions read from coefficient files.
//!
//! A file row is `param,transform,term,coefficient`. A parameter value is the
//! sum of `coefficient * term` over its rows, passed through `transform`.
//!
//! Terms are products (`*`) of factors drawn from `1`, `var`, `var^k`,
//! `1/var` and `ln(var)`, where `var` is one of the names in [`Variable`].

use std::fmt;

use super::{data_lines, PtfError};

/// Floor applied to a predictor before it enters `ln(var)` or `1/var`.
pub const MIN_POSITIVE_PREDICTOR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    /// mass %
    Sand,
    Silt,
    Clay,
    /// g/cm³
    BulkDensity,
    /// organic carbon, mass %
    OrganicCarbon,
    /// organic carbon, g/kg
    OrganicCarbonGkg,
    /// organic matter, mass % (1.724 × OC)
    OrganicMatter,
    /// 1 − bulk density / 2.65
    Porosity,
    /// 1 for topsoil, 0 for subsoil
    Topsoil,
}

impl Variable {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "sand" => Variable::Sand,
            "silt" => Variable::Silt,
            "clay" => Variable::Clay,
            "bd" => Variable::BulkDensity,
            "oc" => Variable::OrganicCarbon,
            "oc_gkg" => Variable::OrganicCarbonGkg,
            "om" => Variable::OrganicMatter,
            "porosity" => Variable::Porosity,
            "topsoil" => Variable::Topsoil,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Variable::Sand => "sand",
            Variable::Silt => "silt",
            Variable::Clay => "clay",
            Variable::BulkDensity => "bd",
            Variable::OrganicCarbon => "oc",
            Variable::OrganicCarbonGkg => "oc_gkg",
            Variable::OrganicMatter => "om",
            Variable::Porosity => "porosity",
            Variable::Topsoil => "topsoil",
        }
    }
}

/// Values of the regression variables for one record. Missing predictors are `None`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Inputs {
    pub sand: Option<f64>,
    pub silt: Option<f64>,
    pub clay: Option<f64>,
    pub bulk_density: Option<f64>,
    pub organic_carbon: Option<f64>,
    pub topsoil: bool,
}

pub const PARTICLE_DENSITY: f64 = 2.65;
pub const OM_PER_OC: f64 = 1.724;

impl Inputs {
    fn get(&self, v: Variable) -> Option<f64> {
        match v {
            Variable::Sand => self.sand,
            Variable::Silt => self.silt,
            Variable::Clay => self.clay,
            Variable::BulkDensity => self.bulk_density,
            Variable::OrganicCarbon => self.organic_carbon,
            Variable::OrganicCarbonGkg => self.organic_carbon.map(|oc| oc * 10.0),
            Variable::OrganicMatter => self.organic_carbon.map(|oc| oc * OM_PER_OC),
            Variable::Porosity => self.bulk_density.map(|bd| 1.0 - bd / PARTICLE_DENSITY),
            Variable::Topsoil => Some(if self.topsoil { 1.0 } else { 0.0 }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Factor {
    Power(Variable, f64),
    Inverse(Variable),
    Ln(Variable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    text: String,
    factors: Vec<Factor>,
}

impl Term {
    pub fn parse(s: &str) -> Result<Self, String> {
        let text = s.trim().to_string();
        if text == "1" {
            return Ok(Term { text, factors: Vec::new() });
        }
        let factors = text.split('*').map(|f| parse_factor(f.trim())).collect::<Result<Vec<_>, _>>()?;
        Ok(Term { text, factors })
    }

    pub fn variables(&self) -> impl Iterator<Item = Variable> + '_ {
        self.factors.iter().map(|f| match *f {
            Factor::Power(v, _) | Factor::Inverse(v) | Factor::Ln(v) => v,
        })
    }

    /// Returns the term value and whether a positivity floor was applied.
    fn eval(&self, inputs: &Inputs) -> Result<(f64, bool), Variable> {
        let mut value = 1.0;
        let mut floored = false;
        for f in &self.factors {
            let x = match *f {
                Factor::Power(v, _) | Factor::Inverse(v) | Factor::Ln(v) => inputs.get(v).ok_or(v)?,
            };
            value *= match *f {
                Factor::Power(_, 1.0) => x,
                Factor::Power(_, k) if k.fract() == 0.0 => x.powi(k as i32),
                Factor::Power(_, k) => x.powf(k),
                Factor::Inverse(_) | Factor::Ln(_) => {
                    let safe = if x < MIN_POSITIVE_PREDICTOR {
                        floored = true;
                        MIN_POSITIVE_PREDICTOR
                    } else {
                        x
                    };
                    if matches!(f, Factor::Ln(_)) {
                        safe.ln()
                    } else {
                        1.0 / safe
                    }
                }
            };
        }
        Ok((value, floored))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

fn parse_factor(s: &str) -> Result<Factor, String> {
    let var = |name: &str| Variable::parse(name.trim()).ok_or_else(|| format!("unknown variable '{name}'"));
    if let Some(rest) = s.strip_prefix("1/") {
        return Ok(Factor::Inverse(var(rest)?));
    }
    if let Some(inner) = s.strip_prefix("ln(").and_then(|r| r.strip_suffix(')')) {
        return Ok(Factor::Ln(var(inner)?));
    }
    if let Some((name, k)) = s.split_once('^') {
        let k: f64 = k.trim().parse().map_err(|_| format!("bad exponent in '{s}'"))?;
        return Ok(Factor::Power(var(name)?, k));
    }
    Ok(Factor::Power(var(s)?, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Identity,
    /// value / 100
    Percent,
    Exp,
    Pow10,
    /// exp(value) + 1
    ExpPlusOne,
}

impl Transform {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "identity" => Transform::Identity,
            "percent" => Transform::Percent,
            "exp" => Transform::Exp,
            "pow10" => Transform::Pow10,
            "exp_plus1" => Transform::ExpPlusOne,
            _ => return None,
        })
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Percent => x / 100.0,
            Transform::Exp => x.exp(),
            Transform::Pow10 => 10f64.powf(x),
            Transform::ExpPlusOne => x.exp() + 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamEquation {
    pub name: String,
    pub transform: Transform,
    pub terms: Vec<(Term, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regression {
    pub ptf: String,
    pub provenance: Vec<String>,
    pub params: Vec<ParamEquation>,
}

/// Output of [`Regression::evaluate`].
#[derive(Debug, Clone, Default)]
pub struct Evaluated {
    values: Vec<(String, f64)>,
    pub floored: bool,
}

impl Evaluated {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

impl Regression {
    pub fn parse(ptf: &str, text: &str) -> Result<Self, PtfError> {
        let (provenance, mut rows) = data_lines(text);
        match rows.next() {
            Some((_, h)) if h.replace(' ', "") == "param,transform,term,coefficient" => {}
            Some((line, h)) => return Err(PtfError::data(ptf, line, format!("unexpected header '{h}'"))),
            None => return Err(PtfError::data(ptf, 0, "missing header row")),
        }
        let mut params: Vec<ParamEquation> = Vec::new();
        for (line, row) in rows {
            let cells: Vec<&str> = row.split(',').map(str::trim).collect();
            if cells.len() != 4 {
                return Err(PtfError::data(ptf, line, format!("expected 4 cells, found {}", cells.len())));
            }
            let transform = Transform::parse(cells[1])
                .ok_or_else(|| PtfError::data(ptf, line, format!("unknown transform '{}'", cells[1])))?;
            let term = Term::parse(cells[2]).map_err(|e| PtfError::data(ptf, line, e))?;
            let coef: f64 =
                cells[3].parse().map_err(|_| PtfError::data(ptf, line, format!("bad coefficient '{}'", cells[3])))?;
            match params.iter_mut().find(|p| p.name == cells[0]) {
                Some(p) if p.transform != transform => {
                    return Err(PtfError::data(ptf, line, format!("inconsistent transform for '{}'", cells[0])));
                }
                Some(p) => p.terms.push((term, coef)),
                None => params.push(ParamEquation { name: cells[0].to_string(), transform, terms: vec![(term, coef)] }),
            }
        }
        Ok(Self { ptf: ptf.to_string(), provenance, params })
    }

    pub fn variables(&self) -> Vec<Variable> {
        let mut out: Vec<Variable> = Vec::new();
        for p in &self.params {
            for (t, _) in &p.terms {
                for v in t.variables() {
                    if !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
        }
        out
    }

    pub fn evaluate(&self, inputs: &Inputs) -> Result<Evaluated, PtfError> {
        let mut out = Evaluated::default();
        for p in &self.params {
            let mut sum = 0.0;
            for (term, coef) in &p.terms {
                let (value, floored) = term
                    .eval(inputs)
                    .map_err(|v| PtfError::MissingPredictor { ptf: self.ptf.clone(), field: v.name().to_string() })?;
                out.floored |= floored;
                sum += coef * value;
            }
            out.values.push((p.name.clone(), p.transform.apply(sum)));
        }
        Ok(out)
    }
}
