use std::collections::BTreeMap;

use super::texture::UsdaClass;
use super::{data_lines, PtfError};
use crate::retention::{CampbellParams, RetentionParams, VanGenuchtenParams};

/// Class-mean parameters of a Group A pedotransfer function.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassLookupTable {
    pub ptf: String,
    /// Citation comment lines from the source file.
    pub provenance: Vec<String>,
    entries: BTreeMap<UsdaClass, RetentionParams>,
}

impl ClassLookupTable {
    pub fn new(ptf: impl Into<String>, entries: impl IntoIterator<Item = (UsdaClass, RetentionParams)>) -> Self {
        Self { ptf: ptf.into(), provenance: Vec::new(), entries: entries.into_iter().collect() }
    }

    /// Parses a delimited class table. The header decides the family:
    ///
    /// * `class,theta_r,theta_s,alpha,n` or `class,theta_r,theta_s,log10_alpha,log10_n`
    ///   for van Genuchten,
    /// * `class,theta_s,psi_e,b` for Campbell.
    pub fn parse(ptf: &str, text: &str) -> Result<Self, PtfError> {
        let (provenance, mut rows) = data_lines(text);
        let (header_line, header) = rows.next().ok_or_else(|| PtfError::data(ptf, 0, "missing header row"))?;
        let header: Vec<&str> = header.split(',').map(str::trim).collect();
        let layout = match header.as_slice() {
            ["class", "theta_r", "theta_s", "alpha", "n"] => Layout::Vg { log10: false },
            ["class", "theta_r", "theta_s", "log10_alpha", "log10_n"] => Layout::Vg { log10: true },
            ["class", "theta_s", "psi_e", "b"] => Layout::Campbell,
            _ => return Err(PtfError::data(ptf, header_line, format!("unrecognized header {header:?}"))),
        };
        let mut entries = BTreeMap::new();
        for (line, row) in rows {
            let cells: Vec<&str> = row.split(',').map(str::trim).collect();
            if cells.len() != header.len() {
                return Err(PtfError::data(
                    ptf,
                    line,
                    format!("expected {} cells, found {}", header.len(), cells.len()),
                ));
            }
            let class: UsdaClass = cells[0].parse().map_err(|e: PtfError| PtfError::data(ptf, line, e.to_string()))?;
            let nums = cells[1..]
                .iter()
                .map(|c| c.parse::<f64>().map_err(|_| PtfError::data(ptf, line, format!("bad number '{c}'"))))
                .collect::<Result<Vec<_>, _>>()?;
            let params: RetentionParams = match layout {
                Layout::Vg { log10: false } => VanGenuchtenParams::new(nums[0], nums[1], nums[2], nums[3]).into(),
                Layout::Vg { log10: true } => {
                    VanGenuchtenParams::new(nums[0], nums[1], 10f64.powf(nums[2]), 10f64.powf(nums[3])).into()
                }
                Layout::Campbell => CampbellParams::new(nums[0], nums[1], nums[2]).into(),
            };
            params.validate().map_err(|e| PtfError::data(ptf, line, e.to_string()))?;
            if entries.insert(class, params).is_some() {
                return Err(PtfError::data(ptf, line, format!("duplicate class '{class}'")));
            }
        }
        Ok(Self { ptf: ptf.to_string(), provenance, entries })
    }

    pub fn lookup(&self, class: UsdaClass) -> Result<RetentionParams, PtfError> {
        self.entries.get(&class).copied().ok_or_else(|| PtfError::LookupMissing { ptf: self.ptf.clone(), class })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.entries.len() == UsdaClass::ALL.len()
    }
}

#[derive(Clone, Copy)]
enum Layout {
    Vg { log10: bool },
    Campbell,
}
