use std::fmt;
use std::str::FromStr;

use super::PtfError;

/// Allowed deviation of sand + silt + clay from 100 %.
pub const TEXTURE_SUM_TOLERANCE: f64 = 1.0;

/// The twelve USDA soil texture classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UsdaClass {
    Sand,
    LoamySand,
    SandyLoam,
    SandyClayLoam,
    SandyClay,
    Loam,
    SiltLoam,
    Silt,
    SiltyClayLoam,
    SiltyClay,
    ClayLoam,
    Clay,
}

impl UsdaClass {
    pub const ALL: [UsdaClass; 12] = [
        UsdaClass::Sand,
        UsdaClass::LoamySand,
        UsdaClass::SandyLoam,
        UsdaClass::SandyClayLoam,
        UsdaClass::SandyClay,
        UsdaClass::Loam,
        UsdaClass::SiltLoam,
        UsdaClass::Silt,
        UsdaClass::SiltyClayLoam,
        UsdaClass::SiltyClay,
        UsdaClass::ClayLoam,
        UsdaClass::Clay,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UsdaClass::Sand => "sand",
            UsdaClass::LoamySand => "loamy sand",
            UsdaClass::SandyLoam => "sandy loam",
            UsdaClass::SandyClayLoam => "sandy clay loam",
            UsdaClass::SandyClay => "sandy clay",
            UsdaClass::Loam => "loam",
            UsdaClass::SiltLoam => "silt loam",
            UsdaClass::Silt => "silt",
            UsdaClass::SiltyClayLoam => "silty clay loam",
            UsdaClass::SiltyClay => "silty clay",
            UsdaClass::ClayLoam => "clay loam",
            UsdaClass::Clay => "clay",
        }
    }

    pub fn abbreviation(self) -> &'static str {
        match self {
            UsdaClass::Sand => "Sa",
            UsdaClass::LoamySand => "LoSa",
            UsdaClass::SandyLoam => "SaLo",
            UsdaClass::SandyClayLoam => "SaClLo",
            UsdaClass::SandyClay => "SaCl",
            UsdaClass::Loam => "Lo",
            UsdaClass::SiltLoam => "SiLo",
            UsdaClass::Silt => "Si",
            UsdaClass::SiltyClayLoam => "SiClLo",
            UsdaClass::SiltyClay => "SiCl",
            UsdaClass::ClayLoam => "ClLo",
            UsdaClass::Clay => "Cl",
        }
    }

    /// Position in [`UsdaClass::ALL`]; also the integer code used in stratum rasters.
    pub fn index(self) -> usize {
        UsdaClass::ALL.iter().position(|c| *c == self).unwrap()
    }
}

impl fmt::Display for UsdaClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UsdaClass {
    type Err = PtfError;

    /// Accepts full names in any case with spaces, `_` or `-`, and the abbreviations.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String =
            s.trim().chars().filter(|c| !matches!(c, ' ' | '_' | '-')).flat_map(char::to_lowercase).collect();
        UsdaClass::ALL
            .into_iter()
            .find(|c| {
                c.name().replace(' ', "") == norm
                    || c.abbreviation().to_lowercase() == norm
                    // "silty loam" appears in some tables for silt loam
                    || (*c == UsdaClass::SiltLoam && norm == "siltyloam")
            })
            .ok_or_else(|| PtfError::Texture(format!("unknown USDA texture class '{s}'")))
    }
}

/// Normalizes fractions to sum to exactly 100 after checking the tolerance.
pub fn normalize_fractions(sand: f64, silt: f64, clay: f64) -> Result<(f64, f64, f64), PtfError> {
    for (name, v) in [("sand", sand), ("silt", silt), ("clay", clay)] {
        if !(0.0..=100.0).contains(&v) {
            return Err(PtfError::Texture(format!("{name} = {v} outside [0, 100]")));
        }
    }
    let sum = sand + silt + clay;
    if (sum - 100.0).abs() > TEXTURE_SUM_TOLERANCE {
        return Err(PtfError::Texture(format!("sand + silt + clay = {sum}, expected 100 +/- {TEXTURE_SUM_TOLERANCE}")));
    }
    let k = 100.0 / sum;
    Ok((sand * k, silt * k, clay * k))
}

/// USDA texture triangle. Inputs are mass percentages.
///
/// Rules are tested in the order listed below; a point on a shared boundary
/// takes the first class whose test it satisfies.
pub fn classify_texture(sand: f64, silt: f64, clay: f64) -> Result<UsdaClass, PtfError> {
    let (sand, silt, clay) = normalize_fractions(sand, silt, clay)?;
    let class = if silt + 1.5 * clay < 15.0 {
        UsdaClass::Sand
    } else if silt + 2.0 * clay < 30.0 {
        UsdaClass::LoamySand
    } else if (clay >= 7.0 && clay < 20.0 && sand > 52.0) || (clay < 7.0 && silt < 50.0) {
        UsdaClass::SandyLoam
    } else if clay >= 7.0 && clay < 27.0 && silt >= 28.0 && silt < 50.0 && sand <= 52.0 {
        UsdaClass::Loam
    } else if (silt >= 50.0 && clay >= 12.0 && clay < 27.0) || (silt >= 50.0 && silt < 80.0 && clay < 12.0) {
        UsdaClass::SiltLoam
    } else if silt >= 80.0 && clay < 12.0 {
        UsdaClass::Silt
    } else if clay >= 20.0 && clay < 35.0 && silt < 28.0 && sand > 45.0 {
        UsdaClass::SandyClayLoam
    } else if clay >= 27.0 && clay < 40.0 && sand > 20.0 && sand <= 45.0 {
        UsdaClass::ClayLoam
    } else if clay >= 27.0 && clay < 40.0 && sand <= 20.0 {
        UsdaClass::SiltyClayLoam
    } else if clay >= 35.0 && sand > 45.0 {
        UsdaClass::SandyClay
    } else if clay >= 40.0 && silt >= 40.0 {
        UsdaClass::SiltyClay
    } else {
        UsdaClass::Clay
    };
    Ok(class)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_points() {
        assert_eq!(classify_texture(95.0, 3.0, 2.0).unwrap(), UsdaClass::Sand);
        assert_eq!(classify_texture(10.0, 85.0, 5.0).unwrap(), UsdaClass::Silt);
        assert_eq!(classify_texture(33.0, 33.0, 34.0).unwrap(), UsdaClass::ClayLoam);
        assert_eq!(classify_texture(40.0, 40.0, 20.0).unwrap(), UsdaClass::Loam);
        assert_eq!(classify_texture(10.0, 30.0, 60.0).unwrap(), UsdaClass::Clay);
    }

    #[test]
    fn sum_violations() {
        assert!(classify_texture(50.0, 50.0, 50.0).is_err());
        assert!(classify_texture(-1.0, 50.0, 51.0).is_err());
        // within tolerance, renormalized
        assert_eq!(classify_texture(95.5, 3.0, 2.0).unwrap(), UsdaClass::Sand);
    }

    #[test]
    fn parse_names_and_abbreviations() {
        for c in UsdaClass::ALL {
            assert_eq!(c.name().parse::<UsdaClass>().unwrap(), c);
            assert_eq!(c.abbreviation().parse::<UsdaClass>().unwrap(), c);
            assert_eq!(c.name().to_uppercase().replace(' ', "_").parse::<UsdaClass>().unwrap(), c);
        }
        assert!("peat".parse::<UsdaClass>().is_err());
    }
}
