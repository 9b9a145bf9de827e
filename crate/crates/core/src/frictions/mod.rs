//! Country-pair frictions and the regression designs assembled from them.

mod design;
mod io;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::iso::Iso2;

pub use design::{build_dyad_design, build_triad_design, pair_key, DyadDesignOptions, TriadDesign, TriadDesignOptions};
pub use io::{read_countries, read_dyads};

pub const DEFAULT_WORKDAY: f64 = 10.0;
pub const MIN_UTC_OFFSET: f64 = -12.0;
pub const MAX_UTC_OFFSET: f64 = 14.0;

fn check_offset(x: f64) -> Result<()> {
    if x.is_finite() && (MIN_UTC_OFFSET..=MAX_UTC_OFFSET).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "UTC offset {x} outside [{MIN_UTC_OFFSET}, {MAX_UTC_OFFSET}]"
        )))
    }
}

/// Hours per day during which two offices, each open `workday` hours at the
/// same local times, are open simultaneously.
pub fn overlap_hours(offset_a: f64, offset_b: f64, workday: f64) -> Result<f64> {
    check_offset(offset_a)?;
    check_offset(offset_b)?;
    if !(workday > 0.0 && workday <= 24.0) {
        return Err(Error::Domain(format!("workday {workday} outside (0, 24]")));
    }
    let r = (offset_a - offset_b).abs() % 24.0;
    let d = r.min(24.0 - r);
    // the second term only matters for windows longer than half a day
    Ok((workday - d).max(0.0) + (workday - (24.0 - d)).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountryRecord {
    pub iso2: Iso2,
    pub utc_offset: f64,
    /// Statutory profit tax rate, percent.
    pub profit_tax: Option<f64>,
    pub labour_cost: Option<f64>,
}

/// One row of the raw gravity file. Optional indicators are `None` when the
/// file leaves them blank or lacks the column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadRecord {
    pub iso_o: Iso2,
    pub iso_d: Iso2,
    pub dist_km: f64,
    pub contig: Option<f64>,
    pub comlang: Option<f64>,
    pub colony: Option<f64>,
    pub legal: Option<f64>,
    pub rta: Option<f64>,
    pub cli_index: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadFrictions {
    pub iso_o: Iso2,
    pub iso_d: Iso2,
    pub wh: f64,
    pub log_dist: f64,
    pub home: f64,
    pub contig: Option<f64>,
    pub comlang: Option<f64>,
    pub colony: Option<f64>,
    pub legal: Option<f64>,
    pub rta: Option<f64>,
    pub cli_index: Option<f64>,
    pub ct_ratio: Option<f64>,
    pub lc_ratio: Option<f64>,
}

/// Pairwise control variables available to the design builders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Control {
    LogDist,
    Contig,
    Comlang,
    Colony,
    Legal,
    Rta,
    Home,
    Cli,
    CtRatio,
    LcRatio,
}

impl Control {
    pub const ALL: [Control; 10] = [
        Control::LogDist,
        Control::Contig,
        Control::Comlang,
        Control::Colony,
        Control::Legal,
        Control::Rta,
        Control::Home,
        Control::Cli,
        Control::CtRatio,
        Control::LcRatio,
    ];

    /// The standard gravity set: log distance and the five indicators.
    pub const GRAVITY: [Control; 6] = [
        Control::LogDist,
        Control::Contig,
        Control::Comlang,
        Control::Colony,
        Control::Legal,
        Control::Rta,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Control::LogDist => "log_dist",
            Control::Contig => "contig",
            Control::Comlang => "comlang",
            Control::Colony => "colony",
            Control::Legal => "legal",
            Control::Rta => "rta",
            Control::Home => "home",
            Control::Cli => "cli",
            Control::CtRatio => "ct_ratio",
            Control::LcRatio => "lc_ratio",
        }
    }

    pub fn value(&self, d: &DyadFrictions) -> Option<f64> {
        match self {
            Control::LogDist => Some(d.log_dist),
            Control::Contig => d.contig,
            Control::Comlang => d.comlang,
            Control::Colony => d.colony,
            Control::Legal => d.legal,
            Control::Rta => d.rta,
            Control::Home => Some(d.home),
            Control::Cli => d.cli_index,
            Control::CtRatio => d.ct_ratio,
            Control::LcRatio => d.lc_ratio,
        }
    }

    /// Comma-separated control names; `gravity` expands to the standard set.
    pub fn parse_list(s: &str) -> Result<Vec<Control>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "gravity" {
                out.extend(Control::GRAVITY);
            } else {
                out.push(part.parse()?);
            }
        }
        out.dedup();
        Ok(out)
    }
}

impl FromStr for Control {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Control::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown control `{s}`")))
    }
}

impl fmt::Display for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Frictions for every supplied dyad, looked up in either direction.
#[derive(Debug, Clone, Default)]
pub struct FrictionTable {
    pub countries: BTreeMap<Iso2, CountryRecord>,
    pub dyads: BTreeMap<(Iso2, Iso2), DyadFrictions>,
    pub workday: f64,
}

fn ratio(num: Option<f64>, den: Option<f64>) -> Option<f64> {
    Some(num? / den?)
}

impl FrictionTable {
    /// Frictions for `(o, d)`, falling back to the `(d, o)` row for the
    /// symmetric variables. Ratio controls always follow the requested
    /// direction.
    pub fn get(&self, o: Iso2, d: Iso2) -> Option<DyadFrictions> {
        if let Some(f) = self.dyads.get(&(o, d)) {
            return Some(f.clone());
        }
        let f = self.dyads.get(&(d, o))?;
        let (co, cd) = (&self.countries[&o], &self.countries[&d]);
        Some(DyadFrictions {
            iso_o: o,
            iso_d: d,
            ct_ratio: ratio(cd.profit_tax, co.profit_tax),
            lc_ratio: ratio(cd.labour_cost, co.labour_cost),
            ..f.clone()
        })
    }

    pub fn wh(&self, o: Iso2, d: Iso2) -> Option<f64> {
        let (a, b) = (self.countries.get(&o)?, self.countries.get(&d)?);
        overlap_hours(a.utc_offset, b.utc_offset, self.workday).ok()
    }
}

/// Joins country attributes onto the raw dyad rows. Every dyad country must
/// appear in the country table and distances must be positive; home dyads
/// carry their internal distance.
pub fn build_dyad_table(countries: &[CountryRecord], dyads: &[DyadRecord], workday: f64) -> Result<FrictionTable> {
    let mut table = FrictionTable {
        workday,
        ..Default::default()
    };
    for c in countries {
        check_offset(c.utc_offset)?;
        if table.countries.insert(c.iso2, c.clone()).is_some() {
            return Err(Error::Data(format!("country {} listed twice", c.iso2)));
        }
    }
    for r in dyads {
        let (Some(co), Some(cd)) = (table.countries.get(&r.iso_o), table.countries.get(&r.iso_d)) else {
            return Err(Error::Coverage(format!(
                "dyad {}-{} references a country missing from the country table",
                r.iso_o, r.iso_d
            )));
        };
        if !(r.dist_km.is_finite() && r.dist_km > 0.0) {
            return Err(Error::Data(format!(
                "dyad {}-{}: distance must be positive, got {}",
                r.iso_o, r.iso_d, r.dist_km
            )));
        }
        let f = DyadFrictions {
            iso_o: r.iso_o,
            iso_d: r.iso_d,
            wh: overlap_hours(co.utc_offset, cd.utc_offset, workday)?,
            log_dist: r.dist_km.ln(),
            home: f64::from(r.iso_o == r.iso_d),
            contig: r.contig,
            comlang: r.comlang,
            colony: r.colony,
            legal: r.legal,
            rta: r.rta,
            cli_index: r.cli_index,
            ct_ratio: ratio(cd.profit_tax, co.profit_tax),
            lc_ratio: ratio(cd.labour_cost, co.labour_cost),
        };
        if table.dyads.insert((r.iso_o, r.iso_d), f).is_some() {
            return Err(Error::Data(format!("dyad {}-{} listed twice", r.iso_o, r.iso_d)));
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iso(s: &str) -> Iso2 {
        s.parse().unwrap()
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(overlap_hours(1.0, 1.0, 10.0).unwrap(), 10.0);
        assert_eq!(overlap_hours(0.0, 12.0, 10.0).unwrap(), 0.0);
        assert_eq!(overlap_hours(0.0, 4.5, 10.0).unwrap(), 5.5);
        assert_eq!(overlap_hours(-11.0, 13.0, 10.0).unwrap(), 10.0);
        assert_eq!(overlap_hours(-10.0, 14.0, 10.0).unwrap(), 10.0);
        assert_eq!(overlap_hours(0.0, 6.0, 20.0).unwrap(), 16.0);
        assert_eq!(overlap_hours(0.0, 12.0, 24.0).unwrap(), 24.0);
    }

    #[test]
    fn overlap_rejects_bad_input() {
        assert!(overlap_hours(-12.5, 0.0, 10.0).is_err());
        assert!(overlap_hours(0.0, 14.5, 10.0).is_err());
        assert!(overlap_hours(0.0, f64::NAN, 10.0).is_err());
        assert!(overlap_hours(0.0, 0.0, 0.0).is_err());
        assert!(overlap_hours(0.0, 0.0, 25.0).is_err());
    }

    fn country(c: &str, off: f64, ct: Option<f64>) -> CountryRecord {
        CountryRecord {
            iso2: iso(c),
            utc_offset: off,
            profit_tax: ct,
            labour_cost: None,
        }
    }

    fn dyad(o: &str, d: &str, km: f64) -> DyadRecord {
        DyadRecord {
            iso_o: iso(o),
            iso_d: iso(d),
            dist_km: km,
            contig: Some(0.0),
            comlang: None,
            colony: Some(0.0),
            legal: Some(1.0),
            rta: None,
            cli_index: None,
        }
    }

    #[test]
    fn table_is_symmetric_in_wh_and_directional_in_ratios() {
        let t = build_dyad_table(
            &[country("US", -5.0, Some(20.0)), country("DE", 1.0, Some(30.0))],
            &[dyad("US", "DE", 6000.0)],
            DEFAULT_WORKDAY,
        )
        .unwrap();
        let ab = t.get(iso("US"), iso("DE")).unwrap();
        let ba = t.get(iso("DE"), iso("US")).unwrap();
        assert_eq!(ab.wh, 4.0);
        assert_eq!(ab.wh, ba.wh);
        assert_eq!(ab.ct_ratio, Some(1.5));
        assert!((ab.ct_ratio.unwrap() * ba.ct_ratio.unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(ab.rta, None);
        assert_eq!(ab.home, 0.0);
        assert!(t.get(iso("US"), iso("US")).is_none());
    }

    #[test]
    fn unknown_country_and_bad_distance() {
        let cs = [country("US", -5.0, None)];
        assert!(matches!(
            build_dyad_table(&cs, &[dyad("US", "DE", 1.0)], 10.0),
            Err(Error::Coverage(_))
        ));
        assert!(matches!(
            build_dyad_table(&cs, &[dyad("US", "US", 0.0)], 10.0),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn control_names_round_trip() {
        for c in Control::ALL {
            assert_eq!(c.name().parse::<Control>().unwrap(), c);
        }
        assert_eq!(Control::parse_list("gravity,home").unwrap().len(), 7);
        assert!(Control::parse_list("gdp").is_err());
    }
}
