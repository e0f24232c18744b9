//! Observation series, historical anchors and the built-in reference data.

use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{TimeYears, VolumeEb};

/// One annual observation: total data produced during `year`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub year: TimeYears,
    pub volume_eb: VolumeEb,
}

/// Observations ordered by strictly increasing year, all volumes positive.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnualSeries {
    points: Vec<Observation>,
}

impl AnnualSeries {
    /// Sorts by year, then validates. Duplicate years, non-finite values and
    /// nonpositive volumes are rejected.
    pub fn new(mut points: Vec<Observation>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Validation("series is empty".into()));
        }
        for p in &points {
            if !p.year.is_finite() {
                return Err(Error::Validation(format!("year {} is not finite", p.year)));
            }
            if !p.volume_eb.is_finite() || p.volume_eb <= 0.0 {
                return Err(Error::Validation(format!(
                    "volume must be positive, got {} for year {}",
                    p.volume_eb, p.year
                )));
            }
        }
        points.sort_by(|a, b| a.year.total_cmp(&b.year));
        if let Some(w) = points.windows(2).find(|w| w[0].year == w[1].year) {
            return Err(Error::Validation(format!(
                "years must be strictly increasing; duplicate year {}",
                w[0].year
            )));
        }
        Ok(Self { points })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(year, volume_eb)| Observation { year, volume_eb })
                .collect(),
        )
    }

    pub fn points(&self) -> &[Observation] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn years(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.year)
    }

    pub fn volumes(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.volume_eb)
    }

    pub fn first_year(&self) -> TimeYears {
        self.points[0].year
    }

    /// Same years, every volume multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(
            self.points
                .iter()
                .map(|p| Observation { year: p.year, volume_eb: p.volume_eb * k })
                .collect(),
        )
    }

    /// Same volumes, every year moved by `dt`.
    pub fn shifted(&self, dt: f64) -> Result<Self> {
        Self::new(
            self.points
                .iter()
                .map(|p| Observation { year: p.year + dt, volume_eb: p.volume_eb })
                .collect(),
        )
    }
}

/// Total digital data generated per year, 2006-2012, in EB.
pub fn reference_table1() -> AnnualSeries {
    AnnualSeries::from_pairs(&[
        (2006.0, 185.62),
        (2007.0, 319.71),
        (2008.0, 486.52),
        (2009.0, 762.89),
        (2010.0, 1143.23),
        (2011.0, 1699.48),
        (2012.0, 2502.0),
    ])
    .expect("reference table is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub year: TimeYears,
    pub label: String,
    pub weight: f64,
}

/// Reference dates a backcast is scored against.
///
/// `historical` carries the raw dates behind the aggregates; it takes no
/// part in scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    anchors: Vec<Anchor>,
    historical: Vec<Anchor>,
}

impl AnchorSet {
    pub fn new(anchors: Vec<Anchor>) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::Validation("anchor set is empty".into()));
        }
        if anchors
            .iter()
            .any(|a| !a.year.is_finite() || !a.weight.is_finite() || a.weight < 0.0)
        {
            return Err(Error::Validation(
                "anchor years must be finite and weights nonnegative".into(),
            ));
        }
        if anchors.iter().all(|a| a.weight == 0.0) {
            return Err(Error::Validation("anchor weights are all zero".into()));
        }
        Ok(Self { anchors, historical: Vec::new() })
    }

    pub fn with_historical(mut self, historical: Vec<Anchor>) -> Self {
        self.historical = historical;
        self
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    pub fn historical(&self) -> &[Anchor] {
        &self.historical
    }

    pub fn total_weight(&self) -> f64 {
        self.anchors.iter().map(|a| a.weight).sum()
    }
}

/// Parses `YEAR:WEIGHT[,YEAR:WEIGHT...]`; a bare `YEAR` gets weight 1.
impl FromStr for AnchorSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let anchors = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|part| {
                let (year, weight) = match part.split_once(':') {
                    Some((y, w)) => (y.trim(), w.trim()),
                    None => (part, "1"),
                };
                let bad = |what: &str| Error::Validation(format!("bad anchor {what} in '{part}'"));
                Ok(Anchor {
                    year: year.parse().map_err(|_| bad("year"))?,
                    label: format!("user anchor {year}"),
                    weight: weight.parse().map_err(|_| bad("weight"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        AnchorSet::new(anchors)
    }
}

const HISTORICAL_DATES: [(f64, &str); 8] = [
    (1832.0, "electromagnetic telegraph"),
    (1848.0, "upgraded Morse code"),
    (1850.0, "direct-printing telegraphy"),
    (1869.0, "universal ticker machine"),
    (1870.0, "Baudot code"),
    (1920.0, "Telex network"),
    (1932.0, "ITA2 telegraphic code standard"),
    (1943.0, "COLOSSUS and MARK-1 computers"),
];

/// The two aggregate dates for the start of the digital era, equally
/// weighted, with the eight underlying historical dates as metadata.
pub fn reference_anchors() -> AnchorSet {
    AnchorSet::new(vec![
        Anchor {
            year: 1883.0,
            label: "naive average of 8 historical dates".into(),
            weight: 1.0,
        },
        Anchor { year: 1900.0, label: "empirical estimate".into(), weight: 1.0 },
    ])
    .expect("reference anchors are valid")
    .with_historical(
        HISTORICAL_DATES
            .iter()
            .map(|&(year, label)| Anchor { year, label: label.into(), weight: 0.0 })
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesFormat {
    Csv,
    Json,
}

impl FromStr for SeriesFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Validation(format!("unknown series format '{other}'"))),
        }
    }
}

/// Reads a series from CSV (header `year,volume_eb`, further columns ignored)
/// or JSON (array of `{"year": .., "volume_eb": ..}`).
pub fn load_series<R: Read>(source: R, format: SeriesFormat) -> Result<AnnualSeries> {
    let points = match format {
        SeriesFormat::Csv => read_csv(source)?,
        SeriesFormat::Json => serde_json::from_reader::<_, Vec<Observation>>(source).map_err(
            |e| Error::Parse { line: e.line() as u64, message: e.to_string() },
        )?,
    };
    AnnualSeries::new(points)
}

fn read_csv<R: Read>(source: R) -> Result<Vec<Observation>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(source);
    let csv_err = |e: csv::Error| Error::Parse {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    };
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.get(0) != Some("year") || headers.get(1) != Some("volume_eb") {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header 'year,volume_eb', got '{}'", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| -> Result<f64> {
            let raw = record.get(i).unwrap_or("");
            raw.parse().map_err(|_| Error::Parse {
                line,
                message: format!("cannot parse {name} '{raw}'"),
            })
        };
        points.push(Observation { year: field(0, "year")?, volume_eb: field(1, "volume_eb")? });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_matches_reference() {
        let s = reference_table1();
        assert_eq!(s.len(), 7);
        assert_eq!(s.points()[0], Observation { year: 2006.0, volume_eb: 185.62 });
        assert_eq!(s.points()[6], Observation { year: 2012.0, volume_eb: 2502.0 });
        assert_eq!(s.points()[4].volume_eb, "1143.23".parse::<f64>().unwrap());
    }

    #[test]
    fn anchors_and_naive_average() {
        let a = reference_anchors();
        assert_eq!(a.anchors()[0].year, 1883.0);
        assert_eq!(a.anchors()[1].year, 1900.0);
        assert_eq!(a.historical().len(), 8);
        let mean = a.historical().iter().map(|h| h.year).sum::<f64>() / 8.0;
        assert_eq!(mean.round(), 1883.0);
    }

    #[test]
    fn anchor_parsing() {
        let a: AnchorSet = "1883:1, 1900:2".parse().unwrap();
        assert_eq!(a.anchors().len(), 2);
        assert_eq!(a.total_weight(), 3.0);
        let a: AnchorSet = "1883".parse().unwrap();
        assert_eq!(a.anchors()[0].weight, 1.0);
        assert!("1883:0".parse::<AnchorSet>().is_err());
        assert!("1883:-1".parse::<AnchorSet>().is_err());
        assert!("abc:1".parse::<AnchorSet>().is_err());
        assert!("".parse::<AnchorSet>().is_err());
    }

    #[test]
    fn csv_three_points() {
        let s = load_series(
            "year,volume_eb\n2006,185.62\n2007,319.71\n2008,486.52".as_bytes(),
            SeriesFormat::Csv,
        )
        .unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.points()[2].volume_eb, 486.52);
    }

    #[test]
    fn csv_negative_volume_rejected() {
        let err = load_series("year,volume_eb\n2006,-1\n2007,2".as_bytes(), SeriesFormat::Csv)
            .unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn csv_unordered_equals_sorted() {
        let a = load_series("year,volume_eb\n2008,3\n2006,1\n2007,2".as_bytes(), SeriesFormat::Csv)
            .unwrap();
        let b = load_series("year,volume_eb\n2006,1\n2007,2\n2008,3".as_bytes(), SeriesFormat::Csv)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_duplicate_year_rejected() {
        let err = load_series("year,volume_eb\n2007,3\n2006,1\n2007,2".as_bytes(), SeriesFormat::Csv)
            .unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn csv_malformed_row_reports_line() {
        let err = load_series("year,volume_eb\n2006,1\n2007,abc\n".as_bytes(), SeriesFormat::Csv)
            .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
        let err = load_series("year,volume_eb\n2006,1\n2007\n".as_bytes(), SeriesFormat::Csv)
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn csv_wrong_header() {
        let err = load_series("t,v\n2006,1\n".as_bytes(), SeriesFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn json_series() {
        let s = load_series(
            r#"[{"year": 2007, "volume_eb": 319.71}, {"year": 2006, "volume_eb": 185.62}]"#
                .as_bytes(),
            SeriesFormat::Json,
        )
        .unwrap();
        assert_eq!(s.first_year(), 2006.0);
        let err = load_series("[{\"year\": 2006,\n \"volume\": 1}]".as_bytes(), SeriesFormat::Json)
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }
}
