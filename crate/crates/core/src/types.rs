use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Contiguous range of age classes tracked by a stock.
///
/// When `plus_group` is set the oldest class accumulates all survivors at or
/// above `max_age`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgeRange {
    min_age: u32,
    max_age: u32,
    plus_group: bool,
}

impl AgeRange {
    pub fn new(min_age: u32, max_age: u32, plus_group: bool) -> Result<Self, CoreError> {
        if max_age <= min_age {
            return Err(CoreError::InvalidAgeRange(format!(
                "max_age {max_age} must exceed min_age {min_age}"
            )));
        }
        Ok(Self {
            min_age,
            max_age,
            plus_group,
        })
    }

    pub fn min_age(&self) -> u32 {
        self.min_age
    }

    pub fn max_age(&self) -> u32 {
        self.max_age
    }

    pub fn plus_group(&self) -> bool {
        self.plus_group
    }

    /// Number of age classes.
    pub fn len(&self) -> usize {
        (self.max_age - self.min_age + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn ages(&self) -> impl Iterator<Item = u32> + '_ {
        self.min_age..=self.max_age
    }

    /// Index of `age` within per-age vectors, if in range.
    pub fn index_of(&self, age: u32) -> Option<usize> {
        if age < self.min_age || age > self.max_age {
            None
        } else {
            Some((age - self.min_age) as usize)
        }
    }

    pub fn require_index(&self, age: u32) -> Result<usize, CoreError> {
        self.index_of(age).ok_or(CoreError::AgeOutOfRange {
            age,
            min: self.min_age,
            max: self.max_age,
        })
    }
}

/// Numbers-at-age for one year, in thousands of individuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbundanceVector {
    year: i32,
    ages: AgeRange,
    values: Vec<f64>,
}

impl AbundanceVector {
    pub fn new(year: i32, ages: AgeRange, values: Vec<f64>) -> Result<Self, CoreError> {
        if values.len() != ages.len() {
            return Err(CoreError::InvalidValue(format!(
                "abundance vector for year {year} has {} values, expected {}",
                values.len(),
                ages.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(CoreError::InvalidValue(format!(
                "abundance must be finite and non-negative, got {v} in year {year}"
            )));
        }
        Ok(Self { year, ages, values })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn ages(&self) -> AgeRange {
        self.ages
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, age: u32) -> Result<f64, CoreError> {
        Ok(self.values[self.ages.require_index(age)?])
    }

    /// Scale every age class by `factor` (e.g. unit conversions).
    pub fn scaled(&self, factor: f64) -> Result<Self, CoreError> {
        Self::new(
            self.year,
            self.ages,
            self.values.iter().map(|v| v * factor).collect(),
        )
    }
}

/// Numbers-at-age over a contiguous range of years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbundanceMatrix {
    ages: AgeRange,
    rows: Vec<AbundanceVector>,
}

impl AbundanceMatrix {
    pub fn new(rows: Vec<AbundanceVector>) -> Result<Self, CoreError> {
        let first = rows.first().ok_or_else(|| {
            CoreError::InvalidValue("abundance matrix needs at least one row".into())
        })?;
        let ages = first.ages();
        for (i, row) in rows.iter().enumerate() {
            if row.ages() != ages {
                return Err(CoreError::InvalidValue(
                    "all abundance rows must share one age range".into(),
                ));
            }
            if row.year() != first.year() + i as i32 {
                return Err(CoreError::InvalidValue(
                    "abundance years must increase strictly by 1".into(),
                ));
            }
        }
        Ok(Self { ages, rows })
    }

    pub fn ages(&self) -> AgeRange {
        self.ages
    }

    pub fn first_year(&self) -> i32 {
        self.rows[0].year()
    }

    pub fn last_year(&self) -> i32 {
        self.rows[self.rows.len() - 1].year()
    }

    pub fn rows(&self) -> &[AbundanceVector] {
        &self.rows
    }

    pub fn row(&self, year: i32) -> Option<&AbundanceVector> {
        let offset = year.checked_sub(self.first_year())?;
        if offset < 0 {
            return None;
        }
        self.rows.get(offset as usize)
    }
}

/// Per-year, per-age biology inputs: weight (kg), maturity (fraction) and
/// natural mortality (per-year instantaneous rate).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiologySeries {
    ages: AgeRange,
    first_year: i32,
    weight: Vec<Vec<f64>>,
    maturity: Vec<Vec<f64>>,
    natural_mortality: Vec<Vec<f64>>,
}

impl BiologySeries {
    pub fn new(
        ages: AgeRange,
        first_year: i32,
        weight: Vec<Vec<f64>>,
        maturity: Vec<Vec<f64>>,
        natural_mortality: Vec<Vec<f64>>,
    ) -> Result<Self, CoreError> {
        let years = weight.len();
        if years == 0 {
            return Err(CoreError::InvalidValue(
                "biology series needs at least one year".into(),
            ));
        }
        if maturity.len() != years || natural_mortality.len() != years {
            return Err(CoreError::InvalidValue(
                "weight, maturity and natural mortality must cover the same years".into(),
            ));
        }
        for row in weight.iter().chain(&maturity).chain(&natural_mortality) {
            if row.len() != ages.len() {
                return Err(CoreError::InvalidValue(
                    "biology rows must cover every age class".into(),
                ));
            }
        }
        for row in &weight {
            if row.iter().any(|w| !w.is_finite() || *w <= 0.0) {
                return Err(CoreError::InvalidValue("weights must be positive".into()));
            }
        }
        for row in &maturity {
            if row.iter().any(|m| !m.is_finite() || *m < 0.0 || *m > 1.0) {
                return Err(CoreError::InvalidValue(
                    "maturity must lie in [0, 1]".into(),
                ));
            }
        }
        for row in &natural_mortality {
            if row.iter().any(|m| !m.is_finite() || *m < 0.0) {
                return Err(CoreError::InvalidValue(
                    "natural mortality must be non-negative".into(),
                ));
            }
        }
        Ok(Self {
            ages,
            first_year,
            weight,
            maturity,
            natural_mortality,
        })
    }

    /// Biology that repeats the same per-age rows for `years` years.
    pub fn constant(
        ages: AgeRange,
        first_year: i32,
        years: usize,
        weight: Vec<f64>,
        maturity: Vec<f64>,
        natural_mortality: Vec<f64>,
    ) -> Result<Self, CoreError> {
        Self::new(
            ages,
            first_year,
            vec![weight; years],
            vec![maturity; years],
            vec![natural_mortality; years],
        )
    }

    pub fn ages(&self) -> AgeRange {
        self.ages
    }

    pub fn first_year(&self) -> i32 {
        self.first_year
    }

    pub fn last_year(&self) -> i32 {
        self.first_year + self.weight.len() as i32 - 1
    }

    fn year_index(&self, year: i32) -> Result<usize, CoreError> {
        let offset = year - self.first_year;
        if offset < 0 || offset as usize >= self.weight.len() {
            return Err(CoreError::MissingYear {
                year,
                source_name: "biology".into(),
            });
        }
        Ok(offset as usize)
    }

    /// Row accessor clamped to the covered range; used for short projections
    /// beyond the terminal data year where biology is held at its last value.
    pub fn weight_row_clamped(&self, year: i32) -> &[f64] {
        let idx = (year - self.first_year).clamp(0, self.weight.len() as i32 - 1) as usize;
        &self.weight[idx]
    }

    pub fn maturity_row_clamped(&self, year: i32) -> &[f64] {
        let idx = (year - self.first_year).clamp(0, self.maturity.len() as i32 - 1) as usize;
        &self.maturity[idx]
    }

    pub fn natural_mortality_row_clamped(&self, year: i32) -> &[f64] {
        let idx =
            (year - self.first_year).clamp(0, self.natural_mortality.len() as i32 - 1) as usize;
        &self.natural_mortality[idx]
    }

    pub fn weight_row(&self, year: i32) -> Result<&[f64], CoreError> {
        Ok(&self.weight[self.year_index(year)?])
    }

    pub fn maturity_row(&self, year: i32) -> Result<&[f64], CoreError> {
        Ok(&self.maturity[self.year_index(year)?])
    }

    pub fn natural_mortality_row(&self, year: i32) -> Result<&[f64], CoreError> {
        Ok(&self.natural_mortality[self.year_index(year)?])
    }
}

/// What a fleet measures and when.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FleetKind {
    CommercialCatch,
    /// Scientific survey running at `timing`, a fraction of the year in [0, 1].
    Survey {
        timing: f64,
    },
}

impl FleetKind {
    pub fn is_survey(&self) -> bool {
        matches!(self, FleetKind::Survey { .. })
    }
}

/// Per-year, per-age observations from one data source. Cells are `None`
/// where the fleet did not observe that age/year; present values must be
/// strictly positive because the observation model works on logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetObservation {
    name: String,
    kind: FleetKind,
    ages: AgeRange,
    first_year: i32,
    values: Vec<Vec<Option<f64>>>,
}

impl FleetObservation {
    pub fn new(
        name: impl Into<String>,
        kind: FleetKind,
        ages: AgeRange,
        first_year: i32,
        values: Vec<Vec<Option<f64>>>,
    ) -> Result<Self, CoreError> {
        let name = name.into();
        if let FleetKind::Survey { timing } = kind {
            if !(0.0..=1.0).contains(&timing) {
                return Err(CoreError::InvalidValue(format!(
                    "survey timing must lie in [0, 1], got {timing}"
                )));
            }
        }
        if values.is_empty() {
            return Err(CoreError::InvalidValue(format!(
                "fleet {name} has no years"
            )));
        }
        for row in &values {
            if row.len() != ages.len() {
                return Err(CoreError::InvalidValue(format!(
                    "fleet {name} rows must cover every age class"
                )));
            }
            for v in row.iter().flatten() {
                if !v.is_finite() || *v <= 0.0 {
                    return Err(CoreError::InvalidValue(format!(
                        "fleet {name} observations must be positive, got {v}"
                    )));
                }
            }
        }
        Ok(Self {
            name,
            kind,
            ages,
            first_year,
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> FleetKind {
        self.kind
    }

    pub fn ages(&self) -> AgeRange {
        self.ages
    }

    pub fn first_year(&self) -> i32 {
        self.first_year
    }

    pub fn last_year(&self) -> i32 {
        self.first_year + self.values.len() as i32 - 1
    }

    pub fn row(&self, year: i32) -> Option<&[Option<f64>]> {
        let offset = year.checked_sub(self.first_year)?;
        if offset < 0 {
            return None;
        }
        self.values.get(offset as usize).map(|r| r.as_slice())
    }

    pub fn value(&self, year: i32, age: u32) -> Option<f64> {
        let idx = self.ages.index_of(age)?;
        self.row(year)?.get(idx).copied().flatten()
    }

    /// Ages observed at least once over the fleet's lifetime.
    pub fn coverage(&self) -> Vec<u32> {
        self.ages
            .ages()
            .filter(|age| {
                let idx = self.ages.index_of(*age).unwrap();
                self.values.iter().any(|row| row[idx].is_some())
            })
            .collect()
    }

    /// Restrict the fleet to years `<= last_year`; `None` if nothing remains.
    pub fn truncated(&self, last_year: i32) -> Option<Self> {
        let keep = (last_year - self.first_year + 1).max(0) as usize;
        if keep == 0 {
            return None;
        }
        let keep = keep.min(self.values.len());
        Some(Self {
            name: self.name.clone(),
            kind: self.kind,
            ages: self.ages,
            first_year: self.first_year,
            values: self.values[..keep].to_vec(),
        })
    }
}

/// All observation fleets for one stock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSeries {
    fleets: Vec<FleetObservation>,
    first_year: i32,
    last_year: i32,
}

impl ObservationSeries {
    pub fn new(fleets: Vec<FleetObservation>) -> Result<Self, CoreError> {
        if !fleets
            .iter()
            .any(|f| f.kind() == FleetKind::CommercialCatch)
        {
            return Err(CoreError::InvalidValue(
                "observation series needs at least one commercial catch fleet".into(),
            ));
        }
        if !fleets.iter().any(|f| f.kind().is_survey()) {
            return Err(CoreError::InvalidValue(
                "observation series needs at least one survey fleet".into(),
            ));
        }
        let first_year = fleets.iter().map(|f| f.first_year()).min().unwrap();
        let last_year = fleets.iter().map(|f| f.last_year()).max().unwrap();
        Ok(Self {
            fleets,
            first_year,
            last_year,
        })
    }

    pub fn fleets(&self) -> &[FleetObservation] {
        &self.fleets
    }

    pub fn fleet(&self, name: &str) -> Option<&FleetObservation> {
        self.fleets.iter().find(|f| f.name() == name)
    }

    pub fn first_year(&self) -> i32 {
        self.first_year
    }

    pub fn last_year(&self) -> i32 {
        self.last_year
    }

    pub fn n_years(&self) -> usize {
        (self.last_year - self.first_year + 1) as usize
    }

    /// Observations restricted to years `<= last_year`, for retrospective and
    /// expanding-window fits.
    pub fn truncated(&self, last_year: i32) -> Result<Self, CoreError> {
        let fleets: Vec<_> = self
            .fleets
            .iter()
            .filter_map(|f| f.truncated(last_year))
            .collect();
        Self::new(fleets)
    }
}

/// Which derived stock parameter a series carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterKind {
    /// Number of young fish entering the population (thousands); by
    /// convention the abundance at the minimum age.
    Recruitment,
    /// Spawning stock biomass in tonnes.
    Ssb,
}

impl ParameterKind {
    /// Feature-schema name for an estimate of this parameter.
    pub fn feature_name(&self) -> &'static str {
        match self {
            ParameterKind::Recruitment => "REC_hat",
            ParameterKind::Ssb => "SSB_hat",
        }
    }
}

impl std::fmt::Display for ParameterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParameterKind::Recruitment => write!(f, "recruitment"),
            ParameterKind::Ssb => write!(f, "ssb"),
        }
    }
}

/// Per-year scalar series of one derived stock parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockParameterSeries {
    kind: ParameterKind,
    first_year: i32,
    values: Vec<f64>,
}

impl StockParameterSeries {
    pub fn new(kind: ParameterKind, first_year: i32, values: Vec<f64>) -> Result<Self, CoreError> {
        if values.is_empty() {
            return Err(CoreError::InvalidValue(
                "parameter series needs at least one year".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(CoreError::InvalidValue(format!(
                "stock parameters must be finite and non-negative, got {v}"
            )));
        }
        Ok(Self {
            kind,
            first_year,
            values,
        })
    }

    pub fn kind(&self) -> ParameterKind {
        self.kind
    }

    pub fn first_year(&self) -> i32 {
        self.first_year
    }

    pub fn last_year(&self) -> i32 {
        self.first_year + self.values.len() as i32 - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, year: i32) -> Option<f64> {
        let offset = year.checked_sub(self.first_year)?;
        if offset < 0 {
            return None;
        }
        self.values.get(offset as usize).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (self.first_year + i as i32, *v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn age_range_rejects_inverted_bounds() {
        assert!(AgeRange::new(3, 3, false).is_err());
        assert!(AgeRange::new(4, 2, false).is_err());
        let r = AgeRange::new(1, 6, true).unwrap();
        assert_eq!(r.len(), 6);
        assert_eq!(r.index_of(1), Some(0));
        assert_eq!(r.index_of(6), Some(5));
        assert_eq!(r.index_of(7), None);
    }

    #[test]
    fn abundance_matrix_requires_contiguous_years() {
        let ages = AgeRange::new(1, 3, false).unwrap();
        let r1 = AbundanceVector::new(2000, ages, vec![1.0, 2.0, 3.0]).unwrap();
        let r2 = AbundanceVector::new(2002, ages, vec![1.0, 2.0, 3.0]).unwrap();
        assert!(AbundanceMatrix::new(vec![r1, r2]).is_err());
    }

    #[test]
    fn fleet_truncation_drops_later_years() {
        let ages = AgeRange::new(1, 2, false).unwrap();
        let fleet = FleetObservation::new(
            "survey",
            FleetKind::Survey { timing: 0.5 },
            ages,
            2000,
            vec![
                vec![Some(1.0), None],
                vec![Some(2.0), Some(3.0)],
                vec![None, Some(4.0)],
            ],
        )
        .unwrap();
        let cut = fleet.truncated(2001).unwrap();
        assert_eq!(cut.last_year(), 2001);
        assert_eq!(cut.value(2001, 2), Some(3.0));
        assert_eq!(cut.value(2002, 2), None);
        assert!(fleet.truncated(1999).is_none());
    }

    #[test]
    fn observation_series_requires_both_fleet_kinds() {
        let ages = AgeRange::new(1, 2, false).unwrap();
        let survey = FleetObservation::new(
            "survey",
            FleetKind::Survey { timing: 0.0 },
            ages,
            2000,
            vec![vec![Some(1.0), Some(1.0)]],
        )
        .unwrap();
        assert!(ObservationSeries::new(vec![survey.clone()]).is_err());
        let catch = FleetObservation::new(
            "catch",
            FleetKind::CommercialCatch,
            ages,
            2000,
            vec![vec![Some(1.0), Some(1.0)]],
        )
        .unwrap();
        assert!(ObservationSeries::new(vec![catch, survey]).is_ok());
    }

    #[test]
    fn observations_must_be_positive() {
        let ages = AgeRange::new(1, 2, false).unwrap();
        let bad = FleetObservation::new(
            "catch",
            FleetKind::CommercialCatch,
            ages,
            2000,
            vec![vec![Some(0.0), Some(1.0)]],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn coverage_reports_observed_ages() {
        let ages = AgeRange::new(1, 3, false).unwrap();
        let fleet = FleetObservation::new(
            "survey",
            FleetKind::Survey { timing: 0.1 },
            ages,
            2000,
            vec![
                vec![Some(1.0), None, None],
                vec![Some(2.0), Some(1.0), None],
            ],
        )
        .unwrap();
        assert_eq!(fleet.coverage(), vec![1, 2]);
    }
}
