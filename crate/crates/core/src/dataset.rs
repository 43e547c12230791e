use crate::error::{Error, Result};

/// One unit: a value that is present exactly when the unit was observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub value: Option<f64>,
    pub observed: bool,
}

impl Record {
    pub fn observed(value: f64) -> Self {
        Self { value: Some(value), observed: true }
    }

    pub fn missing() -> Self {
        Self { value: None, observed: false }
    }
}

/// A sample of `(y, r)` pairs with `y` masked where `r = 0`.
///
/// When `n_missing_known` is false the unobserved units are not represented at all (truncation),
/// so only observed records may be stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<Record>,
    n_missing_known: bool,
}

impl Dataset {
    pub fn new(records: Vec<Record>, n_missing_known: bool) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            match (r.value, r.observed) {
                (Some(v), true) if !v.is_finite() => {
                    return Err(Error::Data(format!("record {i} has non-finite value {v}")))
                }
                (Some(_), true) => {}
                (None, false) if !n_missing_known => {
                    return Err(Error::Data(format!(
                        "record {i} is unobserved but the missing count is unknown"
                    )))
                }
                (None, false) => {}
                (Some(_), false) => return Err(Error::Data(format!("record {i} is unobserved but has a value"))),
                (None, true) => return Err(Error::Data(format!("record {i} is observed but has no value"))),
            }
        }
        Ok(Self { records, n_missing_known })
    }

    /// Fully observed data from plain values.
    pub fn from_observed(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::new(values.into_iter().map(Record::observed).collect(), true)
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn n_missing_known(&self) -> bool {
        self.n_missing_known
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_observed(&self) -> usize {
        self.records.iter().filter(|r| r.observed).count()
    }

    pub fn n_missing(&self) -> usize {
        self.records.len() - self.n_observed()
    }

    pub fn observed_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().filter_map(|r| if r.observed { r.value } else { None })
    }

    /// Fills every unobserved record, in order, with the supplied values.
    pub fn completed(&self, fill: &[f64]) -> Result<Self> {
        if fill.len() != self.n_missing() {
            return Err(Error::Data(format!(
                "{} fill values for {} missing records",
                fill.len(),
                self.n_missing()
            )));
        }
        let mut it = fill.iter();
        let records = self
            .records
            .iter()
            .map(|r| if r.observed { *r } else { Record::observed(*it.next().unwrap()) })
            .collect();
        Self::new(records, true)
    }
}
