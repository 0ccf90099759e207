//! Event series anchored at an event at `t = 0`, and interarrival samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing event times on `[0, window_end]` with the first event at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries", into = "RawSeries")]
pub struct EventSeries {
    id: String,
    times: Vec<f64>,
    window_end: f64,
}

#[derive(Serialize, Deserialize)]
struct RawSeries {
    id: String,
    times: Vec<f64>,
    #[serde(default)]
    window_end: Option<f64>,
}

impl TryFrom<RawSeries> for EventSeries {
    type Error = Error;

    fn try_from(raw: RawSeries) -> Result<Self> {
        EventSeries::new(raw.id, raw.times, raw.window_end)
    }
}

impl From<EventSeries> for RawSeries {
    fn from(s: EventSeries) -> Self {
        RawSeries {
            id: s.id,
            times: s.times,
            window_end: Some(s.window_end),
        }
    }
}

impl EventSeries {
    /// Validates an already-anchored series. `window_end` defaults to the last event time.
    pub fn new(id: impl Into<String>, times: Vec<f64>, window_end: Option<f64>) -> Result<Self> {
        let id = id.into();
        let Some(&last) = times.last() else {
            return Err(Error::InvalidSeries(format!("series '{id}' has no events")));
        };
        if times[0] != 0.0 {
            return Err(Error::InvalidSeries(format!(
                "series '{id}' must start with an event at t=0, found {}",
                times[0]
            )));
        }
        if let Some(i) = times.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "series '{id}' has non-finite time at index {i}"
            )));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSeries(format!(
                "series '{id}' is not strictly increasing at index {} ({} then {})",
                i + 1,
                times[i],
                times[i + 1]
            )));
        }
        let window_end = window_end.unwrap_or(last);
        if !window_end.is_finite() || window_end < last {
            return Err(Error::InvalidSeries(format!(
                "series '{id}' window end {window_end} precedes last event {last}"
            )));
        }
        Ok(Self {
            id,
            times,
            window_end,
        })
    }

    /// Shifts strictly increasing raw times so the first event sits at the origin.
    pub fn anchored(id: impl Into<String>, raw_times: &[f64]) -> Result<Self> {
        let id = id.into();
        let Some(&first) = raw_times.first() else {
            return Err(Error::InvalidSeries(format!("series '{id}' has no events")));
        };
        let times = raw_times.iter().map(|t| t - first).collect();
        Self::new(id, times, None)
    }

    pub fn with_window_end(self, window_end: f64) -> Result<Self> {
        Self::new(self.id, self.times, Some(window_end))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn window_end(&self) -> f64 {
        self.window_end
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn interarrivals(&self) -> Result<InterarrivalSample> {
        interarrivals(self)
    }
}

/// Positive gaps between consecutive events of one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterarrivalSample {
    pub deltas: Vec<f64>,
    pub source_id: String,
}

impl InterarrivalSample {
    pub fn new(deltas: Vec<f64>, source_id: impl Into<String>) -> Result<Self> {
        let source_id = source_id.into();
        if let Some(d) = deltas.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "interarrival sample '{source_id}' contains non-positive gap {d}"
            )));
        }
        Ok(Self { deltas, source_id })
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.deltas.iter().sum::<f64>() / self.deltas.len() as f64
    }
}

pub fn interarrivals(series: &EventSeries) -> Result<InterarrivalSample> {
    if series.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "series '{}' has {} event(s); interarrivals need at least 2",
            series.id(),
            series.len()
        )));
    }
    let deltas = series.times().windows(2).map(|w| w[1] - w[0]).collect();
    Ok(InterarrivalSample {
        deltas,
        source_id: series.id().to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interarrivals_by_definition() {
        let s = EventSeries::new("a", vec![0.0, 1.0, 3.0, 6.0], None).unwrap();
        assert_eq!(interarrivals(&s).unwrap().deltas, vec![1.0, 2.0, 3.0]);
        let s = EventSeries::new("b", vec![0.0, 0.5], None).unwrap();
        assert_eq!(interarrivals(&s).unwrap().deltas, vec![0.5]);
    }

    #[test]
    fn equal_spacing_gives_constant_gaps() {
        let h = 0.25;
        let times: Vec<f64> = (0..9).map(|i| i as f64 * h).collect();
        let s = EventSeries::new("c", times, None).unwrap();
        let gaps = interarrivals(&s).unwrap().deltas;
        assert_eq!(gaps.len(), 8);
        assert!(gaps.iter().all(|g| (g - h).abs() < 1e-15));
    }

    #[test]
    fn single_event_has_no_interarrivals() {
        let s = EventSeries::new("d", vec![0.0], Some(3.0)).unwrap();
        assert!(matches!(interarrivals(&s), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn rejects_bad_series() {
        assert!(EventSeries::new("x", vec![], None).is_err());
        assert!(EventSeries::new("x", vec![0.5, 1.0], None).is_err());
        assert!(EventSeries::new("x", vec![0.0, 1.0, 1.0], None).is_err());
        assert!(EventSeries::new("x", vec![0.0, 2.0, 1.0], None).is_err());
        assert!(EventSeries::new("x", vec![0.0, 2.0], Some(1.0)).is_err());
        assert!(EventSeries::new("x", vec![0.0, f64::NAN], None).is_err());
    }

    #[test]
    fn window_defaults_to_last_event() {
        let s = EventSeries::anchored("y", &[5.0, 6.0, 9.0]).unwrap();
        assert_eq!(s.times(), &[0.0, 1.0, 4.0]);
        assert_eq!(s.window_end(), 4.0);
        let s = s.with_window_end(10.0).unwrap();
        assert_eq!(s.window_end(), 10.0);
    }

    #[test]
    fn raw_conversion_validates() {
        let raw = RawSeries {
            id: "a".into(),
            times: vec![0.0, 1.0],
            window_end: None,
        };
        assert_eq!(EventSeries::try_from(raw).unwrap().window_end(), 1.0);
        let raw = RawSeries {
            id: "a".into(),
            times: vec![1.0, 2.0],
            window_end: None,
        };
        assert!(EventSeries::try_from(raw).is_err());
    }
}
