use alloc::string::String;
use alloc::vec::Vec;

/// Outcome of checking one inequality on a sample.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub id: String,
    /// Sample size, seed and ranges in free text.
    pub sample: String,
    /// Fitted or computed constants by name.
    pub constants: Vec<(String, f64)>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Relative change of the headline constant under refinement, if measured.
    pub refinement_change: Option<f64>,
    /// Whether that change is below its threshold; `None` when not measured.
    pub stable: Option<bool>,
    pub pass: bool,
    pub note: String,
}

impl BoundReport {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            sample: String::new(),
            constants: Vec::new(),
            min_ratio: f64::NAN,
            max_ratio: f64::NAN,
            refinement_change: None,
            stable: None,
            pass: false,
            note: String::new(),
        }
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|(n, _)| n == name).map(|c| c.1)
    }

    pub fn with_constant(mut self, name: impl Into<String>, value: f64) -> Self {
        self.constants.push((name.into(), value));
        self
    }

    /// Records the refinement change `|b/a - 1|` of a headline constant and
    /// folds the stability verdict into `pass`.
    pub fn with_refinement(mut self, coarse: f64, fine: f64, limit: f64) -> Self {
        let change = (fine / coarse - 1.0).abs();
        let ok = change.is_finite() && change < limit;
        self.refinement_change = Some(change);
        self.stable = Some(ok);
        self.pass &= ok;
        self
    }
}

/// Relative change `|b/a - 1|`.
pub fn relative_change(a: f64, b: f64) -> f64 {
    (b / a - 1.0).abs()
}
