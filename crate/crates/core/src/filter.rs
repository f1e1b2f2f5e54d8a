//! The filter: a prohibited region of `(h, ℓ)` pairs.
//!
//! A pair is in the region when `h ≥ h_max`, or when some stored corner
//! `(h_j, ℓ_j)` has both `h > (1 − γ_h)h_j` and `ℓ > ℓ_j − γ_ℓ h_j`.

use std::io;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FilterError {
    #[error("h_max must be positive, got {0}")]
    InvalidHMax(f64),
    #[error("margin {name}={value} must lie in (0, 1)")]
    InvalidMargin { name: &'static str, value: f64 },
    #[error("non-finite or negative filter query ({h}, {l})")]
    InvalidPair { h: f64, l: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterEntry {
    pub h: f64,
    pub l: f64,
}

#[derive(Debug, Clone)]
pub struct Filter {
    entries: Vec<FilterEntry>,
    h_max: f64,
    gamma_h: f64,
    gamma_l: f64,
    prune: bool,
}

impl Filter {
    pub fn new(h_max: f64, gamma_h: f64, gamma_l: f64) -> Result<Self, FilterError> {
        if !(h_max > 0.0) || !h_max.is_finite() {
            return Err(FilterError::InvalidHMax(h_max));
        }
        for (name, value) in [("gamma_h", gamma_h), ("gamma_l", gamma_l)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(FilterError::InvalidMargin { name, value });
            }
        }
        Ok(Self {
            entries: Vec::new(),
            h_max,
            gamma_h,
            gamma_l,
            prune: true,
        })
    }

    /// Disable removal of redundant corners. Membership answers do not
    /// change; only the stored list grows.
    pub fn without_pruning(mut self) -> Self {
        self.prune = false;
        self
    }

    pub fn entries(&self) -> &[FilterEntry] {
        &self.entries
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn gamma_h(&self) -> f64 {
        self.gamma_h
    }

    pub fn gamma_l(&self) -> f64 {
        self.gamma_l
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Smallest stored `h`, or `h_max` when no corners are stored.
    pub fn min_h(&self) -> f64 {
        self.entries.iter().map(|e| e.h).fold(self.h_max, f64::min)
    }

    /// Sufficient-improvement margins of `(h, l)` against one corner.
    pub fn improves_on(&self, h: f64, l: f64, corner: FilterEntry) -> bool {
        h <= (1.0 - self.gamma_h) * corner.h || l <= corner.l - self.gamma_l * corner.h
    }

    pub fn in_region(&self, h: f64, l: f64) -> bool {
        h >= self.h_max || self.entries.iter().any(|&e| !self.improves_on(h, l, e))
    }

    pub fn acceptable(&self, h: f64, l: f64) -> Result<bool, FilterError> {
        if !h.is_finite() || !l.is_finite() || h < 0.0 {
            return Err(FilterError::InvalidPair { h, l });
        }
        Ok(!self.in_region(h, l))
    }

    /// Add a corner. Pairs with `h ≥ h_max` already lie in the region and
    /// are not stored. Existing corners whose region is contained in the new
    /// corner's region are dropped.
    pub fn add(&mut self, h: f64, l: f64) {
        debug_assert!(h.is_finite() && l.is_finite() && h >= 0.0);
        if h >= self.h_max {
            return;
        }
        if self.prune {
            let gl = self.gamma_l;
            self.entries
                .retain(|e| !(e.h >= h && e.l - gl * e.h >= l - gl * h));
        }
        self.entries.push(FilterEntry { h, l });
    }

    /// `h,l` rows with a header line.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["h", "l"])?;
        for e in &self.entries {
            w.write_record([format!("{:e}", e.h), format!("{:e}", e.l)])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_filter() -> Filter {
        Filter::new(10.0, 0.1, 0.1).unwrap()
    }

    #[test]
    fn initial_region_is_threshold() {
        let f = test_filter();
        assert!(f.acceptable(5.0, 1e9).unwrap());
        assert!(!f.acceptable(11.0, -1e9).unwrap());
        assert!(!f.acceptable(10.0, 0.0).unwrap());
        assert_eq!(f.min_h(), 10.0);
    }

    #[test]
    fn rejects_bad_h_max_and_queries() {
        assert_eq!(Filter::new(0.0, 0.1, 0.1).unwrap_err(), FilterError::InvalidHMax(0.0));
        assert!(Filter::new(1.0, 1.0, 0.1).is_err());
        let f = test_filter();
        assert!(f.acceptable(f64::NAN, 0.0).is_err());
        assert!(f.acceptable(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn margin_disjuncts() {
        let mut f = test_filter();
        f.add(1.0, 5.0);
        assert!(f.acceptable(0.85, 6.0).unwrap());
        assert!(f.acceptable(0.95, 4.85).unwrap());
        assert!(!f.acceptable(0.95, 4.95).unwrap());
    }

    #[test]
    fn add_to_empty() {
        let mut f = test_filter();
        f.add(1.0, 5.0);
        assert_eq!(f.len(), 1);
        assert!(f.in_region(2.0, 6.0));
    }

    #[test]
    fn dominated_corner_is_pruned() {
        let mut f = test_filter();
        f.add(1.0, 5.0);
        let before = f.clone();
        f.add(0.5, 4.0);
        assert_eq!(f.entries(), &[FilterEntry { h: 0.5, l: 4.0 }]);
        assert!(before.in_region(0.95, 4.95));
        assert!(f.in_region(0.95, 4.95));
    }

    #[test]
    fn corner_not_pruned_when_margins_disagree() {
        // (0.5, 4.99) has larger margin envelope in ℓ than (1, 5): keep both
        let mut f = test_filter();
        f.add(1.0, 5.0);
        f.add(0.5, 4.99);
        assert_eq!(f.len(), 2);
        assert!(f.in_region(0.95, 4.92));
    }

    #[test]
    fn zero_h_corner() {
        let mut f = test_filter();
        f.add(0.0, 3.0);
        assert!(f.in_region(1e-9, 3.0 + 1e-9));
        assert!(!f.in_region(1e-9, 3.0));
        assert!(!f.in_region(0.0, 100.0));
    }

    #[test]
    fn own_corner_in_region() {
        let mut f = test_filter();
        f.add(0.3, -2.0);
        assert!(f.in_region(0.3, -2.0));
    }

    #[test]
    fn pairs_beyond_h_max_not_stored() {
        let mut f = test_filter();
        f.add(10.0, 0.0);
        assert!(f.is_empty());
    }

    #[test]
    fn csv_dump() {
        let mut f = test_filter();
        f.add(1.0, 5.0);
        f.add(0.5, 7.0);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "h,l\n1e0,5e0\n5e-1,7e0\n");
    }
}
