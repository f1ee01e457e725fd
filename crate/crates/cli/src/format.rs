//! Fixed-width number formatting shared by JSON reports and CSV files.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// Seventeen significant digits in scientific notation, so that every f64
/// round-trips and identical runs give identical bytes. Negative zero prints
/// as zero.
pub fn fmt(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

/// A float serialized with [`fmt`]; non-finite values become `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(fmt(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl From<f64> for Num {
    fn from(v: f64) -> Self {
        Num(v)
    }
}

pub fn nums(v: &[f64]) -> Vec<Num> {
    v.iter().copied().map(Num).collect()
}

pub fn num_rows(rows: &[Vec<f64>]) -> Vec<Vec<Num>> {
    rows.iter().map(|r| nums(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0] {
            let s = fmt(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
    }

    #[test]
    fn negative_zero_prints_as_zero() {
        assert_eq!(fmt(-0.0), fmt(0.0));
    }

    #[test]
    fn json_numbers_are_raw_and_non_finite_is_null() {
        let v = vec![Num(0.5), Num(f64::NEG_INFINITY), Num(f64::NAN)];
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            "[5.0000000000000000e-1,null,null]"
        );
        let back: Vec<Option<f64>> = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back, vec![Some(0.5), None, None]);
    }
}
