//! Long-format CSV tables.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Metric names that may appear in a table.
pub const METRICS: &[&str] = &[
    "accuracy",
    "expected_steps",
    "bound_upper",
    "bound_lower_accuracy",
    "z_threshold",
    "residual_mass",
    "calibrated",
    "mean",
    "variance",
    "support_bound",
    "rho0",
    "rho0_approx",
    "truncated_mass",
    "skill_density",
    "weight_density",
    "vote_density",
    "unlabeled_fraction",
];

/// One value of one metric at one point of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRow {
    pub experiment_id: String,
    pub axis_name: String,
    pub axis_value: f64,
    pub policy: String,
    pub metric_name: String,
    pub value: f64,
    /// Zero for deterministic values.
    pub stderr: f64,
    pub seed: u64,
}

/// `%g`-style rendering with `digits` significant digits.
pub fn format_g(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

const HEADER: [&str; 8] = [
    "experiment_id",
    "axis_name",
    "axis_value",
    "policy",
    "metric_name",
    "value",
    "stderr",
    "seed",
];

pub fn write_rows<W: Write>(out: W, rows: &[OutputRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Config(format!("cannot write table: {e}"));
    w.write_record(HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.experiment_id.as_str(),
            r.axis_name.as_str(),
            &format_g(r.axis_value, 9),
            r.policy.as_str(),
            r.metric_name.as_str(),
            &format_g(r.value, 9),
            &format_g(r.stderr, 9),
            &r.seed.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Config(format!("cannot write table: {e}")))?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<OutputRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| Error::Config(e.to_string()))?.clone();
    if header.iter().ne(HEADER) {
        return Err(Error::Config(format!("unexpected header {header:?}")));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Config(format!("bad row: {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format() {
        assert_eq!(format_g(0.0, 9), "0");
        assert_eq!(format_g(1.0, 9), "1");
        assert_eq!(format_g(0.1, 9), "0.1");
        assert_eq!(format_g(1.0 / 3.0, 9), "0.333333333");
        assert_eq!(format_g(2.0 / 3.0, 9), "0.666666667");
        assert_eq!(format_g(123456789.0, 9), "123456789");
        assert_eq!(format_g(1234567890.0, 9), "1.23456789e+09");
        assert_eq!(format_g(0.0001234, 9), "0.0001234");
        assert_eq!(format_g(0.00001234, 9), "1.234e-05");
        assert_eq!(format_g(-2.5, 9), "-2.5");
        assert_eq!(format_g(9.9999999999, 9), "10");
        assert_eq!(format_g(f64::NAN, 9), "NaN");
    }

    #[test]
    fn table_round_trip() {
        let rows = vec![
            OutputRow {
                experiment_id: "a,b".into(),
                axis_name: "r_u".into(),
                axis_value: 3.0,
                policy: "active".into(),
                metric_name: "accuracy".into(),
                value: 0.912345678,
                stderr: 0.0,
                seed: 7,
            },
            OutputRow {
                experiment_id: "x".into(),
                axis_name: "r_u".into(),
                axis_value: 0.5,
                policy: "active".into(),
                metric_name: "z_threshold".into(),
                value: f64::NAN,
                stderr: 1.5e-7,
                seed: u64::MAX,
            },
        ];
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let back = read_rows(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], rows[0]);
        assert!(back[1].value.is_nan());
        assert_eq!(back[1].stderr, 1.5e-7);
        assert_eq!(back[1].seed, u64::MAX);
    }
}
