//! Parsing of x specs (`7.5`, `1,2,3`, `a:b:Nlin`, `a:b:Nlog`) and y lists.

use crate::CliError;

/// A parsed x (or u) spec with the text it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct XSpec {
    pub text: String,
    pub values: Vec<f64>,
}

fn number(s: &str) -> Result<f64, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(CliError::Usage(format!("not a finite number: {s:?}")));
    }
    Ok(v)
}

impl XSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let values = parse_values(text)?;
        Ok(Self {
            text: text.to_string(),
            values,
        })
    }

    /// The integers 1..=n.
    pub fn up_to(n: u64) -> Result<Self, CliError> {
        if n == 0 {
            return Err(CliError::Usage("--x-max must be at least 1".into()));
        }
        Ok(Self {
            text: format!("1:{n}:{n}lin"),
            values: (1..=n).map(|k| k as f64).collect(),
        })
    }
}

fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => {
            let vs = single.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
            if vs.is_empty() {
                return Err(CliError::Usage("empty x list".into()));
            }
            Ok(vs)
        }
        [a, b, count] => {
            let (a, b) = (number(a)?, number(b)?);
            let (n, log) = if let Some(n) = count.strip_suffix("lin") {
                (n, false)
            } else if let Some(n) = count.strip_suffix("log") {
                (n, true)
            } else {
                return Err(CliError::Usage(format!("range count {count:?} must end in lin or log")));
            };
            let n: usize = n
                .parse()
                .map_err(|_| CliError::Usage(format!("bad point count in {count:?}")))?;
            if n == 0 {
                return Err(CliError::Usage("a range needs at least one point".into()));
            }
            if b < a {
                return Err(CliError::Usage(format!("range end {b} is below its start {a}")));
            }
            if n == 1 {
                return Ok(vec![a]);
            }
            if log && a <= 0.0 {
                return Err(CliError::Usage("a log range needs a positive start".into()));
            }
            let step = |i: usize| i as f64 / (n - 1) as f64;
            let mut vs: Vec<f64> = if log {
                let (la, lb) = (a.ln(), b.ln());
                (0..n).map(|i| (la + (lb - la) * step(i)).exp()).collect()
            } else {
                (0..n).map(|i| a + (b - a) * step(i)).collect()
            };
            // hit the endpoints exactly
            vs[0] = a;
            vs[n - 1] = b;
            Ok(vs)
        }
        _ => Err(CliError::Usage(format!("cannot parse x spec {text:?}"))),
    }
}

pub fn parse_y_list(text: &str) -> Result<Vec<u64>, CliError> {
    let ys = text
        .split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<u64>()
                .ok()
                .or_else(|| {
                    // accept 1e5 style integers
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.fract() == 0.0 && *v >= 0.0 && *v < 1.8e19)
                        .map(|v| v as u64)
                })
                .ok_or_else(|| CliError::Usage(format!("y must be a non-negative integer, got {s:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if ys.is_empty() {
        return Err(CliError::Usage("empty y list".into()));
    }
    Ok(ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs() {
        assert_eq!(XSpec::parse("7.5").unwrap().values, vec![7.5]);
        assert_eq!(XSpec::parse("1,2.5,3").unwrap().values, vec![1.0, 2.5, 3.0]);
        assert_eq!(XSpec::parse("1:100:100lin").unwrap().values.len(), 100);
        let v = XSpec::parse("10:1000:3log").unwrap().values;
        assert_eq!(v[0], 10.0);
        assert!((v[1] - 100.0).abs() < 1e-12);
        assert_eq!(v[2], 1000.0);
        assert_eq!(XSpec::parse("5:5:1lin").unwrap().values, vec![5.0]);
        for bad in ["", "a", "1:2", "1:2:3", "1:2:0lin", "2:1:3lin", "0:1:3log", "1:2:xlog", "nan"] {
            assert!(XSpec::parse(bad).is_err(), "{bad}");
        }
        assert_eq!(XSpec::up_to(3).unwrap().values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn y_lists() {
        assert_eq!(parse_y_list("2,3,5").unwrap(), vec![2, 3, 5]);
        assert_eq!(parse_y_list("1e5").unwrap(), vec![100_000]);
        assert!(parse_y_list("2.5").is_err());
        assert!(parse_y_list("-3").is_err());
        assert!(parse_y_list("").is_err());
    }
}
