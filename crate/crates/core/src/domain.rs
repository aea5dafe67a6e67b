//! Textual domain and parameter-list specifications shared by the front ends.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh::{build_disk, build_interval, build_square, Mesh};

/// `builtin:interval:<n>`, `builtin:disk:<h>`, `builtin:square:<h>` or `file:<path>`.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Interval(usize),
    Disk(f64),
    Square(f64),
    File(PathBuf),
}

impl DomainSpec {
    pub fn build(&self) -> Result<Mesh> {
        match self {
            DomainSpec::Interval(n) => build_interval(*n),
            DomainSpec::Disk(h) => build_disk(*h),
            DomainSpec::Square(h) => build_square(*h),
            DomainSpec::File(p) => crate::io::load_mesh(p),
        }
    }
}

impl FromStr for DomainSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err(Error::invalid("empty path in domain spec"));
            }
            return Ok(DomainSpec::File(PathBuf::from(path)));
        }
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || {
            Error::invalid(format!(
                "bad domain spec `{s}` (builtin:interval:n | builtin:disk:h | builtin:square:h | file:path)"
            ))
        };
        match parts.as_slice() {
            ["builtin", "interval", n] => Ok(DomainSpec::Interval(n.parse().map_err(|_| bad())?)),
            ["builtin", "disk", h] => Ok(DomainSpec::Disk(h.parse().map_err(|_| bad())?)),
            ["builtin", "square", h] => Ok(DomainSpec::Square(h.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainSpec::Interval(n) => write!(f, "builtin:interval:{n}"),
            DomainSpec::Disk(h) => write!(f, "builtin:disk:{h}"),
            DomainSpec::Square(h) => write!(f, "builtin:square:{h}"),
            DomainSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// `log:a:b:n` (geometric, endpoints included), `lin:a:b:n`, or a comma list.
/// The result must be strictly increasing.
pub fn parse_value_list(s: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::invalid(format!("bad list `{s}`: {why}"));
    let parts: Vec<&str> = s.split(':').collect();
    let values: Vec<f64> = match parts.as_slice() {
        [kind @ ("log" | "lin"), a, b, n] => {
            let a: f64 = a.parse().map_err(|_| bad("start"))?;
            let b: f64 = b.parse().map_err(|_| bad("end"))?;
            let n: usize = n.parse().map_err(|_| bad("count"))?;
            if n == 0 {
                return Err(bad("count must be positive"));
            }
            if *kind == "log" && !(a > 0.0 && b > 0.0) {
                return Err(bad("log spacing needs positive endpoints"));
            }
            if n == 1 {
                vec![a]
            } else {
                (0..n)
                    .map(|k| {
                        let t = k as f64 / (n - 1) as f64;
                        if k == n - 1 {
                            b
                        } else if *kind == "log" {
                            a * (b / a).powf(t)
                        } else {
                            a + t * (b - a)
                        }
                    })
                    .collect()
            }
        }
        [single] => single
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad("not a number")))
            .collect::<Result<_>>()?,
        _ => return Err(bad("expected log:a:b:n, lin:a:b:n or a comma list")),
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(bad("non-finite value"));
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(bad("values must be strictly increasing"));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_specs() {
        assert_eq!(
            "builtin:interval:200".parse::<DomainSpec>().unwrap(),
            DomainSpec::Interval(200)
        );
        assert_eq!(
            "builtin:disk:0.05".parse::<DomainSpec>().unwrap(),
            DomainSpec::Disk(0.05)
        );
        assert_eq!(
            "file:a:b.mesh".parse::<DomainSpec>().unwrap(),
            DomainSpec::File("a:b.mesh".into())
        );
        assert!("builtin:torus:1".parse::<DomainSpec>().is_err());
        assert!("builtin:interval:x".parse::<DomainSpec>().is_err());
        let s = DomainSpec::Square(0.125);
        assert_eq!(s.to_string().parse::<DomainSpec>().unwrap(), s);
    }

    #[test]
    fn value_lists() {
        let v = parse_value_list("log:0.01:100:9").unwrap();
        assert_eq!(v.len(), 9);
        assert_eq!(v[8], 100.0);
        assert!((v[4] - 1.0).abs() < 1e-12);
        assert_eq!(parse_value_list("lin:0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_value_list("1, 10,100").unwrap(), vec![1.0, 10.0, 100.0]);
        assert!(parse_value_list("2,1").is_err());
        assert!(parse_value_list("log:0:1:3").is_err());
        assert!(parse_value_list("lin:0:1:0").is_err());
    }
}
