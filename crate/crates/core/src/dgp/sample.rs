use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed series `(y_t, x_t)`, `t = 1..T`, plus the initial value `x_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    #[serde(default)]
    pub x0: f64,
}

impl Sample {
    pub fn new(y: Vec<f64>, x: Vec<f64>, x0: f64) -> Result<Self> {
        if y.len() != x.len() {
            return Err(Error::Dimension(format!(
                "y has {} observations but x has {}",
                y.len(),
                x.len()
            )));
        }
        Ok(Self { y, x, x0 })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// `Δx_t = x_t - x_{t-1}` with `x_0` as the starting value.
    pub fn dx(&self) -> Vec<f64> {
        let mut prev = self.x0;
        self.x
            .iter()
            .map(|&v| {
                let d = v - prev;
                prev = v;
                d
            })
            .collect()
    }

    /// Writes `t,y,x` rows preceded by a `0,,x0` row carrying the initial value.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        wtr.write_record(["t", "y", "x"]).map_err(io)?;
        wtr.write_record(["0".to_string(), String::new(), fmt(self.x0)])
            .map_err(io)?;
        for (i, (y, x)) in self.y.iter().zip(&self.x).enumerate() {
            wtr.write_record([(i + 1).to_string(), fmt(*y), fmt(*x)]).map_err(io)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Parses a `t,y,x` CSV. An optional first data row with `t = 0` and an
    /// empty `y` sets `x_0`; otherwise `x_0 = 0`. Lines starting with `#` are
    /// ignored. Rows must be numbered consecutively from 1.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(r);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
            .clone();
        if headers.len() != 3 || &headers[0] != "t" || &headers[1] != "y" || &headers[2] != "x" {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `t,y,x`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let (mut y, mut x, mut x0) = (Vec::new(), Vec::new(), 0.0);
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let num = |s: &str, what: &str| -> Result<f64> {
                let v: f64 = s.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("cannot parse {what} value `{s}`"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse { line, message: format!("non-finite {what} value") });
                }
                Ok(v)
            };
            let t: usize = rec[0].parse().map_err(|_| Error::Parse {
                line,
                message: format!("cannot parse t value `{}`", &rec[0]),
            })?;
            if t == 0 {
                if !y.is_empty() || !rec[1].is_empty() {
                    return Err(Error::Parse {
                        line,
                        message: "row t = 0 must come first and leave y empty".into(),
                    });
                }
                x0 = num(&rec[2], "x")?;
                continue;
            }
            if t != y.len() + 1 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected t = {}, found {t}", y.len() + 1),
                });
            }
            y.push(num(&rec[1], "y")?);
            x.push(num(&rec[2], "x")?);
        }
        Ok(Self { y, x, x0 })
    }
}

fn fmt(v: f64) -> String {
    // Shortest representation that round-trips exactly.
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_is_exact() {
        let s = Sample::new(vec![0.1, -2.5e-8, 3.0], vec![1.0 / 3.0, 2.0, -7.25], 0.7).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = Sample::read_csv(buf.as_slice()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn csv_without_initial_row() {
        let text = "t,y,x\n1,1.5,2\n2,0.5,3\n";
        let s = Sample::read_csv(text.as_bytes()).unwrap();
        assert_eq!(s.x0, 0.0);
        assert_eq!(s.dx(), vec![2.0, 1.0]);
    }

    #[test]
    fn csv_errors_report_lines() {
        let text = "t,y,x\n1,1.5,2\n2,abc,3\n";
        match Sample::read_csv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = "a,b\n1,2\n";
        assert!(matches!(Sample::read_csv(text.as_bytes()), Err(Error::Parse { line: 1, .. })));
        let text = "t,y,x\n1,1,1\n3,1,1\n";
        assert!(matches!(Sample::read_csv(text.as_bytes()), Err(Error::Parse { line: 3, .. })));
    }
}
