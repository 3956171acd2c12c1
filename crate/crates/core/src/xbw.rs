//! `XBW v1` integer weight files.
//!
//! ```text
//! XBW v1 <rows> <cols> <bits> <signed:0|1>
//! <cols integers>
//! ...
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mvm::{bit_slice, check_representable};
use crate::wagonn::{build_tracking_vector, row_sums_sliced, TrackingVector};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightFile {
    pub bits: u32,
    pub signed: bool,
    /// Row-major, `rows × cols`.
    pub values: Vec<Vec<i64>>,
}

impl WeightFile {
    pub fn new(values: Vec<Vec<i64>>, bits: u32, signed: bool) -> Result<Self> {
        let w = Self { bits, signed, values };
        w.validate()?;
        Ok(w)
    }

    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=32).contains(&self.bits) {
            return Err(Error::invalid("bits must lie in 1..=32"));
        }
        if self.rows() == 0 || self.cols() == 0 {
            return Err(Error::invalid("weight matrix must be non-empty"));
        }
        for row in &self.values {
            if row.len() != self.cols() {
                return Err(Error::DimensionMismatch("ragged weight matrix".into()));
            }
            for &v in row {
                check_representable(v, self.bits, self.signed)?;
            }
        }
        Ok(())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse { path: origin.to_string(), line, msg };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (hline, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 6 || fields[0] != "XBW" || fields[1] != "v1" {
            return Err(err(hline, format!("expected `XBW v1 <rows> <cols> <bits> <signed>`, got `{header}`")));
        }
        let num = |s: &str, what: &str| -> Result<usize> {
            s.parse().map_err(|_| err(hline, format!("bad {what} `{s}`")))
        };
        let rows = num(fields[2], "row count")?;
        let cols = num(fields[3], "column count")?;
        let bits = num(fields[4], "bit width")? as u32;
        let signed = match fields[5] {
            "0" => false,
            "1" => true,
            other => return Err(err(hline, format!("signed flag must be 0 or 1, got `{other}`"))),
        };
        if !(1..=32).contains(&bits) {
            return Err(err(hline, format!("bit width {bits} outside 1..=32")));
        }

        let mut values = Vec::with_capacity(rows);
        for (n, line) in lines {
            if values.len() == rows {
                return Err(err(n, format!("more than {rows} data rows")));
            }
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<i64>().map_err(|_| err(n, format!("bad integer `{t}`"))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != cols {
                return Err(err(n, format!("expected {cols} values, found {}", row.len())));
            }
            for &v in &row {
                check_representable(v, bits, signed).map_err(|e| err(n, e.to_string()))?;
            }
            values.push(row);
        }
        if values.len() != rows {
            return Err(err(text.lines().count(), format!("expected {rows} data rows, found {}", values.len())));
        }
        Self::new(values, bits, signed)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "XBW v1 {} {} {} {}\n",
            self.rows(),
            self.cols(),
            self.bits,
            u8::from(self.signed)
        );
        for row in &self.values {
            let line: Vec<String> = row.iter().map(i64::to_string).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    /// Rows reordered by ascending row-sum, counting the set bits of every
    /// bit-slice of the row.
    pub fn remapped(&self) -> Result<(Self, TrackingVector)> {
        let slices = bit_slice(&self.values, self.bits, self.signed)?;
        let tv = build_tracking_vector(&row_sums_sliced(&slices)?);
        let values = tv.permute(&self.values)?;
        Ok((Self { values, ..self.clone() }, tv))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Whitespace-separated unsigned input vector.
pub fn parse_inputs(text: &str, origin: &str, bits: u32) -> Result<Vec<i64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        for t in line.split_whitespace() {
            let v: i64 = t.parse().map_err(|_| Error::Parse {
                path: origin.to_string(),
                line: i + 1,
                msg: format!("bad integer `{t}`"),
            })?;
            check_representable(v, bits, false).map_err(|e| Error::Parse {
                path: origin.to_string(),
                line: i + 1,
                msg: e.to_string(),
            })?;
            out.push(v);
        }
    }
    Ok(out)
}
