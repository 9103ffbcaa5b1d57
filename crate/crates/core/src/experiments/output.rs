//! CSV tables and number formatting shared by every experiment.

use std::io::Write;
use std::path::Path;

use crate::optim::IterationRecord;
use crate::Result;

/// Seventeen significant digits; infinities as `inf` / `-inf`, NaN as `nan`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// Header plus string rows, written verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write(std::fs::File::create(path)?)
    }
}

/// One row per optimizer iteration.
pub fn trace_table(trace: &[IterationRecord]) -> Table {
    let mut t = Table::new([
        "iter",
        "loss",
        "objective",
        "max_violation",
        "grad_norm",
        "rho",
        "u",
        "step",
        "power_error",
        "tangency",
    ]);
    for r in trace {
        let mut row = vec![r.iter.to_string()];
        row.extend(
            [r.loss, r.objective, r.max_violation, r.grad_norm, r.rho, r.u, r.step, r.power_error, r.tangency]
                .map(format_float),
        );
        t.push(row);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
        assert_eq!(format_float(f64::INFINITY), "inf");
        assert_eq!(format_float(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn header_comes_first() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec!["1".into(), "x".into()]);
        assert_eq!(t.to_csv_string().unwrap(), "a,b\n1,x\n");
    }
}
