//! CSV writers: '#'-prefixed header block (config hash, truncation levels,
//! achieved tolerances), fixed column order, 17-significant-digit floats.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cuspfield::dirichlet::FieldSample;
use cuspfield::Error;

pub struct CsvHeader {
    pub command: String,
    pub config_hash: u64,
    pub truncation: String,
    pub achieved: String,
}

impl CsvHeader {
    pub fn render(&self) -> String {
        format!(
            "# cuspfield {}\n# config-hash: {:016x}\n# truncation: {}\n# achieved: {}\n",
            self.command, self.config_hash, self.truncation, self.achieved
        )
    }
}

pub fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_field_csv(path: &Path, header: &CsvHeader, samples: &[FieldSample]) -> Result<(), Error> {
    let mut out = header.render();
    out.push_str("x1,x2,region,u,ux,uy,tail_bound\n");
    for s in samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f(s.point.x1),
            fmt_f(s.point.x2),
            s.region.code(),
            fmt_f(s.u),
            fmt_f(s.grad[0]),
            fmt_f(s.grad[1]),
            fmt_f(s.tail)
        );
    }
    fs::write(path, out).map_err(|e| Error::config(format!("cannot write {path:?}: {e}")))
}

pub fn write_rows_csv(
    path: &Path,
    header: &CsvHeader,
    columns: &str,
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<(), Error> {
    let mut out = header.render();
    out.push_str(columns);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::config(format!("cannot write {path:?}: {e}")))
}
