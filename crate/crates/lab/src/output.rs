//! Report files: JSON per scenario, CSV verdict tables and gnuplot scripts.

use std::fs;
use std::io::Write;
use std::path::Path;

use harnack_core::harnack::HarnackReport;

use crate::error::LabError;

pub const CSV_COLUMNS: [&str; 14] =
    ["statement", "x", "y", "s", "t", "f", "p", "lhs_mean", "lhs_lo", "lhs_hi", "rhs_mean", "rhs_lo", "rhs_hi", "verdict"];

/// Writes to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), LabError> {
    let io = |e: std::io::Error| LabError::Io(format!("{}: {e}", path.display()));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(bytes).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(io)
}

fn point(v: &[f64]) -> String {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
}

pub fn csv_table(rows: &[HarnackReport]) -> Result<String, LabError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| LabError::Io(format!("csv: {e}"));
    w.write_record(CSV_COLUMNS).map_err(err)?;
    for r in rows {
        w.write_record([
            r.statement.as_str().to_string(),
            point(&r.x),
            point(&r.y),
            r.s.to_string(),
            r.t.to_string(),
            r.f.clone(),
            r.p.map(|p| p.to_string()).unwrap_or_default(),
            r.lhs.mean.to_string(),
            r.lhs.lo.to_string(),
            r.lhs.hi.to_string(),
            r.rhs.mean.to_string(),
            r.rhs.lo.to_string(),
            r.rhs.hi.to_string(),
            r.verdict.as_str().to_string(),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::Io(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| LabError::Io(format!("csv: {e}")))
}

/// Both sides with their intervals against the row index.
pub fn gnuplot_script(name: &str, csv_file: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set title '{name}'\n\
         set xlabel 'instance'\n\
         set ylabel 'value'\n\
         set terminal pngcairo size 900,600\n\
         set output '{name}.png'\n\
         plot '{csv_file}' using 0:8:9:10 with yerrorbars title 'lhs', \\\n\
         \x20    '' using 0:11:12:13 with yerrorbars title 'rhs'\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use harnack_core::harnack::{Side, StatementConstants, StatementId, Verdict};

    #[test]
    fn csv_has_documented_header_and_quotes_names() {
        let r = HarnackReport {
            statement: StatementId::LogFitted,
            x: vec![0.0, 1.0],
            y: vec![1.0, 1.0],
            s: 0.0,
            t: 1.0,
            f: "bump([0.0, 1.0])".into(),
            p: None,
            lhs: Side::exact(0.5),
            rhs: Side::exact(1.0),
            term: 0.5,
            constants: StatementConstants::default(),
            verdict: Verdict::Holds,
            n_paths: 1,
            seed: 1,
        };
        let text = csv_table(&[r]).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(lines.next().unwrap(), "log-harnack-fitted,0;1,1;1,0,1,\"bump([0.0, 1.0])\",,0.5,0.5,0.5,1,1,1,HOLDS");
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir().join(format!("harnack-lab-out-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("a.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(&dir).unwrap().count(), 1);
        fs::remove_dir_all(&dir).unwrap();
    }
}
