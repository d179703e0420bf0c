//! Run directories: config echo, CSV tables, JSON report and gnuplot files.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::run::{RunReport, Table};

/// Creates `<out>/<kind>-<UTC timestamp>`, with a numeric suffix when the
/// name is taken.
pub fn create_run_dir(out: &Path, kind: &str) -> io::Result<PathBuf> {
    fs::create_dir_all(out)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let base = format!("{kind}-{stamp}");
    for n in 0u32.. {
        let name = if n == 0 { base.clone() } else { format!("{base}-{n}") };
        let dir = out.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e),
        }
    }
    unreachable!()
}

fn gnuplot_script(tables: &[Table]) -> String {
    let mut out = String::from("set datafile commentschars \"#\"\nset key outside\n");
    for t in tables {
        if t.rows.is_empty() || t.plot.1.is_empty() {
            continue;
        }
        let (x, ys) = &t.plot;
        out.push_str(&format!("set xlabel \"{}\"\n", t.header[*x]));
        let series: Vec<String> = ys
            .iter()
            .map(|&y| {
                format!("\"{}.dat\" using {}:{} with linespoints title \"{}\"", t.name, x + 1, y + 1, t.header[y])
            })
            .collect();
        out.push_str(&format!("plot {}\npause -1\n", series.join(", \\\n     ")));
    }
    out
}

/// Writes every output of `report` into `dir`.
pub fn write_run(report: &RunReport, dir: &Path) -> io::Result<()> {
    fs::write(dir.join("config.toml"), &report.config)?;
    for t in &report.tables {
        fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv())?;
        fs::write(dir.join(format!("{}.dat", t.name)), t.to_dat())?;
    }
    fs::write(dir.join("plot.gp"), gnuplot_script(&report.tables))?;
    let json = serde_json::to_string_pretty(report).map_err(io::Error::other)?;
    fs::write(dir.join("report.json"), json + "\n")
}
