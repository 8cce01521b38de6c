use std::path::Path;

use ionlink::io::{write_atomic, RunManifest};
use ionlink::units::SECONDS_PER_YEAR;

use crate::commands::{json, Artifacts};

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.rows.push(cells.to_vec());
    }

    pub fn render(&self) -> String {
        let cols = self.header.len();
        let mut w = vec![0; cols];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (i, c) in r.iter().enumerate().take(cols) {
                w[i] = w[i].max(c.chars().count());
            }
        }
        let line = |r: &[String]| {
            let cells: Vec<String> = (0..cols)
                .map(|i| {
                    let c = r.get(i).map(String::as_str).unwrap_or("");
                    format!("{c:<width$}", width = w[i])
                })
                .collect();
            cells.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(&self.header);
        out += &(w.iter().map(|&n| "-".repeat(n)).collect::<Vec<_>>().join("  ") + "\n");
        for r in &self.rows {
            out += &line(r);
        }
        out
    }
}

fn sig3(x: f64) -> String {
    if x >= 100.0 {
        format!("{x:.0}")
    } else if x >= 10.0 {
        format!("{x:.1}")
    } else {
        format!("{x:.2}")
    }
}

pub fn format_duration(s: f64) -> String {
    if !s.is_finite() {
        return format!("{s} s");
    }
    if s == 0.0 {
        return "0 s".into();
    }
    const UNITS: [(f64, &str); 4] = [(1e-9, "ns"), (1e-6, "µs"), (1e-3, "ms"), (1.0, "s")];
    if s < 60.0 {
        let (scale, unit) = UNITS.iter().rev().find(|(f, _)| s >= *f).copied().unwrap_or(UNITS[0]);
        return format!("{} {unit}", sig3(s / scale));
    }
    if s < 3600.0 {
        return format!("{} min", sig3(s / 60.0));
    }
    if s < 86_400.0 {
        return format!("{} h", sig3(s / 3600.0));
    }
    if s < SECONDS_PER_YEAR {
        return format!("{} days", sig3(s / 86_400.0));
    }
    let y = s / SECONDS_PER_YEAR;
    if y < 1e6 {
        format!("{} years", sig3(y))
    } else {
        format!("{y:.2e} years")
    }
}

/// Like [`format_duration`] for a time given as log10(seconds).
pub fn format_log_duration(log10_seconds: f64) -> String {
    if log10_seconds < 300.0 {
        format_duration(10f64.powf(log10_seconds))
    } else {
        format!("10^{:.2} years", log10_seconds - SECONDS_PER_YEAR.log10())
    }
}

/// Writes the resolved config, the artifacts and the manifest into `dir`.
pub fn write_run(
    dir: &Path,
    subcommand: &str,
    config: &[u8],
    seed: u64,
    artifacts: &Artifacts,
) -> ionlink::Result<RunManifest> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = RunManifest::new(subcommand, config, seed);
    write_atomic(&dir.join("config.json"), config)?;
    manifest.artifact_paths.push("config.json".into());
    for (name, bytes) in artifacts {
        write_atomic(&dir.join(name), bytes)?;
        manifest.artifact_paths.push(name.clone());
    }
    write_atomic(&dir.join("manifest.json"), &json(&manifest))?;
    Ok(manifest)
}
