use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// Decimal rendering with 17 significant digits, stable across runs.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "Infinity".into() } else { "-Infinity".into() }
    } else {
        format!("{x:.16e}")
    }
}

struct FixedDigits;

impl Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            w.write_all(fmt_f64(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

pub fn to_json<T: Serialize>(v: &T) -> serde_json::Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, FixedDigits);
    v.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(buf)
}

/// Collects artifacts in memory; everything is written at the end by one writer.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
    manifest: Vec<serde_json::Value>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Self {
        Artifacts { dir: dir.to_path_buf(), files: Vec::new(), manifest: Vec::new() }
    }

    pub fn json<T: Serialize>(&mut self, name: &str, v: &T) -> anyhow::Result<()> {
        self.files.push((name.into(), to_json(v)?));
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        self.files.push((name.into(), w.into_inner()?));
        Ok(())
    }

    /// Plot-manifest entry naming the axes and series of a table.
    pub fn plot(&mut self, file: &str, title: &str, x: &str, y: &str, series: &[&str]) {
        self.manifest.push(serde_json::json!({ "file": file, "title": title, "x": x, "y": y, "series": series }));
    }

    pub fn write(mut self, command: &str) -> anyhow::Result<Vec<PathBuf>> {
        let manifest = serde_json::json!({
            "schemaVersion": fracmon::config::SCHEMA_VERSION,
            "command": command,
            "plots": self.manifest,
            "files": self.files.iter().map(|f| f.0.clone()).collect::<Vec<_>>(),
        });
        self.files.push(("plot_manifest.json".into(), to_json(&manifest)?));
        std::fs::create_dir_all(&self.dir)?;
        let mut out = Vec::new();
        for (name, bytes) in &self.files {
            let p = self.dir.join(name);
            std::fs::write(&p, bytes)?;
            out.push(p);
        }
        Ok(out)
    }
}
