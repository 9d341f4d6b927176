//! ODMR traces and their CSV / JSON forms.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 3] = ["frequency_mhz", "signal", "sigma"];
pub const SCHEMA_VERSION: u32 = 1;

/// Normalized photoluminescence over an ascending MW grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub signal: Vec<f64>,
    /// Per-point noise standard deviation; zero for noiseless spectra.
    pub sigma: Vec<f64>,
    #[serde(default)]
    pub metadata: Map<String, Value>,
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param("grid", "must not be empty"));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("grid", "must be finite"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("grid", "must be strictly ascending"));
    }
    Ok(())
}

/// `points` evenly spaced frequencies from `start` to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        n => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { stop } else { start + step * i as f64 })
                .collect()
        }
    }
}

impl Spectrum {
    pub fn new(frequencies: Vec<f64>, signal: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        let s = Self {
            frequencies,
            signal,
            sigma,
            metadata: Map::new(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_metadata(mut self, key: &str, value: impl Serialize) -> Self {
        let value = serde_json::to_value(value).unwrap_or(Value::Null);
        self.metadata.insert(key.to_string(), value);
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_grid(&self.frequencies)?;
        let n = self.frequencies.len();
        if self.signal.len() != n || self.sigma.len() != n {
            return Err(Error::Format(format!(
                "array lengths differ: {} frequencies, {} signal, {} sigma",
                n,
                self.signal.len(),
                self.sigma.len()
            )));
        }
        if self.signal.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("signal must be finite".into()));
        }
        if self.sigma.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Format("sigma must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.frequencies[0], self.frequencies[self.len() - 1])
    }

    /// True when every sigma is strictly positive, i.e. usable as fit weights.
    pub fn has_weights(&self) -> bool {
        self.sigma.iter().all(|s| *s > 0.0)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for i in 0..self.len() {
            w.write_record([fmt17(self.frequencies[i]), fmt17(self.signal[i]), fmt17(self.sigma[i])])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if header != CSV_HEADER {
            return Err(Error::Format(format!(
                "expected header `{}`, found `{}`",
                CSV_HEADER.join(","),
                header.join(",")
            )));
        }
        let (mut f, mut s, mut e) = (Vec::new(), Vec::new(), Vec::new());
        for (row, record) in r.records().enumerate() {
            let record = record?;
            let parse = |col: usize| -> Result<f64> {
                record
                    .get(col)
                    .ok_or_else(|| Error::Format(format!("row {}: missing column {col}", row + 2)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|err| Error::Format(format!("row {}: {err}", row + 2)))
            };
            f.push(parse(0)?);
            s.push(parse(1)?);
            e.push(parse(2)?);
        }
        Spectrum::new(f, s, e)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = SpectrumDocument {
            schema_version: SCHEMA_VERSION,
            kind: "spectrum".into(),
            spectrum: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SpectrumDocument = serde_json::from_str(text)?;
        if doc.kind != "spectrum" {
            return Err(Error::Format(format!(
                "expected a spectrum document, got `{}`",
                doc.kind
            )));
        }
        doc.spectrum.validate()?;
        Ok(doc.spectrum)
    }
}

#[derive(Serialize, Deserialize)]
struct SpectrumDocument {
    schema_version: u32,
    kind: String,
    #[serde(flatten)]
    spectrum: Spectrum,
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}
