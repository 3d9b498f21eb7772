//! Camera response functions: pixel level <-> normalized radiance.
//!
//! A CRF maps normalized sensor exposure in [0,1] to a level in [0,255],
//! per channel. Two kinds are supported: a parametric gamma curve and a
//! tabulated curve sampled at 256 exposure knots. Both are monotone
//! non-decreasing with pinned endpoints (0 -> 0, 1 -> 255).

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

const TABLE_LEN: usize = 256;

#[derive(Debug, Clone)]
enum CrfKind {
    /// level = 255 * e^(1/gamma)
    Gamma(f64),
    /// Per-channel table of levels sampled at e = i/255, i = 0..=255.
    /// Monotone non-decreasing; table[0] = 0, table[255] = 255.
    Table(Box<[[f64; TABLE_LEN]; 3]>),
}

/// Invertible per-channel camera response function.
#[derive(Debug, Clone)]
pub struct Crf {
    kind: CrfKind,
}

impl Crf {
    /// Parametric gamma CRF, `gamma > 0`.
    pub fn gamma(gamma: f64) -> Result<Self> {
        if gamma <= 0.0 || !gamma.is_finite() {
            return Err(Error::InvalidCrf(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self {
            kind: CrfKind::Gamma(gamma),
        })
    }

    /// Identity CRF (gamma 1): level = 255 * e.
    pub fn identity() -> Self {
        Self {
            kind: CrfKind::Gamma(1.0),
        }
    }

    /// Tabulated CRF from three 256-entry channel tables.
    ///
    /// Each table must be monotone non-decreasing within [0,255] with
    /// table[0] = 0 and table[255] = 255.
    pub fn from_tables(tables: [[f64; TABLE_LEN]; 3]) -> Result<Self> {
        for (channel, table) in tables.iter().enumerate() {
            for (row, &v) in table.iter().enumerate() {
                if !v.is_finite() || !(0.0..=255.0).contains(&v) {
                    return Err(Error::InvalidCrf(format!(
                        "channel {channel} row {row}: value {v} outside [0,255]"
                    )));
                }
                if row > 0 && v < table[row - 1] {
                    return Err(Error::NonMonotoneCrf { channel, row });
                }
            }
            if table[0] != 0.0 {
                return Err(Error::InvalidCrf(format!(
                    "channel {channel}: table[0] must be 0, got {}",
                    table[0]
                )));
            }
            if table[TABLE_LEN - 1] != 255.0 {
                return Err(Error::InvalidCrf(format!(
                    "channel {channel}: table[255] must be 255, got {}",
                    table[TABLE_LEN - 1]
                )));
            }
        }
        Ok(Self {
            kind: CrfKind::Table(Box::new(tables)),
        })
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.kind, CrfKind::Table(_))
    }

    /// Forward map: normalized radiance (clamped to [0,1]) -> real-valued
    /// level in [0,255]. Quantize separately.
    pub fn apply(&self, e: f64, channel: usize) -> f64 {
        let e = e.clamp(0.0, 1.0);
        match &self.kind {
            CrfKind::Gamma(g) => 255.0 * e.powf(1.0 / g),
            CrfKind::Table(tables) => {
                let table = &tables[channel];
                let pos = e * (TABLE_LEN - 1) as f64;
                let i = (pos.floor() as usize).min(TABLE_LEN - 2);
                let frac = pos - i as f64;
                table[i] + frac * (table[i + 1] - table[i])
            }
        }
    }

    /// Inverse map: integer level -> normalized radiance in [0,1].
    ///
    /// Tabulated curves with flat plateaus return the midpoint of the
    /// preimage interval, which keeps the inverse deterministic and
    /// symmetric.
    pub fn invert(&self, z: u8, channel: usize) -> f64 {
        match &self.kind {
            CrfKind::Gamma(g) => (z as f64 / 255.0).powf(*g),
            CrfKind::Table(tables) => {
                let table = &tables[channel];
                let z = z as f64;
                // First knot where the curve reaches z.
                let lo = {
                    let i = table
                        .iter()
                        .position(|&v| v >= z)
                        .expect("table ends at 255 >= z");
                    if i == 0 {
                        0.0
                    } else {
                        let seg = table[i] - table[i - 1];
                        ((i - 1) as f64 + (z - table[i - 1]) / seg) / (TABLE_LEN - 1) as f64
                    }
                };
                // Last knot still at or below z.
                let hi = {
                    let j = table
                        .iter()
                        .rposition(|&v| v <= z)
                        .expect("table starts at 0 <= z");
                    if j == TABLE_LEN - 1 {
                        1.0
                    } else {
                        let seg = table[j + 1] - table[j];
                        (j as f64 + (z - table[j]) / seg) / (TABLE_LEN - 1) as f64
                    }
                };
                0.5 * (lo + hi)
            }
        }
    }

    /// Read a tabulated CRF from CSV: 256 lines of `r,g,b` levels.
    pub fn from_csv_reader(reader: impl BufRead) -> Result<Self> {
        let mut tables = [[0.0f64; TABLE_LEN]; 3];
        let mut row = 0usize;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if row >= TABLE_LEN {
                return Err(Error::CrfCsvParse {
                    line: lineno + 1,
                    message: format!("expected exactly {TABLE_LEN} data rows"),
                });
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::CrfCsvParse {
                    line: lineno + 1,
                    message: format!("expected 3 comma-separated values, got {}", fields.len()),
                });
            }
            for (channel, field) in fields.iter().enumerate() {
                let v: f64 = field.parse().map_err(|e| Error::CrfCsvParse {
                    line: lineno + 1,
                    message: format!("channel {channel}: {e}"),
                })?;
                tables[channel][row] = v;
            }
            row += 1;
        }
        if row != TABLE_LEN {
            return Err(Error::CrfCsvParse {
                line: row,
                message: format!("expected {TABLE_LEN} data rows, got {row}"),
            });
        }
        Self::from_tables(tables)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    /// Write the CRF as a 256-line `r,g,b` CSV. Gamma CRFs are sampled
    /// into a table first.
    pub fn write_csv(&self, mut writer: impl Write) -> Result<()> {
        for row in 0..TABLE_LEN {
            let e = row as f64 / (TABLE_LEN - 1) as f64;
            let (r, g, b) = match &self.kind {
                CrfKind::Gamma(_) => {
                    let v = self.apply(e, 0);
                    (v, v, v)
                }
                CrfKind::Table(tables) => (tables[0][row], tables[1][row], tables[2][row]),
            };
            writeln!(writer, "{r},{g},{b}")?;
        }
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Parse a CLI-style CRF spec: `gamma:<value>` or a CSV path.
    pub fn from_spec(spec: &str) -> Result<Self> {
        if let Some(g) = spec.strip_prefix("gamma:") {
            let g: f64 = g
                .parse()
                .map_err(|e| Error::InvalidCrf(format!("bad gamma value `{g}`: {e}")))?;
            Self::gamma(g)
        } else {
            Self::from_csv_path(spec)
        }
    }
}
