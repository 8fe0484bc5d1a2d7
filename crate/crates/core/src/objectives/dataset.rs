//! Dense datasets, the sparse `label idx:val ...` text reader and a binary cache.

use std::io::{BufRead, Read, Write};

use crate::error::{AlasError, Result};

/// Dense `N × d` feature matrix (row-major) with one scalar label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
    provenance: String,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<f64>, d: usize, provenance: impl Into<String>) -> Result<Self> {
        let n = labels.len();
        if n == 0 || d == 0 {
            return Err(AlasError::invalid("dataset needs at least one row and one column"));
        }
        if features.len() != n * d {
            return Err(AlasError::DimensionMismatch {
                expected: n * d,
                got: features.len(),
            });
        }
        if features.iter().chain(&labels).any(|v| !v.is_finite()) {
            return Err(AlasError::invalid("dataset has non-finite entries"));
        }
        Ok(Self {
            n,
            d,
            features,
            labels,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// First `n` rows.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        let n = n.min(self.n);
        Self::new(
            self.features[..n * self.d].to_vec(),
            self.labels[..n].to_vec(),
            self.d,
            format!("{}[..{n}]", self.provenance),
        )
    }

    /// Writes the sparse text format, omitting zero features. Values use the
    /// shortest representation that parses back to the same `f64`.
    pub fn write_libsvm<W: Write>(&self, mut w: W) -> Result<()> {
        for i in 0..self.n {
            write!(w, "{:?}", self.labels[i])?;
            for (j, v) in self.row(i).iter().enumerate() {
                if *v != 0.0 {
                    write!(w, " {}:{:?}", j + 1, v)?;
                }
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the versioned binary cache format.
    pub fn write_cache<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&(self.d as u64).to_le_bytes())?;
        let prov = self.provenance.as_bytes();
        w.write_all(&(prov.len() as u64).to_le_bytes())?;
        w.write_all(prov)?;
        for v in self.features.iter().chain(&self.labels) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_cache<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(AlasError::invalid("not a dataset cache file"));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != CACHE_VERSION {
            return Err(AlasError::invalid(format!("unsupported dataset cache version {version}")));
        }
        let n = read_u64(&mut r)? as usize;
        let d = read_u64(&mut r)? as usize;
        let plen = read_u64(&mut r)? as usize;
        if plen > 1 << 20 || n.checked_mul(d).is_none() {
            return Err(AlasError::invalid("corrupt dataset cache header"));
        }
        let mut prov = vec![0u8; plen];
        r.read_exact(&mut prov)?;
        let provenance = String::from_utf8(prov).map_err(|_| AlasError::invalid("provenance is not UTF-8"))?;
        let mut read_f64s = |count: usize| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; count * 8];
            r.read_exact(&mut buf)?;
            Ok(buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        let features = read_f64s(n * d)?;
        let labels = read_f64s(n)?;
        Self::new(features, labels, d, provenance)
    }
}

const MAGIC: &[u8; 8] = b"ALASDATA";
const CACHE_VERSION: u32 = 1;

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn parse_err(line: usize, msg: impl Into<String>) -> AlasError {
    AlasError::Parse { line, msg: msg.into() }
}

/// Reads the sparse `label idx:val idx:val ...` format with 1-based,
/// strictly increasing indices.
///
/// Text after `#` is ignored, as are blank lines. Absent features are zero.
/// `dim` fixes the feature count; when `None` the largest index seen is used.
/// If every label is 0 or 1, zeros are mapped to −1.
pub fn libsvm_parse<R: BufRead>(reader: R, dim: Option<usize>, provenance: &str) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut max_idx = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(lineno, format!("invalid label `{label_tok}`")))?;
        if !label.is_finite() {
            return Err(parse_err(lineno, "non-finite label"));
        }
        let mut row = Vec::new();
        let mut prev = 0usize;
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected idx:value, got `{tok}`")))?;
            let idx: usize = i
                .parse()
                .map_err(|_| parse_err(lineno, format!("invalid feature index `{i}`")))?;
            if idx < 1 {
                return Err(parse_err(lineno, "feature indices start at 1"));
            }
            if idx <= prev {
                return Err(parse_err(lineno, format!("feature index {idx} does not increase")));
            }
            if let Some(d) = dim {
                if idx > d {
                    return Err(parse_err(lineno, format!("feature index {idx} exceeds dimension {d}")));
                }
            }
            let val: f64 = v
                .parse()
                .map_err(|_| parse_err(lineno, format!("invalid feature value `{v}`")))?;
            if !val.is_finite() {
                return Err(parse_err(lineno, "non-finite feature value"));
            }
            prev = idx;
            row.push((idx, val));
        }
        max_idx = max_idx.max(prev);
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(AlasError::invalid("no data rows"));
    }
    let d = dim.unwrap_or(max_idx).max(1);
    let mut features = vec![0.0; rows.len() * d];
    for (r, row) in rows.iter().enumerate() {
        for &(idx, val) in row {
            features[r * d + idx - 1] = val;
        }
    }
    if labels.iter().all(|&y| y == 0.0 || y == 1.0) && labels.contains(&0.0) {
        for y in &mut labels {
            if *y == 0.0 {
                *y = -1.0;
            }
        }
    }
    Dataset::new(features, labels, d, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_examples() {
        let ds = libsvm_parse("+1 1:0.5 3:-2.0\n".as_bytes(), Some(3), "t").unwrap();
        assert_eq!(ds.label(0), 1.0);
        assert_eq!(ds.row(0), &[0.5, 0.0, -2.0]);
        let ds = libsvm_parse("-1 2:1".as_bytes(), Some(2), "t").unwrap();
        assert_eq!((ds.label(0), ds.row(0)), (-1.0, &[0.0, 1.0][..]));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = libsvm_parse("abc 1:x".as_bytes(), None, "t").unwrap_err();
        assert!(matches!(err, AlasError::Parse { line: 1, .. }));
        let err = libsvm_parse("1 1:1\n\n1 2:1 2:3".as_bytes(), None, "t").unwrap_err();
        assert!(matches!(err, AlasError::Parse { line: 3, .. }));
        let err = libsvm_parse("1 0:1".as_bytes(), None, "t").unwrap_err();
        assert!(matches!(err, AlasError::Parse { line: 1, .. }));
        let err = libsvm_parse("1 1:1 3".as_bytes(), None, "t").unwrap_err();
        assert!(matches!(err, AlasError::Parse { line: 1, .. }));
    }

    #[test]
    fn zero_one_labels_mapped() {
        let ds = libsvm_parse("0 1:1\n1 2:1 # note\n# comment only\n".as_bytes(), None, "t").unwrap();
        assert_eq!(ds.labels(), &[-1.0, 1.0]);
        assert_eq!(ds.dim(), 2);
    }

    #[test]
    fn cache_round_trip() {
        let ds = Dataset::new(vec![0.1, -2.5, 1e-300, f64::MAX], vec![0.25, -1.0], 2, "unit").unwrap();
        let mut buf = Vec::new();
        ds.write_cache(&mut buf).unwrap();
        assert_eq!(Dataset::read_cache(buf.as_slice()).unwrap(), ds);
        buf[0] = b'X';
        assert!(Dataset::read_cache(buf.as_slice()).is_err());
    }

    #[test]
    fn text_round_trip() {
        let ds = Dataset::new(vec![0.1, 0.0, 1.0 / 3.0, -2e-17], vec![0.7, -0.25], 2, "t").unwrap();
        let mut buf = Vec::new();
        ds.write_libsvm(&mut buf).unwrap();
        let back = libsvm_parse(buf.as_slice(), Some(2), "t").unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Dataset::new(vec![f64::NAN], vec![1.0], 1, "x").is_err());
        assert!(Dataset::new(vec![], vec![], 1, "x").is_err());
    }
}
