//! Line-oriented text format for network models.
//!
//! ```text
//! n L Q S eta
//! m_l n_l          (once per cluster)
//! member ids
//! m_l lines of n_l weights
//! ```
//!
//! Floats are written in shortest round-trip form, so reading a written model
//! gives back identical bits.

use std::fmt::Write as _;
use std::path::Path;

use noisy_recall_core::{Cluster, NetworkModel};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ModelIoError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Model(#[from] noisy_recall_core::ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn to_text(model: &NetworkModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {} {} {}", model.n(), model.l(), model.q(), model.s(), model.eta());
    for c in model.clusters() {
        let _ = writeln!(out, "{} {}", c.n_constraints(), c.n_members());
        let ids: Vec<String> = c.members().iter().map(|j| j.to_string()).collect();
        out.push_str(&ids.join(" "));
        out.push('\n');
        for i in 0..c.n_constraints() {
            let row: Vec<String> = c.row(i).iter().map(|w| w.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_fields(&mut self) -> Result<Vec<&'a str>, ModelIoError> {
        for (i, text) in self.inner.by_ref() {
            self.line = i + 1;
            if !text.trim().is_empty() {
                return Ok(text.split_whitespace().collect());
            }
        }
        Err(ModelIoError::Parse { line: self.line + 1, reason: "unexpected end of file".into() })
    }

    fn parse<T: std::str::FromStr>(&self, field: &str, what: &str) -> Result<T, ModelIoError> {
        field.parse().map_err(|_| ModelIoError::Parse { line: self.line, reason: format!("bad {what} `{field}`") })
    }

    fn expect_len(&self, fields: &[&str], len: usize, what: &str) -> Result<(), ModelIoError> {
        if fields.len() != len {
            return Err(ModelIoError::Parse {
                line: self.line,
                reason: format!("{what}: expected {len} fields, found {}", fields.len()),
            });
        }
        Ok(())
    }
}

pub fn from_text(text: &str) -> Result<NetworkModel, ModelIoError> {
    let mut lines = Lines { inner: text.lines().enumerate(), line: 0 };
    let head = lines.next_fields()?;
    lines.expect_len(&head, 5, "header")?;
    let n: usize = lines.parse(head[0], "n")?;
    let l: usize = lines.parse(head[1], "L")?;
    let q: u32 = lines.parse(head[2], "Q")?;
    let s: u32 = lines.parse(head[3], "S")?;
    let eta: f64 = lines.parse(head[4], "eta")?;
    let mut clusters = Vec::with_capacity(l);
    for index in 0..l {
        let dims = lines.next_fields()?;
        lines.expect_len(&dims, 2, "cluster size line")?;
        let m: usize = lines.parse(dims[0], "m_l")?;
        let nl: usize = lines.parse(dims[1], "n_l")?;
        let ids = lines.next_fields()?;
        lines.expect_len(&ids, nl, "member line")?;
        let members = ids.iter().map(|f| lines.parse(f, "member id")).collect::<Result<Vec<usize>, _>>()?;
        let mut weights = Vec::with_capacity(m * nl);
        for _ in 0..m {
            let row = lines.next_fields()?;
            lines.expect_len(&row, nl, "weight row")?;
            for f in row {
                weights.push(lines.parse::<f64>(f, "weight")?);
            }
        }
        clusters.push(Cluster::new(index, members, m, weights)?);
    }
    if let Ok(extra) = lines.next_fields() {
        return Err(ModelIoError::Parse { line: lines.line, reason: format!("trailing content `{}`", extra.join(" ")) });
    }
    Ok(NetworkModel::new(n, q, s, eta, clusters)?)
}

pub fn write_model(model: &NetworkModel, path: &Path) -> Result<String, ModelIoError> {
    let text = to_text(model);
    std::fs::write(path, &text)?;
    Ok(sha256_hex(text.as_bytes()))
}

pub fn read_model(path: &Path) -> Result<NetworkModel, ModelIoError> {
    from_text(&std::fs::read_to_string(path)?)
}

/// Hash of the serialized model.
pub fn model_hash(model: &NetworkModel) -> String {
    sha256_hex(to_text(model).as_bytes())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> NetworkModel {
        let c0 = Cluster::new(0, vec![0, 1, 2], 1, vec![0.5, -1.0 / 3.0, 0.1 + 0.2]).unwrap();
        let c1 = Cluster::new(1, vec![2, 3], 2, vec![1.0, -1.0, 0.75, 1e-300_f64.max(0.3)]).unwrap();
        NetworkModel::new(4, 8, 1, 0.3, vec![c0, c1]).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = toy();
        let back = from_text(&to_text(&m)).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.clusters().iter().zip(m.clusters()) {
            for (x, y) in a.weights().iter().zip(b.weights()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn header_layout() {
        let text = to_text(&toy());
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("4 2 8 1 0.3"));
        assert_eq!(lines.next(), Some("1 3"));
        assert_eq!(lines.next(), Some("0 1 2"));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let text = to_text(&toy());
        let cut = &text[..text.len() - 6];
        assert!(matches!(from_text(cut), Err(ModelIoError::Parse { .. })));
    }
}
