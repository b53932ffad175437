//! Multilabel datasets and the sparse text format.
//!
//! ```text
//! #m=3 #d=4
//! #name=toy
//! # free-form provenance comment
//! 0,2 1:0.5 3:-1.0
//!  0:1.0
//! ```
//!
//! Each data line is a comma-separated list of 0-based relevant label
//! indices, then space-separated `feature:value` tokens with 0-based
//! feature indices. An empty label field (line starting with a space)
//! means no relevant labels; missing features are 0. Values are written in
//! shortest round-trip form so a read/write cycle preserves every bit.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::LabelVector;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub features: Vec<f64>,
    pub labels: LabelVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultilabelDataset {
    m: usize,
    d: usize,
    instances: Vec<Instance>,
    pub name: Option<String>,
    /// Provenance comment lines, stored without the leading `#`.
    pub comments: Vec<String>,
}

impl MultilabelDataset {
    pub fn new(m: usize, d: usize, instances: Vec<Instance>) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!("need m >= 2, got {m}")));
        }
        if d < 1 {
            return Err(Error::InvalidArgument("need d >= 1".into()));
        }
        for (k, inst) in instances.iter().enumerate() {
            if inst.features.len() != d || inst.labels.len() != m {
                return Err(Error::InvalidArgument(format!(
                    "instance {k} has {} features and {} labels, expected {d} and {m}",
                    inst.features.len(),
                    inst.labels.len()
                )));
            }
            if inst.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("features"));
            }
        }
        Ok(MultilabelDataset {
            m,
            d,
            instances,
            name: None,
            comments: Vec::new(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn with_comments(mut self, comments: Vec<String>) -> Self {
        self.comments = comments;
        self
    }

    /// Subset in the given index order.
    pub fn select(&self, indices: &[usize]) -> Self {
        MultilabelDataset {
            m: self.m,
            d: self.d,
            instances: indices.iter().map(|&k| self.instances[k].clone()).collect(),
            name: self.name.clone(),
            comments: self.comments.clone(),
        }
    }

    /// Same data with label columns reordered: new label `k` is old `perm[k]`.
    pub fn permute_labels(&self, perm: &[usize]) -> Result<Self> {
        let instances = self
            .instances
            .iter()
            .map(|inst| {
                Ok(Instance {
                    features: inst.features.clone(),
                    labels: inst.labels.permuted(perm)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = MultilabelDataset::new(self.m, self.d, instances)?;
        out.name = self.name.clone();
        out.comments = self.comments.clone();
        Ok(out)
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_header_value(token: &str, key: &str, line: usize) -> Result<Option<usize>> {
    match token.strip_prefix(key) {
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| parse_err(line, format!("bad header value `{token}`"))),
        None => Ok(None),
    }
}

/// Parse the sparse format from a string.
pub fn parse_sparse(text: &str) -> Result<MultilabelDataset> {
    let mut m: Option<usize> = None;
    let mut d: Option<usize> = None;
    let mut name = None;
    let mut comments = Vec::new();
    let mut instances = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if let Some(rest) = line.strip_prefix('#') {
            let first = line.split_whitespace().next().unwrap_or("");
            if first.starts_with("#m=") || first.starts_with("#d=") {
                for token in line.split_whitespace() {
                    if let Some(v) = parse_header_value(token, "#m=", lineno)? {
                        m = Some(v);
                    } else if let Some(v) = parse_header_value(token, "#d=", lineno)? {
                        d = Some(v);
                    } else {
                        return Err(parse_err(lineno, format!("unknown header token `{token}`")));
                    }
                }
            } else if let Some(n) = first.strip_prefix("#name=") {
                name = Some(n.to_string());
            } else {
                comments.push(rest.to_string());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (m, d) = match (m, d) {
            (Some(m), Some(d)) => (m, d),
            _ => return Err(parse_err(lineno, "data before `#m=<int> #d=<int>` header")),
        };

        let (label_field, feature_field) = line.split_once(' ').unwrap_or((line, ""));
        let mut bits = vec![0u8; m];
        if !label_field.is_empty() {
            for tok in label_field.split(',') {
                let k: usize = tok
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad label index `{tok}`")))?;
                if k >= m {
                    return Err(parse_err(lineno, format!("label index {k} >= m={m}")));
                }
                if bits[k] == 1 {
                    return Err(parse_err(lineno, format!("duplicate label {k}")));
                }
                bits[k] = 1;
            }
        }
        let mut features = vec![0.0; d];
        let mut seen = vec![false; d];
        for tok in feature_field.split(' ').filter(|t| !t.is_empty()) {
            let (fi, fv) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("bad feature token `{tok}`")))?;
            let fi: usize = fi
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad feature index `{fi}`")))?;
            if fi >= d {
                return Err(parse_err(lineno, format!("feature index {fi} >= d={d}")));
            }
            if seen[fi] {
                return Err(parse_err(lineno, format!("duplicate feature {fi}")));
            }
            let v: f64 = fv
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad feature value `{fv}`")))?;
            if !v.is_finite() {
                return Err(parse_err(lineno, format!("non-finite feature value `{fv}`")));
            }
            seen[fi] = true;
            features[fi] = v;
        }
        let labels = LabelVector::new(bits).map_err(|e| parse_err(lineno, e.to_string()))?;
        instances.push(Instance { features, labels });
    }

    let (m, d) = match (m, d) {
        (Some(m), Some(d)) => (m, d),
        _ => return Err(parse_err(0, "missing `#m=<int> #d=<int>` header")),
    };
    let mut data = MultilabelDataset::new(m, d, instances)?;
    data.name = name;
    data.comments = comments;
    Ok(data)
}

pub fn read_sparse(path: impl AsRef<Path>) -> Result<MultilabelDataset> {
    parse_sparse(&fs::read_to_string(path)?)
}

/// Render the sparse format.
pub fn format_sparse(data: &MultilabelDataset) -> String {
    let mut out = format!("#m={} #d={}\n", data.m, data.d);
    if let Some(name) = &data.name {
        out.push_str(&format!("#name={name}\n"));
    }
    for c in &data.comments {
        out.push('#');
        out.push_str(c);
        out.push('\n');
    }
    for inst in &data.instances {
        let labels: Vec<String> = (0..data.m)
            .filter(|&i| inst.labels.is_relevant(i))
            .map(|i| i.to_string())
            .collect();
        out.push_str(&labels.join(","));
        let mut any = false;
        for (k, v) in inst.features.iter().enumerate() {
            // negative zero is kept so that bit patterns survive
            if v.to_bits() != 0 {
                out.push_str(&format!(" {k}:{v:?}"));
                any = true;
            }
        }
        if !any && labels.is_empty() {
            // keep the line non-blank
            out.push_str(" 0:0.0");
        }
        out.push('\n');
    }
    out
}

pub fn write_sparse(data: &MultilabelDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(format_sparse(data).as_bytes())?;
    Ok(())
}

/// Seeded shuffle, then the first `round(fraction · n)` instances form the
/// training part.
pub fn split(
    data: &MultilabelDataset,
    fraction: f64,
    seed: u64,
) -> Result<(MultilabelDataset, MultilabelDataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split fraction {fraction} outside (0, 1)"
        )));
    }
    let n = data.len();
    let n_train = (fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InvalidArgument(format!(
            "split of {n} instances at {fraction} leaves an empty side"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, 0));
    Ok((data.select(&idx[..n_train]), data.select(&idx[n_train..])))
}
