//! On-disk formats: the text graph format and the triad sidecar JSON.
//!
//! Graph files are line-oriented: an optional leading `# format_version 1`
//! comment, a header `N <n_vertices>`, one `<i> <j> <w>` line per weighted
//! edge with `i < j` in lexicographic order, and an optional `OMEGA` section
//! holding one frequency per line. Writers emit edges in lexicographic order
//! so output is byte-stable.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{NetworkSpec, TriadEmbedding};

pub const GRAPH_FORMAT_VERSION: u32 = 1;
pub const SIDECAR_FORMAT_VERSION: u32 = 1;

/// A parsed graph file: explicit edge list plus optional frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub omega: Option<Vec<f64>>,
}

impl GraphFile {
    /// Capture a network as an edge list. Zero-weight pairs are dropped; the
    /// frequency section is included only when some frequency is nonzero.
    pub fn from_network(spec: &NetworkSpec) -> Self {
        let omega = if spec.frequencies().iter().any(|&w| w != 0.0) {
            Some(spec.frequencies().to_vec())
        } else {
            None
        };
        Self {
            n: spec.n_vertices(),
            edges: spec.edges(),
            omega,
        }
    }

    /// Materialize the dense coupling matrix and frequency vector.
    pub fn to_network(&self) -> Result<NetworkSpec> {
        let mut couplings = Array2::zeros((self.n, self.n));
        for &(i, j, w) in &self.edges {
            couplings[[i, j]] = w;
            couplings[[j, i]] = w;
        }
        let omega = match &self.omega {
            Some(v) => Array1::from_vec(v.clone()),
            None => Array1::zeros(self.n),
        };
        NetworkSpec::new(couplings, omega)
    }

    /// Unordered vertex pairs with no edge line; empty means complete.
    pub fn missing_pairs(&self) -> Vec<(usize, usize)> {
        let mut present = vec![false; self.n * self.n];
        for &(i, j, _) in &self.edges {
            present[i * self.n + j] = true;
        }
        let mut missing = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if !present[i * self.n + j] {
                    missing.push((i, j));
                }
            }
        }
        missing
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# format_version {GRAPH_FORMAT_VERSION}")?;
        writeln!(w, "N {}", self.n)?;
        let mut edges = self.edges.clone();
        edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for (i, j, weight) in edges {
            writeln!(w, "{i} {j} {weight}")?;
        }
        if let Some(omega) = &self.omega {
            writeln!(w, "OMEGA")?;
            for v in omega {
                writeln!(w, "{v}")?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        let mut omega: Option<Vec<f64>> = None;
        let mut in_omega = false;

        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if n.is_none() {
                let rest = line.strip_prefix("N ").ok_or_else(|| Error::Parse {
                    line: lineno,
                    msg: format!("expected header `N <count>`, got `{line}`"),
                })?;
                let count: usize = rest.trim().parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("invalid vertex count `{rest}`"),
                })?;
                if count == 0 {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "vertex count must be positive".into(),
                    });
                }
                n = Some(count);
                continue;
            }
            if line == "OMEGA" {
                in_omega = true;
                omega = Some(Vec::new());
                continue;
            }
            if in_omega {
                let v: f64 = line.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("invalid frequency `{line}`"),
                })?;
                omega.as_mut().unwrap().push(v);
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected `<i> <j> <w>`, got `{line}`"),
                });
            }
            let nv = n.unwrap();
            let i: usize = parts[0].parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("invalid vertex index `{}`", parts[0]),
            })?;
            let j: usize = parts[1].parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("invalid vertex index `{}`", parts[1]),
            })?;
            let w: f64 = parts[2].parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("invalid weight `{}`", parts[2]),
            })?;
            if i >= j {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("edge must satisfy i < j, got {i} {j}"),
                });
            }
            if j >= nv {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("vertex index {j} out of range for {nv} vertices"),
                });
            }
            if edges.iter().any(|&(a, b, _)| a == i && b == j) {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("duplicate edge {i} {j}"),
                });
            }
            edges.push((i, j, w));
        }

        let n = n.ok_or(Error::Parse {
            line: 0,
            msg: "missing `N <count>` header".into(),
        })?;
        if let Some(freqs) = &omega {
            if freqs.len() != n {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("OMEGA section has {} entries, expected {n}", freqs.len()),
                });
            }
        }
        Ok(Self { n, edges, omega })
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

/// Serialized companion of a triad graph file: everything needed to unembed
/// phases and evaluate triad energies without re-deriving the chain map.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriadSidecar {
    pub format_version: u32,
    pub source_n: usize,
    pub j_c: f64,
    pub looped: bool,
    pub chain_of: Vec<usize>,
    pub inter_edges: Vec<InterEdgeEntry>,
}

/// One source pair and the triad vertex pair that carries its weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterEdgeEntry {
    pub source: (usize, usize),
    pub triad: (usize, usize),
}

impl TriadSidecar {
    pub fn from_embedding(emb: &TriadEmbedding) -> Self {
        Self {
            format_version: SIDECAR_FORMAT_VERSION,
            source_n: emb.source_n(),
            j_c: emb.j_c(),
            looped: emb.looped(),
            chain_of: emb.chain_of().to_vec(),
            inter_edges: emb
                .inter_edge_of()
                .iter()
                .map(|&(source, triad)| InterEdgeEntry { source, triad })
                .collect(),
        }
    }

    /// Rebuild the embedding given the triad coupling matrix read from the
    /// matching graph file.
    pub fn into_embedding(self, couplings: Array2<f64>) -> Result<TriadEmbedding> {
        TriadEmbedding::from_parts(
            self.source_n,
            self.j_c,
            self.looped,
            self.chain_of,
            couplings,
            self.inter_edges
                .into_iter()
                .map(|e| (e.source, e.triad))
                .collect(),
        )
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)
            .map_err(|e| Error::Schema(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        serde_json::from_reader(reader).map_err(|e| Error::Schema(e.to_string()))
    }
}
