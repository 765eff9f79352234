//! Named parameter storage and its text container.
//!
//! Container layout (version 1):
//!
//! ```text
//! scenefit-params 1
//! tensor <name> <rows> <cols>
//! <row-major values, whitespace separated>
//! ...
//! end
//! ```
//!
//! Values use Rust's shortest round-trip decimal form, so a save/load cycle
//! reproduces every parameter bit for bit.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::Tensor2;

pub const PARAMS_MAGIC: &str = "scenefit-params";
pub const PARAMS_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor2>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, t: Tensor2) -> ParamId {
        self.names.push(name.into());
        self.tensors.push(t);
        ParamId(self.tensors.len() - 1)
    }

    /// Glorot-uniform initialised `fan_in x fan_out` matrix.
    pub fn add_glorot(
        &mut self,
        name: impl Into<String>,
        fan_in: usize,
        fan_out: usize,
        rng: &mut impl Rng,
    ) -> ParamId {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound)).collect();
        self.add(name, Tensor2::from_parts(fan_in, fan_out, data))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor2 {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor2 {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn tensors(&self) -> &[Tensor2] {
        &self.tensors
    }

    pub(crate) fn tensors_mut(&mut self) -> &mut [Tensor2] {
        &mut self.tensors
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(Tensor2::len).sum()
    }

    /// Zero tensors shaped like every parameter.
    pub fn zeros_like(&self) -> Vec<Tensor2> {
        self.tensors.iter().map(|t| Tensor2::zeros(t.rows(), t.cols())).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{PARAMS_MAGIC} {PARAMS_VERSION}\n");
        for (name, t) in self.names.iter().zip(&self.tensors) {
            let _ = writeln!(out, "tensor {name} {} {}", t.rows(), t.cols());
            for r in 0..t.rows() {
                let line: Vec<String> = t.row(r).iter().map(|v| format!("{v:?}")).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str, source_name: &str) -> Result<Self> {
        let err = |detail: String| Error::Parse { source_name: source_name.to_string(), detail };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err("empty parameter file".into()))?;
        let mut h = header.split_whitespace();
        if h.next() != Some(PARAMS_MAGIC) {
            return Err(err(format!("bad header `{header}`")));
        }
        let version: u32 = h.next().and_then(|v| v.parse().ok()).ok_or_else(|| err("missing version".into()))?;
        if version != PARAMS_VERSION {
            return Err(err(format!("unsupported parameter container version {version}")));
        }
        let mut set = ParamSet::new();
        loop {
            let line = lines.next().ok_or_else(|| err("missing `end` marker".into()))?;
            if line.trim() == "end" {
                break;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [kw, name, rows, cols] = parts[..] else {
                return Err(err(format!("bad tensor header `{line}`")));
            };
            if kw != "tensor" {
                return Err(err(format!("bad tensor header `{line}`")));
            }
            let rows: usize = rows.parse().map_err(|_| err(format!("bad row count in `{line}`")))?;
            let cols: usize = cols.parse().map_err(|_| err(format!("bad column count in `{line}`")))?;
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let row = lines.next().ok_or_else(|| err(format!("truncated tensor `{name}`")))?;
                for tok in row.split_whitespace() {
                    data.push(tok.parse::<f64>().map_err(|_| err(format!("bad value `{tok}` in `{name}`")))?);
                }
            }
            let t = Tensor2::new(rows, cols, data).map_err(|e| err(format!("tensor `{name}`: {e}")))?;
            set.add(name, t);
        }
        Ok(set)
    }
}
