//! Uncertainty block structures and structured perturbations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsvError};
use crate::linalg::{kron_identity, sigma_max, CMatrix, ComplexMatrix, ZERO};

/// One block of a block-diagonal uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Block {
    /// `δ I_v`, `δ ∈ C`.
    RepeatedScalar { v: usize },
    /// An unstructured `dim × dim` complex block.
    #[serde(rename = "full")]
    FullBlock { dim: usize },
    /// `I_v ⊗ Δ1` with `Δ1 ∈ C^{m1 × n1}`; `n1` defaults to `m1`.
    #[serde(rename = "repeated_full")]
    RepeatedFullBlock {
        v: usize,
        m1: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n1: Option<usize>,
    },
}

impl Block {
    pub fn repeated_full(v: usize, m1: usize) -> Self {
        Block::RepeatedFullBlock { v, m1, n1: None }
    }

    /// Rows contributed to Δ (columns of M).
    pub fn delta_rows(&self) -> usize {
        match *self {
            Block::RepeatedScalar { v } => v,
            Block::FullBlock { dim } => dim,
            Block::RepeatedFullBlock { v, m1, .. } => v * m1,
        }
    }

    /// Columns contributed to Δ (rows of M).
    pub fn delta_cols(&self) -> usize {
        match *self {
            Block::RepeatedScalar { v } => v,
            Block::FullBlock { dim } => dim,
            Block::RepeatedFullBlock { v, m1, n1 } => v * n1.unwrap_or(m1),
        }
    }
}

/// Shape of a repeated full block `I_v ⊗ Δ1`, `Δ1 ∈ C^{m1 × n1}`.
///
/// The matching `M` is `(v·n1) × (v·m1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepeatedShape {
    pub v: usize,
    pub m1: usize,
    pub n1: usize,
}

impl RepeatedShape {
    pub fn square(v: usize, m1: usize) -> Self {
        Self { v, m1, n1: m1 }
    }

    pub fn is_square(&self) -> bool {
        self.m1 == self.n1
    }

    pub fn m_rows(&self) -> usize {
        self.v * self.n1
    }

    pub fn m_cols(&self) -> usize {
        self.v * self.m1
    }

    pub fn check(&self, m: &CMatrix) -> Result<()> {
        if self.v == 0 || self.m1 == 0 || self.n1 == 0 {
            return Err(SsvError::Structure(format!("degenerate repeated block {self:?}")));
        }
        if m.nrows() != self.m_rows() || m.ncols() != self.m_cols() {
            return Err(SsvError::Dimension(format!(
                "M is {}x{}, repeated block v={} m1={} n1={} needs {}x{}",
                m.nrows(),
                m.ncols(),
                self.v,
                self.m1,
                self.n1,
                self.m_rows(),
                self.m_cols()
            )));
        }
        Ok(())
    }
}

/// Ordered list of uncertainty blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawStructure", into = "RawStructure")]
pub struct BlockStructure {
    blocks: Vec<Block>,
}

#[derive(Serialize, Deserialize)]
struct RawStructure {
    blocks: Vec<Block>,
}

impl TryFrom<RawStructure> for BlockStructure {
    type Error = SsvError;

    fn try_from(raw: RawStructure) -> Result<Self> {
        BlockStructure::new(raw.blocks)
    }
}

impl From<BlockStructure> for RawStructure {
    fn from(s: BlockStructure) -> Self {
        RawStructure { blocks: s.blocks }
    }
}

impl BlockStructure {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(SsvError::Structure("no blocks".into()));
        }
        for b in &blocks {
            let ok = match *b {
                Block::RepeatedScalar { v } => v >= 1,
                Block::FullBlock { dim } => dim >= 1,
                Block::RepeatedFullBlock { v, m1, n1 } => v >= 1 && m1 >= 1 && n1.unwrap_or(m1) >= 1,
            };
            if !ok {
                return Err(SsvError::Structure(format!("block sizes must be >= 1: {b:?}")));
            }
        }
        let repeated = blocks
            .iter()
            .filter(|b| matches!(b, Block::RepeatedFullBlock { .. }))
            .count();
        if repeated > 0 && blocks.len() != 1 {
            return Err(SsvError::Structure(
                "a repeated full block must be the only block in the structure".into(),
            ));
        }
        Ok(Self { blocks })
    }

    pub fn single(block: Block) -> Result<Self> {
        Self::new(vec![block])
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Total rows of Δ, i.e. the number of columns of `M`.
    pub fn row_dim(&self) -> usize {
        self.blocks.iter().map(Block::delta_rows).sum()
    }

    /// Total columns of Δ, i.e. the number of rows of `M`.
    pub fn col_dim(&self) -> usize {
        self.blocks.iter().map(Block::delta_cols).sum()
    }

    pub fn repeated_shape(&self) -> Option<RepeatedShape> {
        match self.blocks.as_slice() {
            [Block::RepeatedFullBlock { v, m1, n1 }] => Some(RepeatedShape {
                v: *v,
                m1: *m1,
                n1: n1.unwrap_or(*m1),
            }),
            _ => None,
        }
    }

    /// Repeated-full shape, or the equivalent `m1 = 1` shape for a single
    /// repeated scalar block.
    pub fn as_repeated(&self) -> Option<RepeatedShape> {
        match self.blocks.as_slice() {
            [Block::RepeatedScalar { v }] => Some(RepeatedShape::square(*v, 1)),
            _ => self.repeated_shape(),
        }
    }

    pub fn is_repeated_full(&self) -> bool {
        self.repeated_shape().is_some()
    }

    /// Block sizes of the non-repeated partition (rows of M, columns of M).
    /// A repeated full block contributes `v` separate blocks.
    pub fn partition(&self) -> (Vec<usize>, Vec<usize>) {
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        for b in &self.blocks {
            match *b {
                Block::RepeatedFullBlock { v, m1, n1 } => {
                    for _ in 0..v {
                        rows.push(n1.unwrap_or(m1));
                        cols.push(m1);
                    }
                }
                other => {
                    rows.push(other.delta_cols());
                    cols.push(other.delta_rows());
                }
            }
        }
        (rows, cols)
    }

    pub fn check_matrix(&self, m: &CMatrix) -> Result<()> {
        if m.nrows() != self.col_dim() || m.ncols() != self.row_dim() {
            return Err(SsvError::Dimension(format!(
                "M is {}x{} but the structure needs {}x{}",
                m.nrows(),
                m.ncols(),
                self.col_dim(),
                self.row_dim()
            )));
        }
        Ok(())
    }
}

/// A structured Δ together with its assembled block-diagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub structure: BlockStructure,
    /// One value per block: `1×1` for repeated scalars, the block itself for
    /// full blocks, and the single `Δ1` for a repeated full block.
    pub block_values: Vec<CMatrix>,
    pub assembled: ComplexMatrix,
    /// Largest singular value of `assembled`.
    pub norm: f64,
}

impl Perturbation {
    pub fn assemble(structure: &BlockStructure, block_values: Vec<CMatrix>) -> Result<Self> {
        if block_values.len() != structure.blocks().len() {
            return Err(SsvError::Structure(format!(
                "{} block values for {} blocks",
                block_values.len(),
                structure.blocks().len()
            )));
        }
        let mut out = CMatrix::zeros(structure.row_dim(), structure.col_dim());
        let (mut r0, mut c0) = (0, 0);
        for (block, value) in structure.blocks().iter().zip(&block_values) {
            let piece = match *block {
                Block::RepeatedScalar { v } => {
                    expect_shape(value, 1, 1)?;
                    CMatrix::from_diagonal_element(v, v, value[(0, 0)])
                }
                Block::FullBlock { dim } => {
                    expect_shape(value, dim, dim)?;
                    value.clone()
                }
                Block::RepeatedFullBlock { v, m1, n1 } => {
                    let n1 = n1.unwrap_or(m1);
                    expect_shape(value, m1, n1)?;
                    kron_left_identity(v, value)
                }
            };
            out.view_mut((r0, c0), piece.shape()).copy_from(&piece);
            r0 += piece.nrows();
            c0 += piece.ncols();
        }
        let norm = sigma_max(&out);
        Ok(Self {
            structure: structure.clone(),
            block_values,
            assembled: ComplexMatrix::wrap(out),
            norm,
        })
    }

    pub fn zero(structure: &BlockStructure) -> Self {
        let values = structure
            .blocks()
            .iter()
            .map(|b| match *b {
                Block::RepeatedScalar { .. } => CMatrix::zeros(1, 1),
                Block::FullBlock { dim } => CMatrix::zeros(dim, dim),
                Block::RepeatedFullBlock { m1, n1, .. } => CMatrix::zeros(m1, n1.unwrap_or(m1)),
            })
            .collect();
        Self::assemble(structure, values).expect("zero perturbation conforms")
    }

    /// Same structure with every block multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let values = self.block_values.iter().map(|b| b * factor).collect();
        Self {
            structure: self.structure.clone(),
            block_values: values,
            assembled: ComplexMatrix::wrap(self.assembled.as_matrix() * factor),
            norm: self.norm * factor.norm(),
        }
    }
}

fn expect_shape(m: &CMatrix, r: usize, c: usize) -> Result<()> {
    if m.shape() != (r, c) {
        return Err(SsvError::Dimension(format!(
            "block value is {}x{}, expected {r}x{c}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// `I_v ⊗ block` for a possibly rectangular block.
pub fn kron_left_identity(v: usize, block: &CMatrix) -> CMatrix {
    let (r, c) = block.shape();
    let mut out = CMatrix::from_element(v * r, v * c, ZERO);
    for k in 0..v {
        out.view_mut((k * r, k * c), (r, c)).copy_from(block);
    }
    out
}

/// Checks `D·Δ = Δ·D` for a square structure.
pub fn commutes(d: &CMatrix, delta: &CMatrix) -> f64 {
    let scale = (d.norm() * delta.norm()).max(f64::MIN_POSITIVE);
    (d * delta - delta * d).norm() / scale
}

/// Convenience: `S ⊗ I_{m1}` as the commuting scaling of a repeated block.
pub fn repeated_scaling(s: &CMatrix, m1: usize) -> Result<CMatrix> {
    kron_identity(s, m1)
}
