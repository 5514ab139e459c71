//! Block matrices over M_d with block-structure metadata.
//!
//! The underlying storage is one dense matrix; the wrapper tracks the block
//! size d and the block shape so that level/slot indexing stays explicit.

use crate::error::{Error, Result};
use crate::matrix::{op_norm, CMatrix};

#[derive(Debug, Clone)]
pub struct BlockOp {
    mat: CMatrix,
    d: usize,
    brows: usize,
    bcols: usize,
}

impl BlockOp {
    pub fn zeros(d: usize, brows: usize, bcols: usize) -> Self {
        BlockOp {
            mat: CMatrix::zeros(brows * d, bcols * d),
            d,
            brows,
            bcols,
        }
    }

    pub fn from_matrix(mat: CMatrix, d: usize) -> Result<Self> {
        if d == 0 || mat.nrows() % d != 0 || mat.ncols() % d != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix does not tile into {d}x{d} blocks",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let brows = mat.nrows() / d;
        let bcols = mat.ncols() / d;
        Ok(BlockOp {
            mat,
            d,
            brows,
            bcols,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut CMatrix {
        &mut self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn block_size(&self) -> usize {
        self.d
    }

    pub fn block_rows(&self) -> usize {
        self.brows
    }

    pub fn block_cols(&self) -> usize {
        self.bcols
    }

    pub fn block(&self, i: usize, j: usize) -> CMatrix {
        self.mat
            .view((i * self.d, j * self.d), (self.d, self.d))
            .into()
    }

    pub fn set_block(&mut self, i: usize, j: usize, b: &CMatrix) {
        let mut view = self.mat.view_mut((i * self.d, j * self.d), (self.d, self.d));
        view.copy_from(b);
    }

    pub fn adjoint(&self) -> BlockOp {
        BlockOp {
            mat: self.mat.adjoint(),
            d: self.d,
            brows: self.bcols,
            bcols: self.brows,
        }
    }

    pub fn op_norm(&self) -> Result<f64> {
        op_norm(&self.mat)
    }

    /// Blockwise derivation [D0, .] applied to every d x d block; equals the
    /// commutator with the block-diagonal ambient generator.
    pub fn blockwise_commutator(&self, d0: &CMatrix) -> BlockOp {
        let mut out = BlockOp::zeros(self.d, self.brows, self.bcols);
        for i in 0..self.brows {
            for j in 0..self.bcols {
                let b = self.block(i, j);
                out.set_block(i, j, &(d0 * &b - &b * d0));
            }
        }
        out
    }
}

/// Blockwise [D0, .] on a raw matrix tiled into d x d blocks.
pub fn blockwise_delta(mat: &CMatrix, d0: &CMatrix, d: usize) -> CMatrix {
    let brows = mat.nrows() / d;
    let bcols = mat.ncols() / d;
    let mut out = CMatrix::zeros(mat.nrows(), mat.ncols());
    for i in 0..brows {
        for j in 0..bcols {
            let b: CMatrix = mat.view((i * d, j * d), (d, d)).into();
            let c = d0 * &b - &b * d0;
            out.view_mut((i * d, j * d), (d, d)).copy_from(&c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{cre, matrix_unit};

    #[test]
    fn block_roundtrip() {
        let mut b = BlockOp::zeros(2, 3, 2);
        let unit = matrix_unit(2, 0, 1) * cre(2.5);
        b.set_block(2, 1, &unit);
        assert_eq!(b.block(2, 1), unit);
        assert_eq!(b.block(0, 0), CMatrix::zeros(2, 2));
        assert_eq!(b.matrix()[(4, 3)], cre(2.5));
    }

    #[test]
    fn blockwise_commutator_matches_big_commutator() {
        let d = 2;
        let mut m = BlockOp::zeros(d, 2, 2);
        m.set_block(0, 1, &matrix_unit(d, 0, 1));
        m.set_block(1, 0, &matrix_unit(d, 1, 0));
        let mut d0 = CMatrix::zeros(d, d);
        d0[(0, 0)] = cre(1.0);
        d0[(1, 1)] = cre(-1.0);
        let blockwise = m.blockwise_commutator(&d0);
        // commutator with blkdiag(d0, d0)
        let mut big = CMatrix::zeros(4, 4);
        big.view_mut((0, 0), (2, 2)).copy_from(&d0);
        big.view_mut((2, 2), (2, 2)).copy_from(&d0);
        let expect = &big * m.matrix() - m.matrix() * &big;
        assert_eq!(blockwise.matrix(), &expect);
    }
}
