//! Direct solver built on the compressed representation: the sparse
//! embedding, the telescoping inverse, and a GMRES driver.

mod embed;
mod factor;
mod gmres;
mod mm;

pub use embed::{assemble_embedding, solve_via_embedding_dense, BlockKind, EmbeddingBlock, SparseEmbedding, DENSE_EMBEDDING_LIMIT};
pub use factor::{factor, factor_with, FactorOptions, FactoredInverse, InverseBlock, RCOND_WARN};
pub use gmres::{gmres, GmresError, GmresOutput};
pub use mm::{export_matrix_market, import_matrix_market, read_matrix_market, write_matrix_market};

#[cfg(test)]
mod tests;
