//! Dense linear algebra kernels: storage, norms, rank-one updates, QR, SVD
//! and the pseudoinverse solution oracle.

mod io;
mod mat;
mod qr;
mod svd;

pub use io::{format_matrix, parse_matrix, read_matrix, write_matrix};
pub use mat::{col_norms_sq, dot, frob_norm_sq, rank_one_update, residual, row_norms_sq, Mat};
pub use qr::householder_qr;
pub use svd::{pinv, pinv_solution, svd, SvdResult};
