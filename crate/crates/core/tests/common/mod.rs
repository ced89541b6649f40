#![allow(dead_code)]

use attribmkt::FactorStructure;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

pub fn matrix(rows: usize, cols: usize, lo: f64, hi: f64) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(lo..hi, rows * cols).prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

pub fn vector(len: usize, lo: f64, hi: f64) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(lo..hi, len).prop_map(DVector::from_vec)
}

/// Random factor structure with `n ≤ max_n`, `k ≤ max_k` and weights in `(0, 10]`.
pub fn factor_structure(max_n: usize, max_k: usize) -> impl Strategy<Value = FactorStructure<f64>> {
    (1..=max_n, 0..=max_k)
        .prop_flat_map(|(n, k)| (matrix(n, k, -2.0, 2.0), vector(k, 1e-3, 10.0)))
        .prop_map(|(s, g)| FactorStructure::with_unit_baseline(s, g).unwrap())
}

/// Matrix with orthonormal columns from the QR factor of a random draw.
pub fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}
