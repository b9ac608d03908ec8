//! S and completely-S tests for 1x1 and 2x2 matrices.

use nalgebra::{DMatrix, Vector2};

/// Some `x >= 0`, `x != 0`, with `a x > 0` componentwise, or `None`.
///
/// For 2x2 the search is over `x = (1, t)`, `t > 0`: each row gives a
/// half-line of admissible `t`, and the answer is any point of their
/// intersection. Strict positivity of the rows makes boundary rays
/// `t = 0`, `t = inf` equivalent to nearby interior ones.
pub fn s_witness(a: &DMatrix<f64>) -> Option<Vec<f64>> {
    assert!(a.is_square() && (1..=2).contains(&a.nrows()), "only 1x1 and 2x2 matrices are supported");
    if a.nrows() == 1 {
        return (a[(0, 0)] > 0.0).then(|| vec![1.0]);
    }
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for r in 0..2 {
        let (c0, c1) = (a[(r, 0)], a[(r, 1)]);
        // c0 + c1 t > 0
        if c1 > 0.0 {
            lo = lo.max(-c0 / c1);
        } else if c1 < 0.0 {
            hi = hi.min(c0 / -c1);
        } else if !(c0 > 0.0) {
            return None;
        }
    }
    if !(lo < hi) {
        return None;
    }
    let t = if hi.is_infinite() { lo + 1.0 } else { 0.5 * (lo + hi) };
    let x = Vector2::new(1.0, t).normalize();
    Some(vec![x.x, x.y])
}

/// Every principal submatrix admits a positive `x` with positive image.
pub fn is_completely_s(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    (0..n).all(|i| a[(i, i)] > 0.0) && (n == 1 || s_witness(a).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(a: f64, b: f64, c: f64, d: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    #[test]
    fn examples() {
        assert!(is_completely_s(&m(1.0, 0.0, 0.0, 1.0)));
        assert!(!is_completely_s(&m(1.0, -2.0, -2.0, 1.0)));
        assert!(is_completely_s(&m(1.0, -0.5, -0.5, 1.0)));
        assert!(!is_completely_s(&m(-1.0, 0.0, 0.0, 1.0)));
        assert!(is_completely_s(&DMatrix::from_element(1, 1, 0.3)));
    }

    #[test]
    fn witness_is_valid() {
        for a in [m(1.0, -0.5, -0.5, 1.0), m(-1.0, 2.0, 3.0, -1.0), m(0.0, 1.0, 0.0, 1.0)] {
            let x = s_witness(&a).unwrap();
            assert!(x.iter().all(|v| *v >= 0.0));
            let y = &a * DMatrix::from_column_slice(2, 1, &x);
            assert!(y.iter().all(|v| *v > 0.0), "{a} {x:?}");
        }
        assert!(s_witness(&m(-1.0, -1.0, 1.0, 1.0)).is_none());
    }
}
