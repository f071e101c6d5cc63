//! Small dense complex linear algebra. Storage and factorizations come from
//! `nalgebra`; the non-Hermitian eigenvalue problem is handed to `faer`.

use nalgebra::{DMatrix, DVector, SVD};

use crate::model::{Mat6, Vec6};
use crate::{Error, Result, C64};

/// Eigenvalues of a 6×6 complex matrix.
pub fn eigenvalues6(m: &Mat6) -> Result<[C64; 6]> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidParams("matrix has non-finite entries".into()));
    }
    let fm = faer::Mat::<C64>::from_fn(6, 6, |r, c| m[(r, c)]);
    let values = fm.eigenvalues().map_err(|_| Error::EigenNonConvergence)?;
    let mut out = [C64::new(0.0, 0.0); 6];
    out.copy_from_slice(&values);
    Ok(out)
}

/// Singular values and right singular vectors of `m − λI`, sorted by
/// ascending singular value.
pub fn shifted_right_singular(m: &Mat6, lambda: C64) -> Vec<(f64, Vec6)> {
    let shifted = m - Mat6::identity() * lambda;
    let svd = SVD::new(shifted, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut pairs: Vec<(f64, Vec6)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(k, &s)| (s, v_t.row(k).adjoint().into_owned()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Unit vector minimizing ‖(m − λI) v‖.
pub fn null_vector(m: &Mat6, lambda: C64) -> Vec6 {
    shifted_right_singular(m, lambda).swap_remove(0).1
}

/// |⟨u, v⟩| / (‖u‖ ‖v‖).
pub fn normalized_overlap(u: &Vec6, v: &Vec6) -> f64 {
    let denom = u.norm() * v.norm();
    if denom == 0.0 {
        0.0
    } else {
        (u.dotc(v).norm() / denom).min(1.0)
    }
}

/// Calls `f` with every permutation of `0..n` (Heap's algorithm).
fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            f(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Permutation `p` minimizing `Σ cost[i][p[i]]`. Exhaustive; meant for n ≤ 8.
pub fn min_cost_assignment<const N: usize>(cost: &[[f64; N]; N]) -> [usize; N] {
    let mut best = [0usize; N];
    let mut best_cost = f64::INFINITY;
    for_each_permutation(N, |p| {
        let total: f64 = p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        if total < best_cost {
            best_cost = total;
            best.copy_from_slice(p);
        }
    });
    best
}

/// Smallest achievable maximum distance over pairings of two multisets.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len(), "multisets must have equal size");
    let mut best = f64::INFINITY;
    for_each_permutation(a.len(), |p| {
        let worst = p
            .iter()
            .enumerate()
            .map(|(i, &j)| (a[i] - b[j]).norm())
            .fold(0.0, f64::max);
        best = best.min(worst);
    });
    best
}

/// Solves `m x = rhs` by LU with partial pivoting.
pub fn lu_solve(m: &DMatrix<C64>, rhs: &DVector<C64>) -> Result<DVector<C64>> {
    m.clone().lu().solve(rhs).ok_or(Error::SingularSystem)
}

/// Orthonormal bases of the right and left numerical nullspaces of `m`
/// (singular values below `rel_tol · σ_max`).
pub fn nullspaces(m: &DMatrix<C64>, rel_tol: f64) -> (Vec<DVector<C64>>, Vec<DVector<C64>>) {
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.max();
    let mut right = Vec::new();
    let mut left = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= rel_tol * smax {
            right.push(v_t.row(k).adjoint());
            left.push(u.column(k).into_owned());
        }
    }
    (right, left)
}
