//! Numeric eigenstructure of the dynamical matrix, exceptional-point search,
//! branch-continuous sweeps and first-moment evolution.

use serde::Serialize;

use crate::linalg::{eigenvalues6, min_cost_assignment, normalized_overlap, null_vector, shifted_right_singular};
use crate::model::{build_dyn_matrix, DynMatrix, Mat6, Vec6};
use crate::ode::Dopri5;
use crate::params::Knob;
use crate::{ChainParams, Error, Result, C64};

/// Tolerances for grouping eigenvalues and testing defectiveness.
#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    /// Eigenvalues closer than `cluster_tol · max(1, ‖H‖)` share a cluster.
    pub cluster_tol: f64,
    /// Singular values of `H − μI` below `null_tol · max(1, ‖H‖)` count
    /// towards the geometric multiplicity of a cluster.
    pub null_tol: f64,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            cluster_tol: 1e-6,
            null_tol: 1e-7,
        }
    }
}

/// Group of (numerically) equal eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub members: Vec<usize>,
    pub centroid: C64,
    pub geometric_multiplicity: usize,
    /// Largest normalized overlap between eigenvectors of the cluster, in
    /// [0, 1]; close to 1 when the eigenvectors coalesce.
    pub defect_measure: f64,
}

impl Cluster {
    pub fn algebraic_multiplicity(&self) -> usize {
        self.members.len()
    }

    pub fn is_defective(&self) -> bool {
        self.geometric_multiplicity < self.members.len()
    }
}

#[derive(Debug, Clone)]
pub struct EigenSet {
    pub eigenvalues: [C64; 6],
    /// Unit-norm eigenvectors, `eigenvectors[k]` belonging to `eigenvalues[k]`.
    pub eigenvectors: [Vec6; 6],
    /// Index into `clusters` for each eigenvalue.
    pub cluster_labels: [usize; 6],
    pub clusters: Vec<Cluster>,
}

impl EigenSet {
    /// Most parallel pair of eigenvectors: `(overlap, i, j)`.
    pub fn max_pair_overlap(&self) -> (f64, usize, usize) {
        let mut best = (0.0, 0, 1);
        for i in 0..6 {
            for j in i + 1..6 {
                let o = normalized_overlap(&self.eigenvectors[i], &self.eigenvectors[j]);
                if o > best.0 {
                    best = (o, i, j);
                }
            }
        }
        best
    }

    pub fn defective_clusters(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.iter().filter(|c| c.is_defective())
    }

    /// Largest ‖H u − λ u‖ over the six pairs.
    pub fn max_residual(&self, m: &Mat6) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .map(|(l, u)| (m * u - u * *l).norm())
            .fold(0.0, f64::max)
    }
}

pub fn eig(dyn_matrix: &DynMatrix) -> Result<EigenSet> {
    eig_matrix(&dyn_matrix.entries, EigOptions::default())
}

/// Eigendecomposition of an arbitrary 6×6 complex matrix.
///
/// Eigenvalues come from the Schur form. Each eigenvector is the smallest
/// right singular vector of `H − λI`; inside a degenerate but
/// non-defective cluster the cluster's null space supplies an orthonormal
/// set instead, so only genuinely coalescing eigenvectors come out parallel.
pub fn eig_matrix(m: &Mat6, opts: EigOptions) -> Result<EigenSet> {
    let eigenvalues = eigenvalues6(m)?;
    let scale = m.norm().max(1.0);

    let mut labels = [usize::MAX; 6];
    let mut n_clusters = 0;
    for i in 0..6 {
        if labels[i] != usize::MAX {
            continue;
        }
        labels[i] = n_clusters;
        let mut stack = vec![i];
        while let Some(k) = stack.pop() {
            for j in 0..6 {
                if labels[j] == usize::MAX && (eigenvalues[k] - eigenvalues[j]).norm() < opts.cluster_tol * scale {
                    labels[j] = n_clusters;
                    stack.push(j);
                }
            }
        }
        n_clusters += 1;
    }

    let mut eigenvectors = [Vec6::zeros(); 6];
    let mut clusters = Vec::with_capacity(n_clusters);
    for label in 0..n_clusters {
        let members: Vec<usize> = (0..6).filter(|&k| labels[k] == label).collect();
        let centroid = members.iter().map(|&k| eigenvalues[k]).sum::<C64>() / members.len() as f64;
        let singular = shifted_right_singular(m, centroid);
        let geometric = singular
            .iter()
            .filter(|(s, _)| *s < opts.null_tol * scale)
            .count()
            .max(1);

        if members.len() == 1 {
            eigenvectors[members[0]] = null_vector(m, eigenvalues[members[0]]);
        } else if geometric >= members.len() {
            for (slot, &k) in members.iter().enumerate() {
                eigenvectors[k] = singular[slot].1;
            }
        } else {
            for &k in &members {
                eigenvectors[k] = null_vector(m, eigenvalues[k]);
            }
        }

        let mut defect = 0.0f64;
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                defect = defect.max(normalized_overlap(&eigenvectors[i], &eigenvectors[j]));
            }
        }
        clusters.push(Cluster {
            members,
            centroid,
            geometric_multiplicity: geometric,
            defect_measure: defect,
        });
    }

    Ok(EigenSet {
        eigenvalues,
        eigenvectors,
        cluster_labels: labels,
        clusters,
    })
}

/// Settings for [`detect_ep_with`].
#[derive(Debug, Clone, Copy)]
pub struct EpSearch {
    /// Points of the coarse scan over the knob range.
    pub scan_points: usize,
    /// Scan maxima of the eigenvector overlap below this are not refined.
    pub candidate_overlap: f64,
    pub max_iterations: usize,
}

impl Default for EpSearch {
    fn default() -> Self {
        Self {
            scan_points: 401,
            candidate_overlap: 0.5,
            max_iterations: 500,
        }
    }
}

/// One coalescing cluster at an exceptional point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpRecord {
    pub knob: Knob,
    pub knob_value: f64,
    /// Mean of the coalescing eigenvalues.
    pub coalesced: C64,
    /// Number of coalescing eigenvalues.
    pub order: usize,
    /// Smallest eigenvector overlap inside the cluster.
    pub overlap: f64,
    /// Largest eigenvalue distance inside the cluster.
    pub gap: f64,
}

pub fn detect_ep(params: &ChainParams, knob: Knob, range: (f64, f64), tol: f64) -> Result<Vec<EpRecord>> {
    detect_ep_with(params, knob, range, tol, EpSearch::default())
}

fn overlap_at(params: &ChainParams, knob: Knob, x: f64) -> Result<f64> {
    let h = build_dyn_matrix(&params.with_knob(knob, x))?;
    Ok(eig(&h)?.max_pair_overlap().0)
}

/// Locates exceptional points of the dynamical matrix as `knob` varies over
/// `range`.
///
/// A coarse scan of the largest eigenvector overlap picks out candidate
/// maxima, each refined by golden-section search to a knob tolerance `tol`.
/// Near an order-2 exceptional point the overlap deficit shrinks linearly in
/// the knob offset while the eigenvalue gap only shrinks as its square root,
/// so a refined point is accepted when `1 − overlap < max(100·tol, 1e-8)`
/// and `gap < 100·√tol · max(1, ‖H‖)`.
pub fn detect_ep_with(
    params: &ChainParams,
    knob: Knob,
    range: (f64, f64),
    tol: f64,
    search: EpSearch,
) -> Result<Vec<EpRecord>> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidGrid(format!("invalid knob range [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be > 0, got {tol}")));
    }
    let n = search.scan_points.max(3);
    let xs: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    let fs = xs
        .iter()
        .map(|&x| overlap_at(params, knob, x))
        .collect::<Result<Vec<f64>>>()?;

    let mut refined: Vec<f64> = Vec::new();
    for k in 0..n {
        let left = if k == 0 { f64::NEG_INFINITY } else { fs[k - 1] };
        let right = if k + 1 == n { f64::NEG_INFINITY } else { fs[k + 1] };
        if fs[k] < search.candidate_overlap || fs[k] < left || fs[k] < right {
            continue;
        }
        let a = xs[k.saturating_sub(1)];
        let b = xs[(k + 1).min(n - 1)];
        let x = golden_section_max(|x| overlap_at(params, knob, x), a, b, tol, search.max_iterations)?;
        if !refined.iter().any(|&r| (r - x).abs() < 10.0 * tol) {
            refined.push(x);
        }
    }

    let overlap_tol = (100.0 * tol).max(1e-8);
    let mut records = Vec::new();
    for x in refined {
        let h = build_dyn_matrix(&params.with_knob(knob, x))?;
        let set = eig(&h)?;
        let gap_tol = 100.0 * tol.sqrt() * h.norm().max(1.0);

        // Union the eigenvalue pairs that pass both tests.
        let mut parent: [usize; 6] = std::array::from_fn(|k| k);
        fn root(parent: &mut [usize; 6], mut k: usize) -> usize {
            while parent[k] != k {
                parent[k] = parent[parent[k]];
                k = parent[k];
            }
            k
        }
        let mut linked = [false; 6];
        for i in 0..6 {
            for j in i + 1..6 {
                let o = normalized_overlap(&set.eigenvectors[i], &set.eigenvectors[j]);
                let g = (set.eigenvalues[i] - set.eigenvalues[j]).norm();
                if 1.0 - o < overlap_tol && g < gap_tol {
                    let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                    parent[ri] = rj;
                    linked[i] = true;
                    linked[j] = true;
                }
            }
        }
        let mut seen = Vec::new();
        for i in 0..6 {
            if !linked[i] {
                continue;
            }
            let r = root(&mut parent, i);
            if seen.contains(&r) {
                continue;
            }
            seen.push(r);
            let members: Vec<usize> = (0..6).filter(|&k| linked[k] && root(&mut parent, k) == r).collect();
            let coalesced = members.iter().map(|&k| set.eigenvalues[k]).sum::<C64>() / members.len() as f64;
            let mut overlap = 1.0f64;
            let mut gap = 0.0f64;
            for (a, &p) in members.iter().enumerate() {
                for &q in &members[a + 1..] {
                    overlap = overlap.min(normalized_overlap(&set.eigenvectors[p], &set.eigenvectors[q]));
                    gap = gap.max((set.eigenvalues[p] - set.eigenvalues[q]).norm());
                }
            }
            records.push(EpRecord {
                knob,
                knob_value: x,
                coalesced,
                order: members.len(),
                overlap,
                gap,
            });
        }
    }
    records.sort_by(|a, b| {
        a.knob_value
            .total_cmp(&b.knob_value)
            .then(a.coalesced.re.total_cmp(&b.coalesced.re))
    });
    Ok(records)
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
fn golden_section_max<F>(mut f: F, mut a: f64, mut b: f64, tol: f64, max_iterations: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (lo, hi) = (a, b);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut iterations = 0;
    while (b - a).abs() > tol {
        if iterations == max_iterations || !fc.is_finite() || !fd.is_finite() {
            return Err(Error::RefinementNonConvergence { lo, hi });
        }
        iterations += 1;
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    // The bracket ends can beat the interior probes when the maximum sits
    // on the boundary of the initial bracket.
    let mid = 0.5 * (a + b);
    let candidates = [(mid, f(mid)?), (lo, f(lo)?), (hi, f(hi)?)];
    let best = candidates
        .iter()
        .fold(candidates[0], |acc, &c| if c.1 > acc.1 { c } else { acc });
    Ok(best.0)
}

/// Eigenvalue branches over a knob grid, matched for continuity.
#[derive(Debug, Clone, Serialize)]
pub struct SweepTrace {
    pub knob: Knob,
    pub grid: Vec<f64>,
    /// `branches[b][k]` is branch `b` at grid point `k`.
    pub branches: [Vec<C64>; 6],
    /// False where the drive is at or above the critical drive.
    pub stable: Vec<bool>,
}

pub fn sweep_eigenvalues(params: &ChainParams, knob: Knob, grid: &[f64]) -> Result<SweepTrace> {
    if grid.len() < 2 {
        return Err(Error::InvalidGrid("sweep needs at least two points".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("sweep grid must be strictly increasing".into()));
    }
    let spectra = grid
        .iter()
        .map(|&x| {
            let p = params.with_knob(knob, x);
            let h = build_dyn_matrix(&p)?;
            Ok((eigenvalues6(&h.entries)?, p.is_stable()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut branches: [Vec<C64>; 6] = std::array::from_fn(|_| Vec::with_capacity(grid.len()));
    let mut current = spectra[0].0;
    // Start in a canonical order so output does not depend on solver order.
    current.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    for (b, branch) in branches.iter_mut().enumerate() {
        branch.push(current[b]);
    }
    for (next, _) in spectra.iter().skip(1) {
        let mut cost = [[0.0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                cost[i][j] = (current[i] - next[j]).norm();
            }
        }
        let assignment = min_cost_assignment(&cost);
        for (b, branch) in branches.iter_mut().enumerate() {
            current[b] = next[assignment[b]];
            branch.push(current[b]);
        }
    }
    Ok(SweepTrace {
        knob,
        grid: grid.to_vec(),
        branches,
        stable: spectra.iter().map(|s| s.1).collect(),
    })
}

/// Integrates `i dΨ/dt = H Ψ` from `psi0` at `t_grid[0]`.
/// Largest growth rate max Im λ of the first moments.
pub fn max_growth_rate(params: &ChainParams) -> Result<f64> {
    let h = build_dyn_matrix(params)?;
    Ok(eigenvalues6(&h.entries)?
        .iter()
        .map(|l| l.im)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `Ω < Ω_c` is the stability condition only for resonant outer oscillators;
/// this checks the eigenvalues directly so detuned chains are covered too.
pub fn require_numerically_stable(params: &ChainParams) -> Result<()> {
    params.require_stable()?;
    let h = build_dyn_matrix(params)?;
    if max_growth_rate(params)? > 1e-10 * h.norm().max(1.0) {
        return Err(Error::NoSteadyState {
            omega: params.omega_drive,
            omega_c: params.critical_drive(),
        });
    }
    Ok(())
}

pub fn evolve_first_moments(dyn_matrix: &DynMatrix, psi0: &Vec6, t_grid: &[f64]) -> Result<Vec<Vec6>> {
    let generator = dyn_matrix.entries * C64::new(0.0, -1.0);
    let solver = Dopri5 {
        rtol: 1e-12,
        atol: 1e-15,
        ..Dopri5::default()
    };
    let states = solver.integrate(
        |_, y, dy| {
            for r in 0..6 {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..6 {
                    acc += generator[(r, c)] * y[c];
                }
                dy[r] = acc;
            }
        },
        psi0.as_slice(),
        t_grid,
    )?;
    Ok(states.into_iter().map(|s| Vec6::from_column_slice(&s)).collect())
}
