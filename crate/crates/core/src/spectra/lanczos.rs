//! Thick-restart Lanczos with full reorthogonalization.
//!
//! Each cycle extends an orthonormal Krylov basis to `krylov_dim` vectors,
//! performs Rayleigh–Ritz on the whole basis and restarts from the lowest Ritz
//! vectors plus the next Lanczos direction. Exact degeneracies, which a single
//! Krylov sequence cannot resolve, are recovered by deflated runs from fresh
//! random vectors orthogonal to everything already converged.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Method, Spectrum};
use crate::error::{Error, Result};
use crate::sparse::LinearOperator;
use crate::spin::CMatrix;

type CVec = Vec<Complex64>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Restrict the iteration to an eigenspace of a diagonal symmetry, e.g. the
/// parity `Π_j σ_z^j`. `signs[i]` is the symmetry eigenvalue of basis state i.
#[derive(Clone, Debug)]
pub struct Sector {
    pub signs: Vec<f64>,
    pub value: f64,
}

impl Sector {
    fn project(&self, v: &mut [Complex64]) {
        for (x, &s) in v.iter_mut().zip(&self.signs) {
            if s != self.value {
                *x = ZERO;
            }
        }
    }

    fn size(&self) -> usize {
        self.signs.iter().filter(|&&s| s == self.value).count()
    }
}

#[derive(Clone, Debug)]
pub struct LanczosConfig {
    pub n_eigenpairs: usize,
    pub krylov_dim: usize,
    pub seed: u64,
    /// Residual tolerance relative to the largest |Ritz value| (floored at 1).
    pub tol: f64,
    pub max_restarts: usize,
    pub sector: Option<Sector>,
}

impl LanczosConfig {
    pub fn new(n_eigenpairs: usize, krylov_dim: usize, seed: u64) -> Self {
        LanczosConfig { n_eigenpairs, krylov_dim, seed, tol: 1e-10, max_restarts: 500, sector: None }
    }

    pub fn in_sector(mut self, sector: Sector) -> Self {
        self.sector = Some(sector);
        self
    }
}

struct Pair {
    value: f64,
    vector: CVec,
    residual: f64,
    converged: bool,
}

struct Outcome {
    pairs: Vec<Pair>,
    gram_defect: f64,
    scale: f64,
}

/// Lowest `n_eigenpairs` eigenpairs of a hermitian operator.
pub fn lanczos<A: LinearOperator + ?Sized>(op: &A, cfg: &LanczosConfig) -> Result<Spectrum> {
    let dim = op.dim();
    if cfg.n_eigenpairs == 0 {
        return Err(Error::invalid("n_eigenpairs must be >= 1"));
    }
    if cfg.krylov_dim < cfg.n_eigenpairs {
        return Err(Error::invalid(format!(
            "krylov_dim {} < n_eigenpairs {}",
            cfg.krylov_dim, cfg.n_eigenpairs
        )));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::invalid("tolerance must be > 0"));
    }
    if let Some(s) = &cfg.sector {
        if s.signs.len() != dim {
            return Err(Error::invalid("sector sign vector has the wrong length"));
        }
    }
    let space = cfg.sector.as_ref().map_or(dim, Sector::size);
    let want = cfg.n_eigenpairs.min(space);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let first = thick_restart(op, cfg, want, &[], &mut rng);
    let mut scale = first.scale;
    let mut gram = first.gram_defect;
    let mut found = first.pairs;

    // Deflated probes: anything lower than the current top of the wanted set
    // is a missed (degenerate) state.
    for _ in 0..want + 4 {
        if found.len() >= space {
            break;
        }
        let locked: Vec<&[Complex64]> = found.iter().map(|p| p.vector.as_slice()).collect();
        let probe = thick_restart(op, cfg, 1, &locked, &mut rng);
        gram = gram.max(probe.gram_defect);
        scale = scale.max(probe.scale);
        let Some(p) = probe.pairs.into_iter().next() else { break };
        found.sort_by(|a, b| a.value.total_cmp(&b.value));
        let top = found[want.min(found.len()) - 1].value;
        if p.value < top - cfg.tol * scale || found.len() < want {
            found.push(p);
        } else {
            break;
        }
    }

    found.sort_by(|a, b| a.value.total_cmp(&b.value));
    found.truncate(want);
    let covered = found.last().map_or(f64::NEG_INFINITY, |p| p.value);
    let vectors = CMatrix::from_fn(dim, found.len(), |r, c| found[c].vector[r]);
    Ok(Spectrum {
        eigenvalues: found.iter().map(|p| p.value).collect(),
        residuals: found.iter().map(|p| p.residual).collect(),
        converged: found.iter().map(|p| p.converged).collect(),
        eigenvectors: Some(vectors),
        method: Method::Lanczos,
        krylov_dim: Some(cfg.krylov_dim),
        covered_up_to: if space == found.len() && cfg.sector.is_none() { f64::INFINITY } else { covered },
        gram_defect: Some(gram),
    })
}

fn thick_restart<A: LinearOperator + ?Sized>(
    op: &A,
    cfg: &LanczosConfig,
    want: usize,
    locked: &[&[Complex64]],
    rng: &mut ChaCha8Rng,
) -> Outcome {
    let dim = op.dim();
    let space = cfg.sector.as_ref().map_or(dim, Sector::size).saturating_sub(locked.len());
    let k = cfg.krylov_dim.max(want + 1).min(space);
    if k == 0 {
        return Outcome { pairs: Vec::new(), gram_defect: 0.0, scale: 1.0 };
    }
    let want = want.min(k);
    let keep = (want + (k - want) / 2).min(k.saturating_sub(1)).max(want.min(k.saturating_sub(1)));

    let mut basis: Vec<CVec> = Vec::with_capacity(k + 1);
    let mut images: Vec<CVec> = Vec::with_capacity(k + 1);
    let mut next = fresh_direction(dim, cfg, locked, &basis, rng);
    let mut gram_defect = 0.0f64;
    let mut last: Vec<Pair> = Vec::new();
    let mut scale = 1.0;

    for _cycle in 0..=cfg.max_restarts {
        // Extend the basis with Lanczos directions.
        while basis.len() < k {
            let v = match next.take() {
                Some(v) => v,
                None => match fresh_direction(dim, cfg, locked, &basis, rng) {
                    Some(v) => v,
                    None => break,
                },
            };
            let w = op.apply_vec(&v);
            basis.push(v);
            let mut f = w.clone();
            images.push(w);
            orthogonalize(&mut f, locked, &basis, cfg.sector.as_ref());
            let norm = vnorm(&f);
            let ref_norm = vnorm(images.last().unwrap()).max(f64::MIN_POSITIVE);
            next = if norm > 1e-10 * ref_norm && norm > 1e-300 {
                scale_in_place(&mut f, 1.0 / norm);
                Some(f)
            } else {
                None
            };
        }
        let m = basis.len();
        if m == 0 {
            break;
        }

        gram_defect = gram_defect.max(gram_defect_of(&basis));

        let t = DMatrix::from_fn(m, m, |i, j| dot(&basis[i], &images[j]));
        let t = (&t + t.adjoint()).scale(0.5);
        let eig = t.symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        scale = eig.eigenvalues.iter().fold(1.0f64, |acc, &x| acc.max(x.abs()));
        let threshold = cfg.tol * scale;

        let combine = |vs: &[CVec], col: usize| -> CVec {
            let mut out = vec![ZERO; dim];
            for (i, v) in vs.iter().enumerate() {
                let c = eig.eigenvectors[(i, col)];
                if c != ZERO {
                    for (o, x) in out.iter_mut().zip(v) {
                        *o += c * x;
                    }
                }
            }
            out
        };

        let n_ritz = keep.max(want).min(m);
        let mut ritz: Vec<(f64, CVec, CVec, f64)> = Vec::with_capacity(n_ritz);
        for &col in order.iter().take(n_ritz) {
            let theta = eig.eigenvalues[col];
            let x = combine(&basis, col);
            let hx = combine(&images, col);
            let r = hx.iter().zip(&x).map(|(a, b)| (a - b * theta).norm_sqr()).sum::<f64>().sqrt();
            ritz.push((theta, x, hx, r));
        }

        let done = ritz.iter().take(want).all(|p| p.3 <= threshold) || m == space;
        last = ritz
            .iter()
            .take(want)
            .map(|(theta, x, _, r)| Pair { value: *theta, vector: x.clone(), residual: *r, converged: *r <= threshold })
            .collect();
        if done || m < k {
            // m < k: the reachable space is exhausted; Ritz pairs are exact
            // within it.
            if m < k {
                for p in &mut last {
                    p.converged = p.residual <= threshold;
                }
            }
            break;
        }

        // Restart: keep the lowest Ritz vectors and continue from the next
        // Lanczos direction, which is orthogonal to all of them.
        let kept = keep.min(ritz.len());
        let mut new_basis = Vec::with_capacity(k + 1);
        let mut new_images = Vec::with_capacity(k + 1);
        for (_, x, hx, _) in ritz.into_iter().take(kept) {
            new_basis.push(x);
            new_images.push(hx);
        }
        basis = new_basis;
        images = new_images;
        next = next.and_then(|mut f| {
            orthogonalize(&mut f, locked, &basis, cfg.sector.as_ref());
            let n = vnorm(&f);
            (n > 1e-8).then(|| {
                scale_in_place(&mut f, 1.0 / n);
                f
            })
        });
    }

    Outcome { pairs: last, gram_defect, scale }
}

/// Ritz pairs of the Krylov space spanned by the given start vectors (block
/// Krylov, `krylov_dim` vectors per start), kept orthogonal to `locked`.
/// Used to resolve the spectral weight of `O|ψ_0⟩`.
pub fn krylov_ritz_basis<A: LinearOperator + ?Sized>(
    op: &A,
    starts: &[CVec],
    krylov_dim: usize,
    locked: &[&[Complex64]],
) -> Result<(Vec<f64>, CMatrix, Vec<f64>, f64)> {
    let dim = op.dim();
    let mut basis: Vec<CVec> = Vec::new();
    let mut images: Vec<CVec> = Vec::new();
    let mut block: Vec<CVec> = Vec::new();
    for s in starts {
        if s.len() != dim {
            return Err(Error::invalid("start vector has the wrong dimension"));
        }
        let mut v = s.clone();
        orthogonalize(&mut v, locked, &basis, None);
        orthogonalize(&mut v, &[], &block, None);
        let n = vnorm(&v);
        if n > 1e-12 * vnorm(s).max(f64::MIN_POSITIVE) {
            scale_in_place(&mut v, 1.0 / n);
            block.push(v);
        }
    }
    let target = (krylov_dim * starts.len().max(1)).min(dim.saturating_sub(locked.len()));
    while !block.is_empty() && basis.len() < target {
        let mut next_block = Vec::new();
        for v in block {
            if basis.len() >= target {
                break;
            }
            let w = op.apply_vec(&v);
            basis.push(v);
            let mut f = w.clone();
            images.push(w);
            orthogonalize(&mut f, locked, &basis, None);
            orthogonalize(&mut f, &[], &next_block, None);
            let n = vnorm(&f);
            if n > 1e-10 * vnorm(images.last().unwrap()).max(f64::MIN_POSITIVE) {
                scale_in_place(&mut f, 1.0 / n);
                next_block.push(f);
            }
        }
        block = next_block;
    }
    let m = basis.len();
    let gram = gram_defect_of(&basis);
    if m == 0 {
        return Ok((Vec::new(), CMatrix::zeros(dim, 0), Vec::new(), gram));
    }
    let t = DMatrix::from_fn(m, m, |i, j| dot(&basis[i], &images[j]));
    let t = (&t + t.adjoint()).scale(0.5);
    let eig = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut values = Vec::with_capacity(m);
    let mut vectors = CMatrix::zeros(dim, m);
    let mut residuals = Vec::with_capacity(m);
    for (c, &col) in order.iter().enumerate() {
        let theta = eig.eigenvalues[col];
        let mut r2 = 0.0;
        for row in 0..dim {
            let mut x = ZERO;
            let mut hx = ZERO;
            for i in 0..m {
                let y = eig.eigenvectors[(i, col)];
                x += y * basis[i][row];
                hx += y * images[i][row];
            }
            vectors[(row, c)] = x;
            r2 += (hx - x * theta).norm_sqr();
        }
        values.push(theta);
        residuals.push(r2.sqrt());
    }
    Ok((values, vectors, residuals, gram))
}

fn fresh_direction(
    dim: usize,
    cfg: &LanczosConfig,
    locked: &[&[Complex64]],
    basis: &[CVec],
    rng: &mut ChaCha8Rng,
) -> Option<CVec> {
    for _ in 0..8 {
        let mut v: CVec = (0..dim)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        if let Some(s) = &cfg.sector {
            s.project(&mut v);
        }
        let before = vnorm(&v);
        orthogonalize(&mut v, locked, basis, cfg.sector.as_ref());
        let n = vnorm(&v);
        if n > 1e-6 * before && n > 0.0 {
            scale_in_place(&mut v, 1.0 / n);
            return Some(v);
        }
    }
    None
}

/// Two passes of classical Gram–Schmidt against `locked` and `basis`.
fn orthogonalize(f: &mut [Complex64], locked: &[&[Complex64]], basis: &[CVec], sector: Option<&Sector>) {
    for _ in 0..2 {
        for q in locked.iter().copied().chain(basis.iter().map(|v| v.as_slice())) {
            let c = dot(q, f);
            if c != ZERO {
                for (x, y) in f.iter_mut().zip(q) {
                    *x -= c * y;
                }
            }
        }
        if let Some(s) = sector {
            s.project(f);
        }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn vnorm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn scale_in_place(a: &mut [Complex64], s: f64) {
    a.iter_mut().for_each(|x| *x *= s);
}

fn gram_defect_of(basis: &[CVec]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..basis.len() {
        for j in i..basis.len() {
            let g = dot(&basis[i], &basis[j]);
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_chain_hamiltonian, parity_signs, Geometry, IsingChainModel};
    use crate::sparse::SparseOperator;
    use crate::spectra::dense_eigh;

    fn chain(n: usize, j: f64) -> SparseOperator {
        let m = IsingChainModel::uniform(n, 1.0, j, Geometry::NearestNeighborPbc, 0.0);
        build_chain_hamiltonian(&m).unwrap().h_s
    }

    #[test]
    fn eight_site_chain_matches_dense() {
        let h = chain(8, 0.3);
        let dense = dense_eigh(&h.dense()).unwrap();
        let spec = lanczos(&h, &LanczosConfig::new(5, 40, 1)).unwrap();
        assert!(spec.all_converged());
        for i in 0..5 {
            assert!((spec.eigenvalues[i] - dense.eigenvalues[i]).abs() < 1e-8, "{i}");
        }
        assert!(spec.orthonormality_defect() < 1e-8);
        assert!(spec.gram_defect.unwrap() < 1e-8);
        assert!(spec.residuals.iter().all(|&r| r < 1e-8));
    }

    #[test]
    fn degenerate_levels_are_all_found() {
        // Free spins: the first excited level of 6 spins is 6-fold degenerate.
        let h = chain(6, 0.0);
        let spec = lanczos(&h, &LanczosConfig::new(5, 20, 3)).unwrap();
        assert!((spec.eigenvalues[0] + 3.0).abs() < 1e-10);
        for i in 1..5 {
            assert!((spec.eigenvalues[i] + 2.0).abs() < 1e-10, "{:?}", spec.eigenvalues);
        }
        assert!(spec.orthonormality_defect() < 1e-8);
    }

    #[test]
    fn identity_operator() {
        let h = SparseOperator::identity(64).scaled(2.5);
        let spec = lanczos(&h, &LanczosConfig::new(3, 10, 9)).unwrap();
        assert_eq!(spec.len(), 3);
        assert!(spec.eigenvalues.iter().all(|&e| (e - 2.5).abs() < 1e-12));
        assert!(spec.orthonormality_defect() < 1e-10);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let h = chain(7, -0.4);
        let a = lanczos(&h, &LanczosConfig::new(3, 20, 42)).unwrap();
        let b = lanczos(&h, &LanczosConfig::new(3, 20, 42)).unwrap();
        assert_eq!(a.eigenvalues, b.eigenvalues);
        assert_eq!(a.eigenvectors, b.eigenvectors);
    }

    #[test]
    fn parity_sectors_recombine() {
        let n = 8;
        let h = chain(n, 0.6);
        let full = lanczos(&h, &LanczosConfig::new(6, 40, 5)).unwrap();
        let signs = parity_signs(n);
        let mut combined = Vec::new();
        for value in [1.0, -1.0] {
            let cfg = LanczosConfig::new(6, 40, 5).in_sector(Sector { signs: signs.clone(), value });
            let s = lanczos(&h, &cfg).unwrap();
            // Every vector lives in its sector.
            let v = s.eigenvectors.as_ref().unwrap();
            for c in 0..s.len() {
                for r in 0..v.nrows() {
                    if signs[r] != value {
                        assert!(v[(r, c)].norm() < 1e-12);
                    }
                }
            }
            combined.extend(s.eigenvalues);
        }
        combined.sort_by(f64::total_cmp);
        for (a, b) in combined.iter().zip(&full.eigenvalues).take(6) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn small_space_is_exhausted_cleanly() {
        let h = chain(2, 0.5);
        let spec = lanczos(&h, &LanczosConfig::new(4, 60, 0)).unwrap();
        let dense = dense_eigh(&h.dense()).unwrap();
        assert_eq!(spec.len(), 4);
        assert!(spec.is_complete());
        for i in 0..4 {
            assert!((spec.eigenvalues[i] - dense.eigenvalues[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn config_errors() {
        let h = chain(3, 0.0);
        assert!(lanczos(&h, &LanczosConfig::new(5, 4, 0)).is_err());
        assert!(lanczos(&h, &LanczosConfig::new(0, 4, 0)).is_err());
    }

    #[test]
    fn ritz_basis_captures_start_vector() {
        let h = chain(6, 0.2);
        let start: CVec = (0..64).map(|i| Complex64::new((i as f64).sin(), 0.0)).collect();
        let (vals, vecs, res, gram) = krylov_ritz_basis(&h, std::slice::from_ref(&start), 64, &[]).unwrap();
        assert!(gram < 1e-8);
        assert_eq!(vals.len(), vecs.ncols());
        assert!(res.iter().all(|&r| r < 1e-8));
        let norm2: f64 = start.iter().map(|x| x.norm_sqr()).sum();
        let captured: f64 = (0..vecs.ncols())
            .map(|c| dot(&vecs.column(c).iter().copied().collect::<Vec<_>>(), &start).norm_sqr())
            .sum();
        assert!((captured - norm2).abs() < 1e-10 * norm2);
    }
}
