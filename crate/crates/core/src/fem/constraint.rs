//! Affine dof maps: every full dof is either a reduced unknown, a fixed
//! value, or an affine combination of reduced unknowns. Assembly through the
//! map yields 𝒫ᵀA𝒫 and 𝒫ᵀ(b − A c) directly.

use super::sparse::{CsrMatrix, SparseSystem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DofConstraint {
    Free(usize),
    Fixed(f64),
    Affine { terms: Vec<(usize, f64)>, constant: f64 },
}

#[derive(Debug, Clone)]
pub struct ConstraintMap {
    pub map: Vec<DofConstraint>,
    pub num_reduced: usize,
}

impl ConstraintMap {
    /// Identity map over `n` dofs.
    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).map(DofConstraint::Free).collect(),
            num_reduced: n,
        }
    }

    /// Numbers the free dofs consecutively, then appends `extra` reduced
    /// unknowns that only appear through affine terms.
    pub fn from_kinds(kinds: Vec<DofConstraint>, extra: usize) -> Result<Self> {
        let mut next = 0;
        let mut map = kinds;
        for c in &mut map {
            if let DofConstraint::Free(i) = c {
                *i = next;
                next += 1;
            }
        }
        let num_reduced = next + extra;
        for c in &map {
            if let DofConstraint::Affine { terms, .. } = c {
                if terms.iter().any(|&(i, _)| i >= num_reduced) {
                    return Err(Error::Assembly("affine term refers to a missing unknown".into()));
                }
            }
        }
        Ok(Self { map, num_reduced })
    }

    /// Full vector from reduced unknowns.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        self.map
            .iter()
            .map(|c| match c {
                DofConstraint::Free(i) => reduced[*i],
                DofConstraint::Fixed(v) => *v,
                DofConstraint::Affine { terms, constant } => {
                    constant + terms.iter().map(|&(i, a)| a * reduced[i]).sum::<f64>()
                }
            })
            .collect()
    }

    fn terms(&self, dof: usize) -> (&[(usize, f64)], f64, Option<[(usize, f64); 1]>) {
        match &self.map[dof] {
            DofConstraint::Free(i) => (&[], 0.0, Some([(*i, 1.0)])),
            DofConstraint::Fixed(v) => (&[], *v, None),
            DofConstraint::Affine { terms, constant } => (terms.as_slice(), *constant, None),
        }
    }
}

/// Accumulates reduced triplets from full-space element contributions.
pub struct ReducedAssembler<'a> {
    pub map: &'a ConstraintMap,
    pub triplets: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
}

impl<'a> ReducedAssembler<'a> {
    pub fn new(map: &'a ConstraintMap) -> Self {
        Self {
            map,
            triplets: Vec::new(),
            rhs: vec![0.0; map.num_reduced],
        }
    }

    /// Adds the element matrix `k` (row-major, `rows.len()`×`cols.len()`) and
    /// load `f` (per row) for full dofs `rows`/`cols`.
    pub fn add(&mut self, rows: &[usize], cols: &[usize], k: &[f64], f: Option<&[f64]>) {
        let nc = cols.len();
        let col_terms: Vec<_> = cols.iter().map(|&c| self.map.terms(c)).collect();
        for (a, &r) in rows.iter().enumerate() {
            let (rt, _, rfree) = self.map.terms(r);
            let row_terms: &[(usize, f64)] = match &rfree {
                Some(one) => one,
                None => rt,
            };
            if row_terms.is_empty() {
                continue;
            }
            let mut load = f.map_or(0.0, |f| f[a]);
            for (b, (ct, cconst, cfree)) in col_terms.iter().enumerate() {
                let kab = k[a * nc + b];
                if kab == 0.0 {
                    continue;
                }
                load -= kab * cconst;
                let cterms: &[(usize, f64)] = match cfree {
                    Some(one) => one,
                    None => ct,
                };
                for &(i, alpha) in row_terms {
                    for &(j, beta) in cterms {
                        self.triplets.push((i, j, alpha * beta * kab));
                    }
                }
            }
            for &(i, alpha) in row_terms {
                self.rhs[i] += alpha * load;
            }
        }
    }

    /// Adds a load vector only.
    pub fn add_load(&mut self, rows: &[usize], f: &[f64]) {
        for (a, &r) in rows.iter().enumerate() {
            let (rt, _, rfree) = self.map.terms(r);
            let row_terms: &[(usize, f64)] = match &rfree {
                Some(one) => one,
                None => rt,
            };
            for &(i, alpha) in row_terms {
                self.rhs[i] += alpha * f[a];
            }
        }
    }

    /// Adds directly in reduced numbering.
    pub fn add_reduced(&mut self, i: usize, j: usize, v: f64) {
        self.triplets.push((i, j, v));
    }

    pub fn finish(self) -> Result<SparseSystem> {
        let n = self.map.num_reduced;
        let mut m = CsrMatrix::from_triplets(n, n, &self.triplets)?;
        m.drop_zeros();
        SparseSystem::new(m, self.rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::solver::solve_direct;

    #[test]
    fn reduction_matches_dense_projection() {
        // Full 3×3 SPD system; dof 0 fixed, dof 2 = 2·u1 + 1.
        let k = [4.0, 1.0, 0.5, 1.0, 3.0, 1.0, 0.5, 1.0, 2.0];
        let f = [1.0, 2.0, 3.0];
        let map = ConstraintMap::from_kinds(
            vec![
                DofConstraint::Fixed(0.5),
                DofConstraint::Free(0),
                DofConstraint::Affine { terms: vec![(0, 2.0)], constant: 1.0 },
            ],
            0,
        )
        .unwrap();
        let mut asm = ReducedAssembler::new(&map);
        asm.add(&[0, 1, 2], &[0, 1, 2], &k, Some(&f));
        let s = asm.finish().unwrap();
        // Pᵀ K P with P = [0, 1, 2]ᵀ and c = [0.5, 0, 1].
        let p = [0.0, 1.0, 2.0];
        let c = [0.5, 0.0, 1.0];
        let mut ptkp = 0.0;
        let mut rhs = 0.0;
        for a in 0..3 {
            let kc: f64 = (0..3).map(|b| k[a * 3 + b] * c[b]).sum();
            rhs += p[a] * (f[a] - kc);
            for b in 0..3 {
                ptkp += p[a] * k[a * 3 + b] * p[b];
            }
        }
        assert!((s.matrix.get(0, 0) - ptkp).abs() < 1e-14);
        assert!((s.rhs[0] - rhs).abs() < 1e-14);
        let x = solve_direct(&s).unwrap();
        let full = map.expand(&x);
        assert_eq!(full[0], 0.5);
        assert!((full[2] - (2.0 * x[0] + 1.0)).abs() < 1e-15);
    }
}
