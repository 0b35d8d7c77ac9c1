use std::collections::BTreeMap;

use super::sparse::SparseSystem;
use crate::error::{Error, Result};

/// Merges (dof, value) pairs; the same dof twice is fine only with the
/// same value.
pub fn collect_constraints(dofs: &[usize], values: &[f64]) -> Result<BTreeMap<usize, f64>> {
    if dofs.len() != values.len() {
        return Err(Error::Assembly(format!(
            "{} constrained dofs but {} values",
            dofs.len(),
            values.len()
        )));
    }
    let mut map = BTreeMap::new();
    for (&d, &v) in dofs.iter().zip(values) {
        if let Some(&old) = map.get(&d) {
            if old != v {
                return Err(Error::Constraint {
                    dof: d,
                    first: old,
                    second: v,
                });
            }
        }
        map.insert(d, v);
    }
    Ok(map)
}

/// Symmetric elimination: constrained columns move to the right-hand side,
/// constrained rows become identity rows.
pub fn apply_dirichlet(system: &mut SparseSystem, dofs: &[usize], values: &[f64]) -> Result<()> {
    let map = collect_constraints(dofs, values)?;
    let n = system.dim();
    if let Some((&d, _)) = map.iter().next_back() {
        if d >= n {
            return Err(Error::Assembly(format!("constrained dof {d} out of range {n}")));
        }
    }
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for (&d, &v) in &map {
        fixed[d] = Some(v);
    }
    let a = &mut system.matrix;
    for i in 0..n {
        let (s, e) = (a.row_ptr[i], a.row_ptr[i + 1]);
        if let Some(g) = fixed[i] {
            for k in s..e {
                a.values[k] = if a.col_idx[k] == i { 1.0 } else { 0.0 };
            }
            system.rhs[i] = g;
            continue;
        }
        for k in s..e {
            if let Some(g) = fixed[a.col_idx[k]] {
                system.rhs[i] -= a.values[k] * g;
                a.values[k] = 0.0;
            }
        }
    }
    // Constrained rows must hold a unit diagonal even if it was not stored.
    let missing: Vec<usize> = map.keys().copied().filter(|&d| a.get(d, d) != 1.0).collect();
    if !missing.is_empty() {
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(a.nnz() + missing.len());
        for i in 0..n {
            let (c, v) = a.row(i);
            t.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, x)));
        }
        t.extend(missing.iter().map(|&d| (d, d, 1.0)));
        *a = super::sparse::CsrMatrix::from_triplets(n, n, &t)?;
    }
    a.drop_zeros();
    Ok(())
}
