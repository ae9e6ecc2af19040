use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Activation {
    pub shift: usize,
    pub value: f64,
}

/// Sparse activations of every basis for one sweep.
///
/// `atoms[j]` lists the nonzero entries of `s^(j)` in strictly increasing
/// shift order; all other shifts in `0..shifts` are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseCode {
    shifts: usize,
    atoms: Vec<Vec<Activation>>,
}

impl SparseCode {
    pub fn zeros(n_bases: usize, shifts: usize) -> Self {
        SparseCode {
            shifts,
            atoms: vec![Vec::new(); n_bases],
        }
    }

    pub fn from_atoms(shifts: usize, atoms: Vec<Vec<Activation>>) -> Result<Self> {
        for (j, list) in atoms.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for a in list {
                if a.shift >= shifts {
                    return Err(Error::invalid(format!("basis {j}: shift {} out of range", a.shift)));
                }
                if prev.is_some_and(|p| p >= a.shift) {
                    return Err(Error::invalid(format!("basis {j}: shifts not strictly increasing")));
                }
                if !a.value.is_finite() || a.value == 0.0 {
                    return Err(Error::invalid(format!("basis {j}: activation must be finite and nonzero")));
                }
                prev = Some(a.shift);
            }
        }
        Ok(SparseCode { shifts, atoms })
    }

    /// Keeps the nonzero entries of dense per-basis vectors.
    pub fn from_dense(dense: &[Vec<f64>]) -> Self {
        let shifts = dense.first().map_or(0, Vec::len);
        let atoms = dense
            .iter()
            .map(|s| {
                s.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(shift, &value)| Activation { shift, value })
                    .collect()
            })
            .collect();
        SparseCode { shifts, atoms }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.atoms
            .iter()
            .map(|list| {
                let mut s = vec![0.0; self.shifts];
                for a in list {
                    s[a.shift] = a.value;
                }
                s
            })
            .collect()
    }

    pub fn n_bases(&self) -> usize {
        self.atoms.len()
    }

    pub fn shifts(&self) -> usize {
        self.shifts
    }

    pub fn atoms(&self, j: usize) -> &[Activation] {
        &self.atoms[j]
    }

    pub fn iter_bases(&self) -> impl Iterator<Item = &[Activation]> {
        self.atoms.iter().map(Vec::as_slice)
    }

    pub fn nnz(&self) -> usize {
        self.atoms.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.nnz() == 0
    }

    pub fn l1_norm(&self) -> f64 {
        self.atoms.iter().flatten().map(|a| a.value.abs()).sum()
    }

    pub fn basis_l1(&self, j: usize) -> f64 {
        self.atoms[j].iter().map(|a| a.value.abs()).sum()
    }
}
