//! Exact diagonalization of the transverse-field Ising model
//! H = Σ_{i<j} J_ij σz⁽ⁱ⁾σz⁽ʲ⁾ + B Σ_i σx⁽ⁱ⁾ on small clusters.
//!
//! Spin up (σz = +1) is atomic level |1⟩ and spin down is |2⟩, so the
//! two-level basis index of a configuration uses bit 0 for up and the same
//! site-0-leftmost ordering as [`crate::qops`].

use ndarray::Array2;

use crate::model::LatticeGeometry;
use crate::qops::{eigensystem, hilbert_dim, ket_index, site_levels, Eigensystem, Operator};
use crate::{Error, Result};

pub const MAX_SITES: usize = 12;

/// Ground-manifold detection threshold relative to ‖H‖₁.
pub const DEGENERACY_RTOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct SpinModel {
    couplings: Array2<f64>,
    field: f64,
}

impl SpinModel {
    pub fn new(couplings: Array2<f64>, field: f64) -> Result<Self> {
        let n = couplings.nrows();
        if couplings.ncols() != n || n == 0 {
            return Err(Error::invalid(
                "coupling matrix must be square and non-empty",
            ));
        }
        if n > MAX_SITES {
            return Err(Error::Capacity(format!(
                "{n} sites exceeds the {MAX_SITES}-site limit"
            )));
        }
        for i in 0..n {
            if couplings[[i, i]] != 0.0 {
                return Err(Error::invalid("coupling matrix must have zero diagonal"));
            }
            for j in 0..n {
                if couplings[[i, j]] != couplings[[j, i]] || !couplings[[i, j]].is_finite() {
                    return Err(Error::invalid(format!(
                        "coupling ({i}, {j}) not symmetric/finite"
                    )));
                }
            }
        }
        if !field.is_finite() {
            return Err(Error::invalid("field must be finite"));
        }
        Ok(SpinModel { couplings, field })
    }

    /// J_ij = j · scale_ij for an atomic lattice geometry.
    pub fn from_geometry(g: &LatticeGeometry, j: f64, field: f64) -> Result<Self> {
        Self::new(g.scale().mapv(|s| s * j), field)
    }

    /// Square plaquette: edges J, diagonals J/8.
    pub fn square_plaquette(j: f64, field: f64) -> Self {
        Self::from_geometry(&LatticeGeometry::square(), j, field).expect("valid plaquette")
    }

    pub fn n_sites(&self) -> usize {
        self.couplings.nrows()
    }

    pub fn couplings(&self) -> &Array2<f64> {
        &self.couplings
    }

    pub fn field(&self) -> f64 {
        self.field
    }

    pub fn with_field(&self, field: f64) -> Self {
        SpinModel {
            couplings: self.couplings.clone(),
            field,
        }
    }
}

/// Dense real TFIM Hamiltonian in the σz product basis.
pub fn build_tfim(model: &SpinModel) -> Result<Operator> {
    let n = model.n_sites();
    let dim = hilbert_dim(2, n)?;
    let mut h = Array2::<f64>::zeros((dim, dim));
    for idx in 0..dim {
        let spins: Vec<f64> = site_levels(idx, n, 2)
            .into_iter()
            .map(|b| if b == 0 { 1.0 } else { -1.0 })
            .collect();
        let mut diag = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                diag += model.couplings[[i, j]] * spins[i] * spins[j];
            }
        }
        h[[idx, idx]] = diag;
        for site in 0..n {
            let flipped = idx ^ (1 << (n - 1 - site));
            h[[flipped, idx]] += model.field;
        }
    }
    Operator::from_real(h)
}

pub fn diagonalize(model: &SpinModel) -> Result<Eigensystem> {
    eigensystem(&build_tfim(model)?, true)
}

/// Ascending eigenvalues.
pub fn spectrum(model: &SpinModel) -> Result<Vec<f64>> {
    Ok(diagonalize(model)?.values.to_vec())
}

/// Number of eigenstates within the degeneracy tolerance of the ground energy.
pub fn ground_degeneracy(values: &[f64], h_norm: f64) -> usize {
    let tol = DEGENERACY_RTOL * h_norm.max(f64::MIN_POSITIVE);
    values.iter().take_while(|&&e| e - values[0] <= tol).count()
}

/// Population of the given basis states in the ground state, averaged
/// uniformly over an orthonormal basis of a degenerate ground manifold.
pub fn ground_population(model: &SpinModel, basis_states: &[usize]) -> Result<f64> {
    let h = build_tfim(model)?;
    let dim = h.dim();
    if let Some(&bad) = basis_states.iter().find(|&&k| k >= dim) {
        return Err(Error::invalid(format!("basis index {bad} out of range")));
    }
    let es = eigensystem(&h, true)?;
    let values = es.values.to_vec();
    let deg = ground_degeneracy(&values, h.norm1());
    let total: f64 = (0..deg)
        .map(|k| {
            basis_states
                .iter()
                .map(|&b| es.vectors[[b, k]].norm_sqr())
                .sum::<f64>()
        })
        .sum();
    Ok(total / deg as f64)
}

/// Ground-state population of the two Néel states |1212⟩ and |2121⟩ of a
/// four-site plaquette.
pub fn af_ground_population(model: &SpinModel) -> Result<f64> {
    if model.n_sites() != 4 {
        return Err(Error::invalid(
            "AF population is defined for the four-site plaquette",
        ));
    }
    ground_population(model, &neel_states()?)
}

/// Basis indices of |1212⟩ and |2121⟩ in the spin (two-level) basis.
pub fn neel_states() -> Result<[usize; 2]> {
    Ok([ket_index("1212", 2)?, ket_index("2121", 2)?])
}
