//! Physical parameters and the N-atom Hamiltonian, Rydberg interaction and
//! spontaneous-decay channels.
//!
//! Each atom has ground levels |1⟩, |2⟩ and Rydberg levels |3⟩, |4⟩ (indices
//! 0..3). Level |1⟩ is driven to |3⟩ and |2⟩ to |4⟩; the cross couplings
//! |1⟩→|4⟩ and |2⟩→|3⟩ are absent. Both Rydberg levels decay to both ground
//! levels at rate γ/2 each.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::qops::{embed, hilbert_dim, site_levels, Operator};
use crate::{Error, Result};

pub const LOCAL_DIM: usize = 4;
pub const LEVEL_1: usize = 0;
pub const LEVEL_2: usize = 1;
pub const LEVEL_3: usize = 2;
pub const LEVEL_4: usize = 3;

/// Decay channels per site as (from, to), in the fixed channel order.
pub const DECAY_PAIRS: [(usize, usize); 4] = [
    (LEVEL_3, LEVEL_1),
    (LEVEL_3, LEVEL_2),
    (LEVEL_4, LEVEL_1),
    (LEVEL_4, LEVEL_2),
];

pub fn is_rydberg(level: usize) -> bool {
    level == LEVEL_3 || level == LEVEL_4
}

/// Drive, decay and interaction parameters in rad/µs (γ in 1/µs).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PumpParams {
    /// Rabi frequency |1⟩→|3⟩.
    pub omega1: f64,
    /// Rabi frequency |2⟩→|4⟩.
    pub omega2: f64,
    /// Ground-state coupling |1⟩↔|2⟩.
    pub omega_g: f64,
    /// Laser detuning from the single-atom Rydberg resonance.
    pub delta: f64,
    /// Total decay rate out of each Rydberg level.
    pub gamma: f64,
    /// Pair shift when both atoms occupy the same Rydberg level.
    pub delta33: f64,
    /// Pair shift when the atoms occupy different Rydberg levels.
    pub delta34: f64,
}

impl PumpParams {
    /// Equal Rabi frequencies on both transitions and the two-photon
    /// resonant detuning Δ = Δ33/2.
    pub fn symmetric(omega: f64, omega_g: f64, gamma: f64, delta33: f64, delta34: f64) -> Self {
        PumpParams {
            omega1: omega,
            omega2: omega,
            omega_g,
            delta: delta33 / 2.0,
            gamma,
            delta33,
            delta34,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("omega_g", self.omega_g),
            ("delta", self.delta),
            ("gamma", self.gamma),
            ("delta33", self.delta33),
            ("delta34", self.delta34),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!("{name} is not finite ({v})")));
        }
        if self.gamma < 0.0 {
            return Err(Error::invalid(format!(
                "gamma must be non-negative, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Site count and symmetric pairwise coupling multipliers.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeGeometry {
    scale: Array2<f64>,
}

impl LatticeGeometry {
    pub fn new(scale: Array2<f64>) -> Result<Self> {
        let n = scale.nrows();
        if scale.ncols() != n || n == 0 {
            return Err(Error::invalid(
                "coupling scale matrix must be square and non-empty",
            ));
        }
        for i in 0..n {
            if scale[[i, i]] != 0.0 {
                return Err(Error::invalid(format!("scale[{i}][{i}] must be zero")));
            }
            for j in 0..n {
                let v = scale[[i, j]];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::invalid(format!(
                        "scale[{i}][{j}] = {v} must be finite and >= 0"
                    )));
                }
                if v != scale[[j, i]] {
                    return Err(Error::invalid(format!(
                        "scale matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(LatticeGeometry { scale })
    }

    pub fn single() -> Self {
        LatticeGeometry {
            scale: Array2::zeros((1, 1)),
        }
    }

    pub fn pair() -> Self {
        Self::uniform(2)
    }

    /// Equilateral triangle, all couplings equal.
    pub fn triangle() -> Self {
        Self::uniform(3)
    }

    /// Square plaquette with sites ordered around the perimeter: edges couple
    /// with 1 and the two diagonals with 1/8 = (1/√2)⁶.
    pub fn square() -> Self {
        let e = 1.0;
        let d = 0.125;
        LatticeGeometry {
            scale: ndarray::array![
                [0.0, e, d, e],
                [e, 0.0, e, d],
                [d, e, 0.0, e],
                [e, d, e, 0.0]
            ],
        }
    }

    /// All-to-all equal couplings.
    pub fn uniform(n: usize) -> Self {
        LatticeGeometry {
            scale: Array2::from_shape_fn((n, n), |(i, j)| if i == j { 0.0 } else { 1.0 }),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.scale.nrows()
    }

    pub fn scale(&self) -> &Array2<f64> {
        &self.scale
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.scale[[i, j]]
    }

    pub fn dim(&self) -> Result<usize> {
        hilbert_dim(LOCAL_DIM, self.n_sites())
    }
}

/// One spontaneous-decay channel `|to⟩⟨from|` on `site`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpChannel {
    pub site: usize,
    pub from_level: usize,
    pub to_level: usize,
    pub rate: f64,
}

/// A decay channel together with its collapse operator `√rate · |to⟩⟨from|`.
#[derive(Clone, Debug)]
pub struct JumpOperator {
    pub channel: JumpChannel,
    pub op: Operator,
}

/// One-atom Hamiltonian in the rotating frame, rows ordered |1⟩..|4⟩.
pub fn single_atom_hamiltonian(p: &PumpParams) -> Operator {
    let h = |x: f64| C64::new(x / 2.0, 0.0);
    let mut m = Array2::<C64>::zeros((LOCAL_DIM, LOCAL_DIM));
    m[[LEVEL_1, LEVEL_2]] = h(p.omega_g);
    m[[LEVEL_2, LEVEL_1]] = h(p.omega_g);
    m[[LEVEL_1, LEVEL_3]] = h(p.omega1);
    m[[LEVEL_3, LEVEL_1]] = h(p.omega1);
    m[[LEVEL_2, LEVEL_4]] = h(p.omega2);
    m[[LEVEL_4, LEVEL_2]] = h(p.omega2);
    m[[LEVEL_3, LEVEL_3]] = C64::new(-p.delta, 0.0);
    m[[LEVEL_4, LEVEL_4]] = C64::new(-p.delta, 0.0);
    Operator::from_dense(m).expect("4x4 is square")
}

/// Diagonal of the pairwise Rydberg interaction over the product basis.
pub fn interaction_diagonal(p: &PumpParams, g: &LatticeGeometry) -> Result<Vec<f64>> {
    let n = g.n_sites();
    let dim = g.dim()?;
    Ok((0..dim)
        .map(|idx| {
            let levels = site_levels(idx, n, LOCAL_DIM);
            let mut e = 0.0;
            for i in 0..n {
                if !is_rydberg(levels[i]) {
                    continue;
                }
                for j in (i + 1)..n {
                    if !is_rydberg(levels[j]) {
                        continue;
                    }
                    let shift = if levels[i] == levels[j] {
                        p.delta33
                    } else {
                        p.delta34
                    };
                    e += g.coupling(i, j) * shift;
                }
            }
            e
        })
        .collect())
}

/// Rydberg pair interaction, a diagonal operator.
pub fn interaction_term(p: &PumpParams, g: &LatticeGeometry) -> Result<Operator> {
    if g.n_sites() < 2 {
        return Err(Error::invalid("interaction term needs at least two sites"));
    }
    let diag: Vec<C64> = interaction_diagonal(p, g)?
        .into_iter()
        .map(|x| C64::new(x, 0.0))
        .collect();
    let op = Operator::diagonal_from(&diag);
    Ok(if g.n_sites() >= crate::qops::SPARSE_SITE_THRESHOLD {
        op
    } else {
        op.into_dense()
    })
}

/// Σ_sites H_j plus the pair interaction.
pub fn total_hamiltonian(p: &PumpParams, g: &LatticeGeometry) -> Result<Operator> {
    let n = g.n_sites();
    let h1 = single_atom_hamiltonian(p);
    let mut total = if n >= 2 {
        interaction_term(p, g)?
    } else {
        Operator::zeros(LOCAL_DIM)
    };
    for site in 0..n {
        total = total.add(&embed(&h1, site, n, LOCAL_DIM)?)?;
    }
    Ok(total)
}

/// All decay channels in site-major order, then [`DECAY_PAIRS`] order.
pub fn jump_channels(p: &PumpParams, g: &LatticeGeometry) -> Vec<JumpChannel> {
    (0..g.n_sites())
        .flat_map(|site| {
            DECAY_PAIRS
                .iter()
                .map(move |&(from_level, to_level)| JumpChannel {
                    site,
                    from_level,
                    to_level,
                    rate: p.gamma / 2.0,
                })
        })
        .collect()
}

/// Collapse operators `√(γ/2)·|to⟩⟨from|` embedded at each site.
pub fn jump_operators(p: &PumpParams, g: &LatticeGeometry) -> Result<Vec<JumpOperator>> {
    if p.gamma < 0.0 {
        return Err(Error::invalid("gamma must be non-negative"));
    }
    let n = g.n_sites();
    jump_channels(p, g)
        .into_iter()
        .map(|channel| {
            let local = Operator::from_triplets(
                LOCAL_DIM,
                vec![(
                    channel.to_level,
                    channel.from_level,
                    C64::new(channel.rate.sqrt(), 0.0),
                )],
            )?;
            Ok(JumpOperator {
                channel,
                op: embed(&local, channel.site, n, LOCAL_DIM)?,
            })
        })
        .collect()
}

/// Number of atoms in a Rydberg level, per basis state.
pub fn rydberg_count(g: &LatticeGeometry) -> Result<Vec<usize>> {
    let n = g.n_sites();
    Ok((0..g.dim()?)
        .map(|idx| {
            site_levels(idx, n, LOCAL_DIM)
                .into_iter()
                .filter(|&l| is_rydberg(l))
                .count()
        })
        .collect())
}
